#include <catch2/catch.hpp>

#include <sstream>

#include "fracsym/experiments.hpp"

using namespace fracsym;

TEST_CASE("config parsing", "[experiments]") {
  std::stringstream in;
  in << "suite = faber-krahn\n"
     << "seed = 17\n"
     << "sigmas = 0.5, 1.0\n"
     << "fk_n = 24\n"
     << "fk_shapes = disk:r=0.5; square:s=1\n"
     << "workers = 2\n";
  ExperimentConfig cfg = parse_config(in);
  CHECK(cfg.suite == "faber-krahn");
  CHECK(cfg.seed == 17);
  REQUIRE(cfg.sigmas.size() == 2);
  CHECK(cfg.sigmas[1] == Approx(1.0));
  REQUIRE(cfg.fk_shapes.size() == 2);
  CHECK(cfg.workers == 2);

  std::stringstream bad;
  bad << "suite = x\nunknown_key = 1\n";
  CHECK_THROWS_AS(parse_config(bad), std::invalid_argument);

  std::stringstream nosuite;
  nosuite << "seed = 1\n";
  CHECK_THROWS_AS(parse_config(nosuite), std::invalid_argument);
}

TEST_CASE("resource caps are enforced", "[experiments]") {
  ExperimentConfig cfg;
  cfg.suite = "rearrangement-properties";
  cfg.n_2d = 128;  // above the documented cap
  CHECK_THROWS_AS(run_suite(cfg), std::invalid_argument);
  cfg.n_2d = 32;
  cfg.n_1d = 8192;
  CHECK_THROWS_AS(run_suite(cfg), std::invalid_argument);
  CHECK_THROWS_AS(
      [&] {
        ExperimentConfig c;
        c.suite = "no-such-suite";
        run_suite(c);
      }(),
      std::invalid_argument);
}

TEST_CASE("same seed gives byte-identical reports", "[experiments]") {
  ExperimentConfig cfg;
  cfg.suite = "rearrangement-properties";
  cfg.seed = 5;
  cfg.trials = 16;
  cfg.n_1d = 64;
  cfg.n_2d = 12;
  cfg.workers = 4;
  std::string a = run_suite(cfg).to_json().dump();
  std::string b = run_suite(cfg).to_json().dump();
  CHECK(a == b);
  cfg.seed = 6;
  std::string c = run_suite(cfg).to_json().dump();
  CHECK(a != c);
}

TEST_CASE("ball-only faber-krahn suite gives unit ratios", "[experiments]") {
  ExperimentConfig cfg;
  cfg.suite = "faber-krahn";
  cfg.fk_n = 16;
  cfg.fk_shapes = {"disk:r=0.5"};
  cfg.sigmas = {0.8};
  SuiteReport rep = run_suite(cfg);
  CHECK(rep.pass);
  for (const auto& c : rep.cases) {
    double ratio = c.data.at("ratio").get<double>();
    double tol = c.data.at("tol_grid").get<double>();
    CHECK(std::abs(ratio - 1.0) <= 3.0 * tol);
  }
}

TEST_CASE("itd suite passes", "[experiments]") {
  ExperimentConfig cfg;
  cfg.suite = "itd-convergence";
  SuiteReport rep = run_suite(cfg);
  CHECK(rep.pass);
}

TEST_CASE("report emission", "[experiments]") {
  ExperimentConfig cfg;
  cfg.suite = "rearrangement-properties";
  cfg.trials = 6;
  cfg.n_1d = 64;
  cfg.n_2d = 12;
  SuiteReport rep = run_suite(cfg);

  auto tmp = std::filesystem::temp_directory_path() / "fracsym_emit_test";
  std::filesystem::create_directories(tmp);
  emit_report(rep, "json", (tmp / "r.json").string());
  emit_report(rep, "csv", (tmp / "r.csv").string());
  emit_report(rep, "markdown", (tmp / "r.md").string());

  {
    std::ifstream in(tmp / "r.json");
    json j;
    in >> j;
    CHECK(j["suite"] == "rearrangement-properties");
    CHECK(j["cases"].size() == 6);
  }
  {
    std::ifstream in(tmp / "r.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "case,cells,dim,pass");
    long rows = 0;
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) ++rows;
    CHECK(rows == 6);
  }
  {
    std::ifstream in(tmp / "r.md");
    std::string all(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>{});
    CHECK(all.find("| case |") != std::string::npos);
    CHECK(all.find("result: pass") != std::string::npos);
  }
  CHECK_THROWS_AS(emit_report(rep, "yaml", (tmp / "r.yaml").string()), std::invalid_argument);
  std::filesystem::remove_all(tmp);
}
