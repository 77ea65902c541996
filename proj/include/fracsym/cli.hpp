#pragma once

#include <CLI11.hpp>
#include <iostream>
#include <string>

#include "fracsym/experiments.hpp"
#include "fracsym/io.hpp"

namespace fracsym::cli {

// Exit codes: 0 success, 1 usage, 2 validation, 3 numerical failure,
// 4 invariant/suite failure.
enum ExitCode { Ok = 0, Usage = 1, Validation = 2, Numerical = 3, SuiteFailure = 4 };

inline int run(int argc, const char* const* argv) {
  CLI::App app{"fracsym: restricted fractional Laplacian, symmetrization and Faber-Krahn toolkit"};
  app.require_subcommand(1);

  // assemble
  std::string a_domain, a_out, a_kind = "restricted";
  double a_sigma = 1.0;
  auto* assemble = app.add_subcommand("assemble", "assemble the operator matrix for a domain");
  assemble->add_option("--domain", a_domain, "domain json path or shape spec")->required();
  assemble->add_option("--sigma", a_sigma, "fractional order in (0,2)")->required();
  assemble->add_option("--kind", a_kind, "restricted | spectral");
  assemble->add_option("--out", a_out, "output matrix file")->required();

  // rearrange
  std::string r_field, r_emit, r_domain;
  auto* rearr = app.add_subcommand("rearrange", "decreasing rearrangement of a field");
  rearr->add_option("--field", r_field, "field csv")->required();
  rearr->add_option("--emit", r_emit, "output profile csv")->required();
  rearr->add_option("--domain", r_domain, "optional domain json to enforce the hash pairing");

  // elliptic
  std::string e_domain, e_B = "linear:0", e_f, e_report;
  double e_sigma = 1.0, e_eps = -1.0;
  bool e_compare = false;
  auto* ell = app.add_subcommand("elliptic", "solve the Dirichlet problem, optionally compare "
                                             "against the symmetrized one");
  ell->add_option("--domain", e_domain)->required();
  ell->add_option("--sigma", e_sigma)->required();
  ell->add_option("--B", e_B, "linear:<c> | rational | power:m=<m>[,delta=<d>]");
  ell->add_option("--f", e_f, "data field csv")->required();
  ell->add_option("--report", e_report, "output json");
  ell->add_flag("--compare-symmetrized", e_compare, "run the concentration comparison");
  ell->add_option("--epsilon-lift", e_eps,
                  "solve the nonhomogeneous problem with exterior value eps (linear B)");

  // parabolic
  std::string p_domain, p_u0, p_out;
  double p_sigma = 1.0, p_T = 1.0, p_h = 0.01;
  int p_save = 1;
  bool p_compare = false;
  auto* par = app.add_subcommand("parabolic", "implicit time stepping of u' + Au = 0");
  par->add_option("--domain", p_domain)->required();
  par->add_option("--sigma", p_sigma)->required();
  par->add_option("--u0", p_u0, "initial field csv")->required();
  par->add_option("--T", p_T)->required();
  par->add_option("--h", p_h)->required();
  par->add_option("--save-every", p_save);
  par->add_option("--out", p_out, "output directory for trajectory csv + index json");
  par->add_flag("--compare-symmetrized", p_compare);

  // eig
  std::string g_matrix;
  int g_k = 4;
  auto* eig = app.add_subcommand("eig", "lowest eigenpairs of a stored matrix");
  eig->add_option("--matrix", g_matrix)->required();
  eig->add_option("--k", g_k);

  // faber-krahn
  std::string fk_shapes, fk_out;
  std::string fk_sigmas = "0.5,1,1.5";
  std::int64_t fk_n = 48;
  bool fk_decay = true;
  auto* fk = app.add_subcommand("faber-krahn", "lambda1 sweep over shapes and orders");
  fk->add_option("--shapes", fk_shapes, "shapes json (array of shape specs) or inline list");
  fk->add_option("--sigmas", fk_sigmas);
  fk->add_option("--n", fk_n);
  fk->add_option("--out", fk_out, "output json")->required();
  fk->add_flag("--decay-fit,!--no-decay-fit", fk_decay, "cross-check lambda1 by the decay route");

  // extension
  std::string x_domain, x_mode = "dtn-check", x_f, x_out;
  double x_sigma = 1.0;
  int x_levels = 64;
  auto* ext = app.add_subcommand("extension", "half-space extension solves and diagnostics");
  ext->add_option("--domain", x_domain)->required();
  ext->add_option("--sigma", x_sigma)->required();
  ext->add_option("--mode", x_mode, "dtn-check | solve | z-diagnostic");
  ext->add_option("--f", x_f, "data field csv (solve / z-diagnostic)");
  ext->add_option("--levels", x_levels, "z levels");
  ext->add_option("--out", x_out, "output json");

  // run
  std::string run_config;
  auto* runner = app.add_subcommand("run", "run a named experiment suite from a config file");
  runner->add_option("--config", run_config)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? Ok : Usage;
  }

  try {
    if (*assemble) {
      Domain d = load_domain_arg(a_domain);
      OperatorMatrix op = a_kind == "spectral" ? assemble_spectral(d, a_sigma)
                                               : assemble_restricted(d, a_sigma);
      write_matrix(a_out, op);
      std::cout << json{{"n", op.n()}, {"sigma", op.sigma}, {"kind", a_kind},
                        {"domain_hash", op.dom->hash()}, {"out", a_out}}
                       .dump()
                << "\n";
      return Ok;
    }
    if (*rearr) {
      RawField rf = read_field_raw(r_field);
      if (!r_domain.empty()) {
        Domain d = read_domain(r_domain);
        detail::require(d.hash() == rf.domain_hash, "field/domain hash mismatch");
      }
      std::vector<double> vals = rf.values;
      for (double& v : vals) v = std::abs(v);
      std::sort(vals.begin(), vals.end(), std::greater<>());
      write_profile(r_emit, profile_from_sorted(std::move(vals), rf.cell_measure()));
      return Ok;
    }
    if (*ell) {
      Domain d = load_domain_arg(e_domain);
      auto dom = std::make_shared<Domain>(d);
      ScalarField f = read_field(e_f, dom);
      Nonlinearity B = Nonlinearity::parse(e_B);
      json out;
      if (e_eps >= 0.0) {
        detail::require(B.is_linear(), "the epsilon lift is available for linear B only");
        OperatorMatrix A = assemble_restricted(d, e_sigma);
        ScalarField v = solve_linear_lifted(A, B.linear_coef(), f, e_eps);
        out["solution_linf"] = v.values.cwiseAbs().maxCoeff();
        out["epsilon"] = e_eps;
      } else if (e_compare) {
        ComparisonReport rep = elliptic_concentration_experiment(d, e_sigma, B, f);
        out = to_json(rep);
        if (!e_report.empty()) {
          write_profile(e_report + ".profile_v.csv", rep.profile_v);
          write_profile(e_report + ".profile_V.csv", rep.profile_V);
          out["profiles"] = {e_report + ".profile_v.csv", e_report + ".profile_V.csv"};
        }
      } else {
        OperatorMatrix A = assemble_restricted(d, e_sigma);
        ScalarField v = solve_elliptic(A, B, f);
        out["solution_linf"] = v.values.cwiseAbs().maxCoeff();
        out["solution_l2"] = v.norm_p(2);
      }
      if (!e_report.empty()) {
        std::ofstream o(e_report);
        o << out.dump(2) << "\n";
      }
      std::cout << out.dump() << "\n";
      return Ok;
    }
    if (*par) {
      Domain d = load_domain_arg(p_domain);
      auto dom = std::make_shared<Domain>(d);
      ScalarField u0 = read_field(p_u0, dom);
      OperatorMatrix A = assemble_restricted(d, p_sigma);
      json out;
      if (p_compare) {
        ScalarField ub0 = spherical_rearrangement(u0);
        ParabolicReport rep = parabolic_concentration_experiment(
            d, p_sigma, u0, source_zero(A.n()), ub0,
            source_zero(static_cast<Eigen::Index>(ub0.dom->size())), p_T, p_h, p_save);
        out = to_json(rep);
        if (!rep.all_less_equal) {
          std::cout << out.dump() << "\n";
          return SuiteFailure;
        }
      } else {
        Trajectory tr = evolve(A, u0, source_zero(A.n()), p_T, p_h, p_save);
        out["times"] = tr.times;
        if (!p_out.empty()) {
          std::filesystem::create_directories(p_out);
          json index;
          index["h"] = tr.h;
          json files = json::array();
          for (std::size_t k = 0; k < tr.times.size(); ++k) {
            char name[64];
            std::snprintf(name, sizeof name, "state_%04zu.csv", k);
            write_field(p_out + "/" + name, ScalarField(dom, tr.states[k]));
            files.push_back({{"t", tr.times[k]}, {"file", name}});
          }
          index["states"] = files;
          std::ofstream o(p_out + "/index.json");
          o << index.dump(2) << "\n";
          out["out_dir"] = p_out;
        }
      }
      std::cout << out.dump() << "\n";
      return Ok;
    }
    if (*eig) {
      OperatorMatrix op = read_matrix(g_matrix);
      SpectralResult r = eigensolve(op, g_k);
      std::cout << to_json(r).dump() << "\n";
      return Ok;
    }
    if (*fk) {
      std::vector<ShapeSpec> shapes;
      if (fk_shapes.empty()) {
        for (const char* s :
             {"union-intervals:a1=0,b1=1,a2=2,b2=3", "square:s=1", "lshape:s=1",
              "ellipse:a=0.6,b=0.3", "annulus:R=0.5,r=0.25", "disk:r=0.5"})
          shapes.push_back(parse_shape_spec(s));
      } else if (std::filesystem::exists(fk_shapes)) {
        std::ifstream in(fk_shapes);
        json j;
        in >> j;
        for (const auto& item : j)
          shapes.push_back(parse_shape_spec(item.get<std::string>()));
      } else {
        std::stringstream ss(fk_shapes);
        std::string item;
        while (std::getline(ss, item, ';')) shapes.push_back(parse_shape_spec(item));
      }
      std::vector<double> sigmas;
      std::stringstream ss(fk_sigmas);
      std::string item;
      while (std::getline(ss, item, ',')) sigmas.push_back(std::stod(item));
      ExperimentConfig wcfg;
      auto entries = faber_krahn_sweep(shapes, sigmas, fk_n, fk_decay, wcfg.resolved_workers());
      json arr = json::array();
      for (const auto& e : entries) arr.push_back(to_json(e));
      std::ofstream o(fk_out);
      o << arr.dump(2) << "\n";
      std::cout << arr.dump() << "\n";
      return Ok;
    }
    if (*ext) {
      Domain d = load_domain_arg(x_domain);
      auto dom = std::make_shared<Domain>(d);
      json out;
      ExtensionConfig ec;
      ec.levels = x_levels;
      if (x_mode == "dtn-check") {
        Eigen::VectorXd g(static_cast<Eigen::Index>(d.size()));
        double cx = 0.5 * (d.lo[0] + d.hi[0]);
        double half = 0.5 * (d.hi[0] - d.lo[0]);
        for (std::size_t k = 0; k < d.size(); ++k) {
          double x = (d.center(k)[0] - cx) / half;
          double q = 1.0 - x * x;
          g[static_cast<Eigen::Index>(k)] = q > 1e-12 ? std::exp(-1.0 / q) * M_E : 0.0;
        }
        ScalarField gf(dom, g);
        ExtensionField w = solve_extension_dirichlet(d, x_sigma, gf, ec);
        ScalarField t = dtn_trace(w);
        OperatorMatrix A = assemble_restricted(d, x_sigma);
        Eigen::VectorXd ref = A.A * gf.values;
        out["rel_l2_error"] = std::sqrt((t.values - ref).squaredNorm() / ref.squaredNorm());
        out["decay_ok"] = w.decay_ok;
      } else if (x_mode == "solve") {
        detail::require(!x_f.empty(), "--mode solve needs --f");
        ScalarField f = read_field(x_f, dom);
        ExtensionField w = solve_extension_neumann(d, x_sigma, f, Nonlinearity::linear(0.0), ec);
        out["trace_linf"] = w.values.col(0).cwiseAbs().maxCoeff();
        out["decay_ok"] = w.decay_ok;
      } else if (x_mode == "z-diagnostic") {
        detail::require(!x_f.empty(), "--mode z-diagnostic needs --f");
        ScalarField f = read_field(x_f, dom);
        Domain ball = schwarz_ball(d);
        ScalarField fsharp = spherical_rearrangement(f);
        Nonlinearity B = Nonlinearity::linear(1.0);
        double diam = std::max(d.diameter(), ball.diameter());
        ec.zmax = 8.0 * diam;
        ec.box_halfwidth = 0.5 * (d.hi[0] - d.lo[0]) + 3.0 * diam;
        ExtensionField w = solve_extension_neumann(d, x_sigma, f, B, ec);
        ExtensionField psi = solve_extension_neumann(ball, x_sigma, fsharp, B, ec);
        ZDiagnostic zd = z_diagnostic(w, psi, B);
        out["max_Z"] = zd.max_Z;
        out["min_boundary_slack"] = zd.min_boundary_slack;
        out["max_interior_residual"] = zd.max_interior_residual;
      } else {
        throw std::invalid_argument("unknown extension mode: " + x_mode);
      }
      if (!x_out.empty()) {
        std::ofstream o(x_out);
        o << out.dump(2) << "\n";
      }
      std::cout << out.dump() << "\n";
      return Ok;
    }
    if (*runner) {
      ExperimentConfig cfg = parse_config_file(run_config);
      SuiteReport rep = run_suite(cfg);
      std::cout << json{{"suite", rep.suite},
                        {"pass", rep.pass},
                        {"cases", rep.cases.size()},
                        {"failed", rep.failed}}
                       .dump()
                << "\n";
      return rep.pass ? Ok : SuiteFailure;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return Validation;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return Numerical;
  }
  return Usage;
}

}  // namespace fracsym::cli
