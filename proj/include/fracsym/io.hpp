#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fracsym/domain.hpp"
#include "fracsym/elliptic.hpp"
#include "fracsym/extension.hpp"
#include "fracsym/fraclap.hpp"
#include "fracsym/parabolic.hpp"
#include "fracsym/rearrange.hpp"
#include "fracsym/spectral.hpp"

namespace fracsym {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Domain JSON: {dim, box, spacing, active_cell_indices}
// ---------------------------------------------------------------------------

inline json domain_to_json(const Domain& d) {
  json j;
  j["dim"] = d.dim;
  if (d.dim == 1) j["box"] = {d.lo[0], d.hi[0]};
  else j["box"] = {{d.lo[0], d.hi[0]}, {d.lo[1], d.hi[1]}};
  j["spacing"] = d.spacing;
  j["nx"] = d.nx;
  j["ny"] = d.ny;
  j["active_cell_indices"] = d.cells;
  return j;
}

inline Domain domain_from_json(const json& j) {
  Domain d;
  d.dim = j.at("dim").get<int>();
  detail::require(d.dim == 1 || d.dim == 2, "domain json: dim must be 1 or 2");
  if (d.dim == 1) {
    d.lo = {j.at("box").at(0).get<double>(), 0.0};
    d.hi = {j.at("box").at(1).get<double>(), 0.0};
  } else {
    d.lo = {j.at("box").at(0).at(0).get<double>(), j.at("box").at(1).at(0).get<double>()};
    d.hi = {j.at("box").at(0).at(1).get<double>(), j.at("box").at(1).at(1).get<double>()};
  }
  d.spacing = j.at("spacing").get<double>();
  d.nx = j.at("nx").get<std::int64_t>();
  d.ny = j.at("ny").get<std::int64_t>();
  d.cells = j.at("active_cell_indices").get<std::vector<std::int64_t>>();
  d.finalize();
  return d;
}

inline void write_domain(const std::string& path, const Domain& d) {
  std::ofstream out(path);
  detail::require(out.good(), "cannot open for writing: " + path);
  out << domain_to_json(d).dump(2) << "\n";
}

inline Domain read_domain(const std::string& path) {
  std::ifstream in(path);
  detail::require(in.good(), "cannot open: " + path);
  json j;
  in >> j;
  return domain_from_json(j);
}

/// Accepts either a domain JSON path or an inline shape spec like
/// "disk:r=1,n=64".
inline Domain load_domain_arg(const std::string& arg) {
  if (std::filesystem::exists(arg) || arg.ends_with(".json")) return read_domain(arg);
  return make_shape(arg);
}

// ---------------------------------------------------------------------------
// Field CSV: header comment ties the file to its domain by hash; 17
// significant digits round-trip doubles bit-exactly.
// ---------------------------------------------------------------------------

inline std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_field(const std::string& path, const ScalarField& f) {
  std::ofstream out(path);
  detail::require(out.good(), "cannot open for writing: " + path);
  const Domain& d = *f.dom;
  out << "# fracsym-field domain=" << d.hash() << " dim=" << d.dim
      << " spacing=" << format_g17(d.spacing) << " cells=" << d.size() << "\n";
  out << (d.dim == 1 ? "cell_index,x,value" : "cell_index,x,y,value") << "\n";
  for (std::size_t k = 0; k < d.size(); ++k) {
    auto c = d.center(k);
    out << k << ',' << format_g17(c[0]);
    if (d.dim == 2) out << ',' << format_g17(c[1]);
    out << ',' << format_g17(f.values[static_cast<Eigen::Index>(k)]) << "\n";
  }
}

struct RawField {
  std::string domain_hash;
  int dim = 1;
  double spacing = 0.0;
  std::vector<double> values;
  double cell_measure() const { return dim == 1 ? spacing : spacing * spacing; }
};

inline RawField read_field_raw(const std::string& path) {
  std::ifstream in(path);
  detail::require(in.good(), "cannot open: " + path);
  RawField rf;
  std::string line;
  detail::require(static_cast<bool>(std::getline(in, line)), "empty field file: " + path);
  detail::require(line.rfind("# fracsym-field", 0) == 0, "malformed field file header: " + path);
  std::stringstream hs(line.substr(std::string("# fracsym-field").size()));
  std::string tok;
  std::size_t declared = 0;
  while (hs >> tok) {
    auto eq = tok.find('=');
    detail::require(eq != std::string::npos, "malformed field header token: " + tok);
    std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (key == "domain") rf.domain_hash = val;
    else if (key == "dim") rf.dim = std::stoi(val);
    else if (key == "spacing") rf.spacing = std::stod(val);
    else if (key == "cells") declared = std::stoul(val);
  }
  detail::require(static_cast<bool>(std::getline(in, line)), "field file missing column header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto last = line.rfind(',');
    detail::require(last != std::string::npos, "malformed field row: " + line);
    rf.values.push_back(std::stod(line.substr(last + 1)));
  }
  detail::require(!rf.values.empty(), "field file has no rows: " + path);
  detail::require(declared == 0 || declared == rf.values.size(),
                  "field row count disagrees with header");
  return rf;
}

inline ScalarField read_field(const std::string& path, DomainPtr dom) {
  RawField rf = read_field_raw(path);
  detail::require(rf.domain_hash == dom->hash(),
                  "field/domain hash mismatch: the file belongs to a different domain");
  detail::require(rf.values.size() == dom->size(), "field row count mismatch");
  Eigen::VectorXd v(static_cast<Eigen::Index>(rf.values.size()));
  for (std::size_t i = 0; i < rf.values.size(); ++i) v[static_cast<Eigen::Index>(i)] = rf.values[i];
  return ScalarField(std::move(dom), std::move(v));
}

// ---------------------------------------------------------------------------
// Profile CSV: rows (s, value) with the left breakpoint of each step and a
// terminal (total, 0) row.
// ---------------------------------------------------------------------------

inline void write_profile(const std::string& path, const Profile& p) {
  std::ofstream out(path);
  detail::require(out.good(), "cannot open for writing: " + path);
  out << "s,value\n";
  for (std::size_t k = 0; k < p.values.size(); ++k)
    out << format_g17(p.breaks[k]) << ',' << format_g17(p.values[k]) << "\n";
  out << format_g17(p.total()) << ",0\n";
}

inline Profile read_profile(const std::string& path) {
  std::ifstream in(path);
  detail::require(in.good(), "cannot open: " + path);
  std::string line;
  std::getline(in, line);
  Profile p;
  std::vector<std::pair<double, double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto comma = line.find(',');
    rows.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
  }
  detail::require(rows.size() >= 2, "profile file needs at least two rows");
  for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
    p.breaks.push_back(rows[k].first);
    p.values.push_back(rows[k].second);
  }
  p.breaks.push_back(rows.back().first);
  return p;
}

// ---------------------------------------------------------------------------
// Matrix file: one JSON header line + row-major little-endian doubles.
// ---------------------------------------------------------------------------

inline void write_matrix(const std::string& path, const OperatorMatrix& op) {
  std::ofstream out(path, std::ios::binary);
  detail::require(out.good(), "cannot open for writing: " + path);
  json hdr;
  hdr["format"] = "fracsym-matrix";
  hdr["n"] = op.n();
  hdr["sigma"] = op.sigma;
  hdr["kind"] = op.kind == OperatorKind::Restricted ? "restricted" : "spectral";
  hdr["domain_hash"] = op.dom->hash();
  hdr["domain"] = domain_to_json(*op.dom);
  out << hdr.dump() << "\n";
  for (Eigen::Index i = 0; i < op.n(); ++i)
    out.write(reinterpret_cast<const char*>(op.A.row(i).eval().data()),
              static_cast<std::streamsize>(sizeof(double)) * op.n());
  if (op.killing.size() > 0)
    out.write(reinterpret_cast<const char*>(op.killing.data()),
              static_cast<std::streamsize>(sizeof(double)) * op.n());
}

inline OperatorMatrix read_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  detail::require(in.good(), "cannot open: " + path);
  std::string line;
  std::getline(in, line);
  json hdr = json::parse(line);
  detail::require(hdr.value("format", "") == "fracsym-matrix", "not a fracsym matrix file");
  OperatorMatrix op;
  Eigen::Index n = hdr.at("n").get<Eigen::Index>();
  op.sigma = hdr.at("sigma").get<double>();
  op.kind = hdr.at("kind").get<std::string>() == "restricted" ? OperatorKind::Restricted
                                                              : OperatorKind::Spectral;
  op.dom = std::make_shared<Domain>(domain_from_json(hdr.at("domain")));
  detail::require(op.dom->hash() == hdr.at("domain_hash").get<std::string>(),
                  "matrix file domain hash mismatch");
  op.A.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd row(n);
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(sizeof(double)) * n);
    detail::require(in.good(), "matrix file truncated");
    op.A.row(i) = row;
  }
  if (op.kind == OperatorKind::Restricted) {
    op.killing.resize(n);
    in.read(reinterpret_cast<char*>(op.killing.data()),
            static_cast<std::streamsize>(sizeof(double)) * n);
    detail::require(in.good(), "matrix file truncated (killing block)");
  }
  return op;
}

// ---------------------------------------------------------------------------
// Report JSON fragments
// ---------------------------------------------------------------------------

inline json to_json(const ComparisonReport& r) {
  json j;
  j["verdict"] = to_string(r.verdict);
  j["max_overshoot"] = r.max_overshoot;
  j["max_undershoot"] = r.max_undershoot;
  j["tolerance"] = r.tolerance;
  if (r.radial_check_ran) j["radial_verdict"] = to_string(r.radial_verdict);
  return j;
}

inline json to_json(const FKEntry& e) {
  json j;
  j["shape"] = e.shape;
  j["sigma"] = e.sigma;
  j["n"] = e.n;
  j["lambda1_omega"] = e.lambda1_omega;
  j["lambda1_ball"] = e.lambda1_ball;
  j["ratio"] = e.ratio;
  j["tol_grid"] = e.tol_grid;
  j["decay_fit_lambda1"] = e.decay_fit_lambda1;
  j["measure_omega"] = e.measure_omega;
  j["measure_ball"] = e.measure_ball;
  if (e.lambda1_spectral_variant > 0.0)
    j["lambda1_spectral_variant"] = e.lambda1_spectral_variant;
  return j;
}

inline json to_json(const SpectralResult& r) {
  json j;
  j["method"] = r.method;
  j["lambda"] = std::vector<double>(r.lambda.data(), r.lambda.data() + r.lambda.size());
  if (r.fit_residual > 0) j["fit_residual"] = r.fit_residual;
  return j;
}

inline json to_json(const ParabolicReport& r) {
  json j;
  j["tolerance"] = r.tolerance;
  j["all_less_equal"] = r.all_less_equal;
  json rows = json::array();
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    json row;
    row["t"] = r.times[k];
    row["verdict"] = to_string(r.verdicts[k]);
    row["max_overshoot"] = r.max_overshoots[k];
    row["norms_u"] = r.norms_u[k];
    row["norms_v"] = r.norms_v[k];
    rows.push_back(row);
  }
  j["times"] = rows;
  return j;
}

}  // namespace fracsym
