#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fracsym/io.hpp"

namespace fracsym {

struct ExperimentConfig {
  std::string suite;
  std::uint64_t seed = 1;
  std::string out_dir;
  int workers = 0;      // 0: FRACSYM_WORKERS env or hardware
  long trials = -1;     // -1: suite default
  std::int64_t n_1d = 256;
  std::int64_t n_2d = 32;
  std::int64_t fk_n = 48;
  std::vector<std::string> fk_shapes = {
      "union-intervals:a1=0,b1=1,a2=2,b2=3", "square:s=1",         "lshape:s=1",
      "ellipse:a=0.6,b=0.3",                 "annulus:R=0.5,r=0.25", "disk:r=0.5"};
  std::vector<double> sigmas = {0.5, 1.0, 1.5};
  double T = -1.0;
  double h = -1.0;

  int resolved_workers() const {
    if (workers > 0) return workers;
    if (const char* env = std::getenv("FRACSYM_WORKERS")) {
      int w = std::atoi(env);
      if (w > 0) return w;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::min(hw == 0 ? 1u : hw, 8u));
  }

  void validate() const {
    detail::require(n_1d >= 8 && n_1d <= 4096, "n_1d outside the supported range [8, 4096]");
    detail::require(n_2d >= 8 && n_2d <= 64, "n_2d outside the supported range [8, 64]");
    detail::require(fk_n >= 8 && fk_n <= 64, "fk_n outside the supported range [8, 64]");
    for (double s : sigmas)
      detail::require(s > 0.0 && s < 2.0, "sigma values must lie in (0,2)");
  }
};

/// Flat key = value text config; '#' starts a comment. Lists are
/// comma-separated.
inline ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      auto a = s.find_first_not_of(" \t\r");
      auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
    if (key.empty()) continue;
    if (key == "suite") cfg.suite = val;
    else if (key == "seed") cfg.seed = std::stoull(val);
    else if (key == "out_dir") cfg.out_dir = val;
    else if (key == "workers") cfg.workers = std::stoi(val);
    else if (key == "trials") cfg.trials = std::stol(val);
    else if (key == "n_1d") cfg.n_1d = std::stoll(val);
    else if (key == "n_2d") cfg.n_2d = std::stoll(val);
    else if (key == "fk_n") cfg.fk_n = std::stoll(val);
    else if (key == "T") cfg.T = std::stod(val);
    else if (key == "h") cfg.h = std::stod(val);
    else if (key == "sigmas") {
      cfg.sigmas.clear();
      std::stringstream ss(val);
      std::string item;
      while (std::getline(ss, item, ',')) cfg.sigmas.push_back(std::stod(item));
    } else if (key == "fk_shapes") {
      cfg.fk_shapes.clear();
      std::stringstream ss(val);
      std::string item;
      while (std::getline(ss, item, ';'))
        if (!item.empty()) cfg.fk_shapes.push_back(item);
    } else {
      throw std::invalid_argument("unknown config key: " + key);
    }
  }
  detail::require(!cfg.suite.empty(), "config must name a suite");
  return cfg;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  detail::require(in.good(), "cannot open config: " + path);
  return parse_config(in);
}

/// Nonnegative random fields: moving-average-smoothed uniform noise clipped
/// at zero, which respects the standing f >= 0 and u0 >= 0 hypotheses while
/// leaving genuine zero regions.
inline ScalarField smoothed_noise_field(DomainPtr dom, detail::Rng& rng) {
  const Domain& d = *dom;
  Eigen::VectorXd raw(static_cast<Eigen::Index>(d.size()));
  for (Eigen::Index i = 0; i < raw.size(); ++i) raw[i] = rng.uniform(-0.5, 1.0);
  Eigen::VectorXd sm(raw.size());
  int radius = d.dim == 1 ? 2 : 1;
  for (std::size_t k = 0; k < d.size(); ++k) {
    std::int64_t ix = d.cells[k] / d.ny, iy = d.cells[k] % d.ny;
    double acc = 0;
    int cnt = 0;
    for (std::int64_t dx = -radius; dx <= radius; ++dx)
      for (std::int64_t dy = (d.dim == 2 ? -radius : 0); dy <= (d.dim == 2 ? radius : 0); ++dy) {
        std::int32_t nb = d.active_at(ix + dx, iy + dy);
        if (nb >= 0) {
          acc += raw[nb];
          ++cnt;
        }
      }
    sm[static_cast<Eigen::Index>(k)] = std::max(acc / cnt, 0.0);
  }
  return ScalarField(std::move(dom), std::move(sm));
}

struct SuiteCase {
  json data;
  bool pass = true;
  std::uint64_t case_seed = 0;
  std::string detail;
};

struct SuiteReport {
  std::string suite;
  std::string anchor;  // the theorem-level statement the suite exercises
  std::uint64_t seed = 0;
  std::vector<SuiteCase> cases;
  bool pass = true;
  long failed = 0;

  json to_json() const {
    json j;
    j["suite"] = suite;
    j["anchor"] = anchor;
    j["seed"] = seed;
    j["pass"] = pass;
    j["cases_total"] = cases.size();
    j["cases_failed"] = failed;
    json arr = json::array();
    for (const auto& c : cases) {
      json row = c.data;
      row["pass"] = c.pass;
      row["case_seed"] = c.case_seed;
      if (!c.pass) row["detail"] = c.detail;
      arr.push_back(row);
    }
    j["cases"] = arr;
    return j;
  }
};

namespace detail {

template <typename Fn>
SuiteReport run_cases(const std::string& suite, const std::string& anchor,
                      const ExperimentConfig& cfg, long count, Fn&& one_case) {
  SuiteReport rep;
  rep.suite = suite;
  rep.anchor = anchor;
  rep.seed = cfg.seed;
  rep.cases.resize(static_cast<std::size_t>(count));
  parallel_for(static_cast<std::size_t>(count), cfg.resolved_workers(), [&](std::size_t i) {
    SuiteCase& sc = rep.cases[i];
    sc.case_seed = cfg.seed * 1000003ull + i;
    try {
      one_case(i, sc);
    } catch (const std::exception& e) {
      sc.pass = false;
      sc.detail = e.what();
    }
  });
  for (const auto& c : rep.cases)
    if (!c.pass) ++rep.failed;
  rep.pass = rep.failed == 0;
  return rep;
}

inline ScalarField concentrate(const ScalarField& f, fracsym::detail::Rng& rng) {
  // add mass on the top cells of the profile order: strictly more
  // concentrated, still a valid field on the same domain
  ScalarField g = f;
  std::vector<std::size_t> idx(static_cast<std::size_t>(f.values.size()));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return f.values[static_cast<Eigen::Index>(a)] > f.values[static_cast<Eigen::Index>(b)];
  });
  std::size_t top = std::max<std::size_t>(1, idx.size() / 8);
  double bump = rng.uniform(0.1, 0.5) * (f.values.maxCoeff() + 1.0);
  for (std::size_t k = 0; k < top; ++k) g.values[static_cast<Eigen::Index>(idx[k])] += bump;
  return g;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Suites
// ---------------------------------------------------------------------------

inline SuiteReport run_rearrangement_properties(const ExperimentConfig& cfg) {
  long trials = cfg.trials > 0 ? cfg.trials : 500;
  auto d1 = std::make_shared<Domain>(build_interval(0.0, 1.0, cfg.n_1d));
  auto d2 = std::make_shared<Domain>(make_shape("square:s=1", cfg.n_2d));
  return detail::run_cases(
      "rearrangement-properties",
      "equimeasurability, Lp conservation, Hardy-Littlewood, convex order", cfg, trials,
      [&](std::size_t i, SuiteCase& sc) {
        auto rng = detail::Rng::for_case(cfg.seed, i);
        DomainPtr dom = (i % 2 == 0) ? d1 : d2;
        ScalarField f = smoothed_noise_field(dom, rng);
        ScalarField g = smoothed_noise_field(dom, rng);
        Profile pf = decreasing_rearrangement(f);

        double vmax = pf.values.empty() ? 0.0 : pf.values.front();
        for (int q = 0; q <= 8; ++q) {
          double k = vmax * q / 8.0;
          double mu_field = distribution_function(f, k);
          double mu_prof = pf.distribution(k);
          if (mu_field != mu_prof)
            throw std::runtime_error("equimeasurability violated at level " + std::to_string(k));
        }
        for (double p : {1.0, 2.0, std::numeric_limits<double>::infinity()}) {
          double a = f.norm_p(p), b = pf.norm_p(p);
          if (std::abs(a - b) > 1e-12 * (1.0 + std::abs(a)))
            throw std::runtime_error("Lp conservation violated");
        }
        auto [lhs, rhs] = hardy_littlewood_check(f, g);
        if (lhs > rhs + 1e-12 * (1.0 + rhs))
          throw std::runtime_error("Hardy-Littlewood inequality violated");

        ScalarField gmore = detail::concentrate(f, rng);
        Profile pg = decreasing_rearrangement(gmore);
        if (concentration_compare(pf, pg, same_grid_tolerance(pg)) == Concentration::Greater)
          throw std::runtime_error("constructed pair lost its concentration order");
        if (!convex_order_check(pf, pg, default_convex_family(pg.values.front()),
                                1e-10 * (1.0 + pg.mass())))
          throw std::runtime_error("convex order check failed on ordered pair");

        ScalarField fs = spherical_rearrangement(f);
        ScalarField fss = spherical_rearrangement(fs);
        if (fs.dom->hash() != fss.dom->hash() ||
            (fs.values - fss.values).cwiseAbs().maxCoeff() > 1e-14)
          throw std::runtime_error("spherical rearrangement is not idempotent");

        ScalarField hmore = detail::concentrate(gmore, rng);
        Profile ph = decreasing_rearrangement(hmore);
        auto fg = concentration_compare(pf, pg, same_grid_tolerance(pg));
        auto gh = concentration_compare(pg, ph, same_grid_tolerance(ph));
        auto fh = concentration_compare(pf, ph, same_grid_tolerance(ph));
        bool fg_le = fg == Concentration::Less || fg == Concentration::Equal;
        bool gh_le = gh == Concentration::Less || gh == Concentration::Equal;
        bool fh_le = fh == Concentration::Less || fh == Concentration::Equal;
        if (fg_le && gh_le && !fh_le) throw std::runtime_error("transitivity violated");

        sc.data["dim"] = dom->dim;
        sc.data["cells"] = dom->size();
      });
}

inline SuiteReport run_elliptic_comparison(const ExperimentConfig& cfg) {
  long trials = cfg.trials > 0 ? cfg.trials : 100;
  struct Slot {
    DomainPtr dom;
    std::shared_ptr<OperatorMatrix> A, Ab;
    double sigma;
  };
  std::vector<std::string> shapes = {"union-intervals:a1=0,b1=1,a2=2,b2=3", "interval:a=-1,b=1",
                                     "square:s=1", "lshape:s=1", "disk:r=0.5"};
  std::vector<Slot> slots;
  for (const auto& sh : shapes)
    for (double sg : cfg.sigmas) {
      ShapeSpec spec = parse_shape_spec(sh);
      bool oned = spec.name == "interval" || spec.name == "union-intervals";
      Domain d = make_shape(spec, oned ? cfg.n_1d : cfg.n_2d);
      Slot slot;
      slot.dom = std::make_shared<Domain>(d);
      slot.sigma = sg;
      slot.A = std::make_shared<OperatorMatrix>(assemble_restricted(d, sg));
      slot.Ab = std::make_shared<OperatorMatrix>(assemble_restricted(schwarz_ball(d), sg));
      slots.push_back(std::move(slot));
    }
  return detail::run_cases(
      "elliptic-comparison", "concentration comparison against the symmetrized problem", cfg,
      trials, [&](std::size_t i, SuiteCase& sc) {
        auto rng = detail::Rng::for_case(cfg.seed, i);
        const Slot& slot = slots[i % slots.size()];
        Nonlinearity B = (i / slots.size()) % 2 == 0 ? Nonlinearity::linear(1.0)
                                                     : Nonlinearity::rational();
        ScalarField f = smoothed_noise_field(slot.dom, rng);
        ComparisonReport rep = elliptic_concentration_experiment_pre(*slot.A, *slot.Ab, B, f);
        sc.data["shape_cells"] = slot.dom->size();
        sc.data["sigma"] = slot.sigma;
        sc.data["B"] = B.name();
        sc.data["verdict"] = to_string(rep.verdict);
        sc.data["max_overshoot"] = rep.max_overshoot;
        sc.data["tolerance"] = rep.tolerance;
        if (rep.verdict != Concentration::Less && rep.verdict != Concentration::Equal)
          throw std::runtime_error("verdict " + std::string(to_string(rep.verdict)));
      });
}

inline SuiteReport run_parabolic_comparison(const ExperimentConfig& cfg) {
  long trials = cfg.trials > 0 ? cfg.trials : 30;
  double T = cfg.T > 0 ? cfg.T : 0.3;
  double h = cfg.h > 0 ? cfg.h : 0.01;
  std::vector<std::string> shapes = {"union-intervals:a1=0,b1=1,a2=2,b2=3", "square:s=1",
                                     "lshape:s=1"};
  return detail::run_cases(
      "parabolic-comparison", "concentration comparison along the evolution", cfg, trials,
      [&](std::size_t i, SuiteCase& sc) {
        auto rng = detail::Rng::for_case(cfg.seed, i);
        ShapeSpec spec = parse_shape_spec(shapes[i % shapes.size()]);
        bool oned = spec.name == "union-intervals";
        Domain d = make_shape(spec, oned ? std::min<std::int64_t>(cfg.n_1d, 192)
                                         : std::min<std::int64_t>(cfg.n_2d, 24));
        double sigma = cfg.sigmas[(i / shapes.size()) % cfg.sigmas.size()];
        auto dom = std::make_shared<Domain>(d);
        ScalarField u0 = smoothed_noise_field(dom, rng);
        ScalarField ub0 = spherical_rearrangement(u0);
        StepSource fs, fbs;
        bool with_source = i % 2 == 1;
        if (with_source) {
          ScalarField f = smoothed_noise_field(dom, rng);
          ScalarField fb = spherical_rearrangement(f);
          fs = source_constant(f.values);
          fbs = source_constant(fb.values);
        } else {
          fs = source_zero(static_cast<Eigen::Index>(dom->size()));
          fbs = source_zero(static_cast<Eigen::Index>(ub0.dom->size()));
        }
        ParabolicReport rep =
            parabolic_concentration_experiment(d, sigma, u0, fs, ub0, fbs, T, h, 5);
        sc.data["sigma"] = sigma;
        sc.data["cells"] = d.size();
        sc.data["with_source"] = with_source;
        sc.data["tolerance"] = rep.tolerance;
        sc.data["saved_times"] = rep.times.size();
        if (!rep.all_less_equal) throw std::runtime_error("verdict beyond tolerance");
        for (std::size_t k = 0; k < rep.times.size(); ++k)
          for (int p = 0; p < 3; ++p)
            if (rep.norms_u[k][p] > rep.norms_v[k][p] + rep.tolerance + 1e-12)
              throw std::runtime_error("norm chain violated");
      });
}

inline SuiteReport run_faber_krahn(const ExperimentConfig& cfg) {
  std::vector<ShapeSpec> shapes;
  for (const auto& s : cfg.fk_shapes) shapes.push_back(parse_shape_spec(s));
  auto entries = faber_krahn_sweep(shapes, cfg.sigmas, cfg.fk_n, true, cfg.resolved_workers());
  SuiteReport rep;
  rep.suite = "faber-krahn";
  rep.anchor = "Faber-Krahn inequality, decay route cross-checked against the dense route";
  rep.seed = cfg.seed;
  for (const auto& e : entries) {
    SuiteCase sc;
    sc.data = to_json(e);
    bool is_ball = e.shape == "disk" || e.shape == "interval";
    if (e.ratio < 1.0 - e.tol_grid) {
      sc.pass = false;
      sc.detail = "ratio below 1";
    } else if (is_ball && std::abs(e.ratio - 1.0) > 3.0 * e.tol_grid) {
      sc.pass = false;
      sc.detail = "ball ratio not within equality tolerance";
    } else if (!is_ball && e.ratio - 1.0 < 5.0 * e.tol_grid) {
      sc.pass = false;
      sc.detail = "non-ball ratio lacks strictness margin";
    } else if (std::abs(e.decay_fit_lambda1 - e.lambda1_omega) > 0.01 * e.lambda1_omega) {
      sc.pass = false;
      sc.detail = "decay-fit route disagrees with the dense route beyond 1%";
    }
    rep.cases.push_back(std::move(sc));
  }
  for (const auto& c : rep.cases)
    if (!c.pass) ++rep.failed;
  rep.pass = rep.failed == 0;
  return rep;
}

inline SuiteReport run_dtn_consistency(const ExperimentConfig& cfg) {
  struct Case {
    std::string kind;
    double sigma;
    std::int64_t n;
    int M;
  };
  std::vector<Case> cases;
  for (double sg : cfg.sigmas) cases.push_back({"dtn", sg, 128, 96});
  cases.push_back({"refine", 1.0, 0, 0});
  cases.push_back({"poisson", 1.0, 128, 96});
  for (double sg : cfg.sigmas) cases.push_back({"zdiag", sg, 128, 48});

  auto bump_field = [](const Domain& d) {
    double cx = 0.5 * (d.lo[0] + d.hi[0]);
    double half = 0.5 * (d.hi[0] - d.lo[0]);
    Eigen::VectorXd v(static_cast<Eigen::Index>(d.size()));
    for (std::size_t k = 0; k < d.size(); ++k) {
      double x = (d.center(k)[0] - cx) / half;
      double q = 1.0 - x * x;
      v[static_cast<Eigen::Index>(k)] = q > 1e-12 ? std::exp(-1.0 / q) * M_E : 0.0;
    }
    return v;
  };
  auto dtn_error = [&](double sigma, std::int64_t n, int M) {
    Domain d = build_interval(-1.0, 1.0, n);
    auto dom = std::make_shared<Domain>(d);
    ScalarField g(dom, bump_field(d));
    ExtensionConfig ec;
    ec.levels = M;
    ExtensionField w = solve_extension_dirichlet(d, sigma, g, ec);
    ScalarField t = dtn_trace(w);
    OperatorMatrix A = assemble_restricted(d, sigma);
    Eigen::VectorXd ref = A.A * g.values;
    return std::sqrt((t.values - ref).squaredNorm() / ref.squaredNorm());
  };

  return detail::run_cases(
      "dtn-consistency", "trace of the extension realizes the nonlocal operator", cfg,
      static_cast<long>(cases.size()), [&](std::size_t i, SuiteCase& sc) {
        const Case& c = cases[i];
        sc.data["kind"] = c.kind;
        sc.data["sigma"] = c.sigma;
        if (c.kind == "dtn") {
          double err = dtn_error(c.sigma, c.n, c.M);
          sc.data["rel_l2_error"] = err;
          if (err > 0.05) throw std::runtime_error("trace error above 5%");
        } else if (c.kind == "refine") {
          double e1 = dtn_error(1.0, 64, 48);
          double e2 = dtn_error(1.0, 96, 72);
          double e3 = dtn_error(1.0, 128, 96);
          sc.data["errors"] = {e1, e2, e3};
          if (!(e1 > e2 && e2 > e3))
            throw std::runtime_error("error not monotone under refinement");
        } else if (c.kind == "poisson") {
          // sigma = 1: the extension is harmonic; interior slices match the
          // Cauchy-kernel convolution of the trace
          Domain d = build_interval(-1.0, 1.0, c.n);
          auto dom = std::make_shared<Domain>(d);
          ScalarField g(dom, bump_field(d));
          ExtensionConfig ec;
          ec.levels = c.M;
          ExtensionField w = solve_extension_dirichlet(d, 1.0, g, ec);
          double worst = 0.0;
          for (double zt : {0.2, 0.5, 1.0}) {
            int j = 1;
            while (j + 1 < w.levels() && w.z[static_cast<std::size_t>(j)] < zt) ++j;
            double z = w.z[static_cast<std::size_t>(j)];
            double num = 0, den = 0;
            for (std::size_t k = 0; k < w.box->size(); ++k) {
              double x = w.box->center(k)[0];
              if (std::abs(x) > 1.5) continue;
              double conv = 0;
              for (std::size_t l = 0; l < d.size(); ++l) {
                double y = d.center(l)[0];
                conv += g.values[static_cast<Eigen::Index>(l)] * z /
                        ((x - y) * (x - y) + z * z) * d.spacing / M_PI;
              }
              double diff = w.values(static_cast<Eigen::Index>(k), j) - conv;
              num += diff * diff;
              den += conv * conv;
            }
            worst = std::max(worst, std::sqrt(num / den));
          }
          sc.data["rel_l2_error"] = worst;
          if (worst > 0.02) throw std::runtime_error("Poisson-kernel cross check above 2%");
        } else {  // zdiag
          Domain omega = make_shape("union-intervals:a1=0,b1=1,a2=2,b2=3", 96);
          Domain ball = schwarz_ball(omega);
          auto om = std::make_shared<Domain>(omega);
          ScalarField f = ScalarField::constant(om, 1.0);
          ScalarField fsharp = spherical_rearrangement(f);
          Nonlinearity B = Nonlinearity::linear(1.0);
          double diam = std::max(omega.diameter(), ball.diameter());
          ExtensionConfig ec;
          ec.levels = c.M;
          ec.zmax = 8.0 * diam;
          ec.box_halfwidth = 0.5 * (omega.hi[0] - omega.lo[0]) + 3.0 * diam;
          ExtensionField w = solve_extension_neumann(omega, c.sigma, f, B, ec);
          ExtensionField psi = solve_extension_neumann(ball, c.sigma, fsharp, B, ec);
          ZDiagnostic zd = z_diagnostic(w, psi, B);
          double tol = w.box->cell_measure() * w.values.col(0).cwiseAbs().maxCoeff();
          sc.data["max_Z"] = zd.max_Z;
          sc.data["tolerance"] = tol;
          sc.data["min_boundary_slack"] = zd.min_boundary_slack;
          if (zd.max_Z > tol) throw std::runtime_error("Z exceeded tolerance");
        }
      });
}

inline SuiteReport run_itd_convergence(const ExperimentConfig& cfg) {
  return detail::run_cases(
      "itd-convergence", "implicit scheme converges to the semigroup; resolvent contracts", cfg,
      4, [&](std::size_t i, SuiteCase& sc) {
        auto rng = detail::Rng::for_case(cfg.seed, i);
        Domain d = build_interval(-1.0, 1.0, 128);
        auto dom = std::make_shared<Domain>(d);
        OperatorMatrix A = assemble_restricted(d, 1.0);
        if (i == 0) {
          // eigenvector decay matches the scalar resolvent power exactly
          SpectralResult sr = eigensolve(A, 1);
          ScalarField psi(dom, sr.psi1());
          double h = 0.01;
          Trajectory tr = evolve(A, psi, source_zero(A.n()), 1.0, h);
          double worst = 0;
          for (std::size_t k = 0; k < tr.times.size(); ++k) {
            double factor = std::pow(1.0 + h * sr.lambda1(), -static_cast<double>(k));
            worst = std::max(worst,
                             (tr.states[k] - factor * psi.values).cwiseAbs().maxCoeff());
          }
          sc.data["max_deviation"] = worst;
          if (worst > 1e-12 * psi.values.cwiseAbs().maxCoeff())
            throw std::runtime_error("eigenvector decay deviates from the scalar formula");
        } else if (i == 1) {
          ScalarField u0 = smoothed_noise_field(dom, rng);
          double T = 0.5;
          std::vector<double> errs;
          for (double h : {T / 10, T / 20, T / 40, T / 80, T / 160}) {
            Trajectory tr = evolve(A, u0, source_zero(A.n()), T, h);
            Eigen::VectorXd exact = heat_semigroup_apply(A, T, u0.values);
            errs.push_back(std::sqrt((tr.final_state() - exact).squaredNorm() *
                                     d.cell_measure()));
          }
          sc.data["errors"] = errs;
          for (std::size_t k = 0; k + 1 < errs.size(); ++k) {
            double ratio = errs[k] / errs[k + 1];
            if (ratio < 1.7 || ratio > 2.3)
              throw std::runtime_error("first-order ratio " + std::to_string(ratio));
          }
        } else if (i == 2) {
          SpectralResult sr = eigensolve(A, 1);
          ScalarField psi(dom, sr.psi1());
          double t = 0.7;
          auto table = crandall_liggett_limit(A, psi, t, {8, 16, 32, 64, 128});
          double lam = sr.lambda1();
          double worst = 0;
          for (auto [n, err] : table) {
            double scalar =
                std::abs(std::pow(1.0 + t * lam / n, -static_cast<double>(n)) -
                         std::exp(-t * lam)) *
                psi.norm_p(2);
            worst = std::max(worst, std::abs(err - scalar));
          }
          sc.data["max_scalar_gap"] = worst;
          if (worst > 1e-12) throw std::runtime_error("exponential formula scalar gap");
          auto zero_table = crandall_liggett_limit(A, psi, 0.0, {4, 8});
          for (auto [n, err] : zero_table)
            if (err > 1e-14) throw std::runtime_error("t = 0 must give zero error");
        } else {
          // resolvent L1 contraction + evolution stability, random pairs
          double h = 0.05;
          Resolvent J(A, h);
          double meas = d.cell_measure();
          for (int trial = 0; trial < 50; ++trial) {
            ScalarField u = smoothed_noise_field(dom, rng);
            ScalarField v = smoothed_noise_field(dom, rng);
            double before = (u.values - v.values).cwiseAbs().sum() * meas;
            double after = (J.apply(u.values) - J.apply(v.values)).cwiseAbs().sum() * meas;
            if (after > before + 1e-12 * (1 + before))
              throw std::runtime_error("resolvent is not an L1 contraction");
          }
          sc.data["pairs"] = 50;
        }
      });
}

inline SuiteReport run_suite(const ExperimentConfig& cfg) {
  cfg.validate();
  SuiteReport rep;
  if (cfg.suite == "rearrangement-properties") rep = run_rearrangement_properties(cfg);
  else if (cfg.suite == "elliptic-comparison") rep = run_elliptic_comparison(cfg);
  else if (cfg.suite == "parabolic-comparison") rep = run_parabolic_comparison(cfg);
  else if (cfg.suite == "faber-krahn") rep = run_faber_krahn(cfg);
  else if (cfg.suite == "dtn-consistency") rep = run_dtn_consistency(cfg);
  else if (cfg.suite == "itd-convergence") rep = run_itd_convergence(cfg);
  else throw std::invalid_argument("unknown suite: " + cfg.suite);
  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream out(cfg.out_dir + "/" + rep.suite + ".json");
    out << rep.to_json().dump(2) << "\n";
  }
  return rep;
}

/// Serializes a report as json, a plot-ready csv (one row per case), or a
/// markdown table mirroring the csv.
inline void emit_report(const SuiteReport& rep, const std::string& format,
                        const std::string& path) {
  std::ofstream out(path);
  detail::require(out.good(), "unwritable output path: " + path);
  if (format == "json") {
    out << rep.to_json().dump(2) << "\n";
    return;
  }
  // stable column set: keys of the first case, sorted (nlohmann objects are
  // already key-sorted), plus the pass flag
  std::vector<std::string> cols;
  if (!rep.cases.empty())
    for (auto it = rep.cases.front().data.begin(); it != rep.cases.front().data.end(); ++it)
      cols.push_back(it.key());
  cols.push_back("pass");
  auto cell = [&](const SuiteCase& c, const std::string& key) -> std::string {
    if (key == "pass") return c.pass ? "1" : "0";
    if (!c.data.contains(key)) return "";
    const json& v = c.data.at(key);
    return v.is_string() ? v.get<std::string>() : v.dump();
  };
  if (format == "csv") {
    out << "case";
    for (const auto& k : cols) out << ',' << k;
    out << "\n";
    for (std::size_t i = 0; i < rep.cases.size(); ++i) {
      out << i;
      for (const auto& k : cols) out << ',' << cell(rep.cases[i], k);
      out << "\n";
    }
    return;
  }
  if (format == "markdown") {
    out << "# " << rep.suite << "\n\n" << rep.anchor << "\n\n";
    out << "| case |";
    for (const auto& k : cols) out << ' ' << k << " |";
    out << "\n|---|";
    for (std::size_t k = 0; k < cols.size(); ++k) out << "---|";
    out << "\n";
    for (std::size_t i = 0; i < rep.cases.size(); ++i) {
      out << "| " << i << " |";
      for (const auto& k : cols) out << ' ' << cell(rep.cases[i], k) << " |";
      out << "\n";
    }
    out << "\nresult: " << (rep.pass ? "pass" : "FAIL") << " (" << rep.failed << " of "
        << rep.cases.size() << " cases failed)\n";
    return;
  }
  throw std::invalid_argument("unknown report format: " + format);
}

}  // namespace fracsym
