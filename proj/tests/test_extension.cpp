#include <catch2/catch.hpp>

#include "fracsym/extension.hpp"
#include "fracsym/spectral.hpp"

using namespace fracsym;

namespace {
ScalarField bump_on(DomainPtr d) {
  double cx = 0.5 * (d->lo[0] + d->hi[0]);
  double half = 0.5 * (d->hi[0] - d->lo[0]);
  Eigen::VectorXd v(static_cast<Eigen::Index>(d->size()));
  for (std::size_t k = 0; k < d->size(); ++k) {
    double x = (d->center(k)[0] - cx) / half;
    double q = 1.0 - x * x;
    v[static_cast<Eigen::Index>(k)] = q > 1e-12 ? std::exp(-1.0 / q) * M_E : 0.0;
  }
  return ScalarField(std::move(d), std::move(v));
}
}  // namespace

TEST_CASE("zero data gives the zero extension", "[extension]") {
  Domain dom = build_interval(-1.0, 1.0, 32);
  auto d = std::make_shared<Domain>(dom);
  ExtensionConfig ec;
  ec.levels = 16;
  ExtensionField w = solve_extension_dirichlet(dom, 0.8, ScalarField::zero(d), ec);
  CHECK(w.values.cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(dtn_trace(solve_extension_neumann(dom, 0.8, ScalarField::zero(d),
                                                    Nonlinearity::linear(0.0), ec)),
                  std::invalid_argument);
}

TEST_CASE("extension is linear and satisfies the maximum principle", "[extension]") {
  Domain dom = build_interval(-1.0, 1.0, 48);
  auto d = std::make_shared<Domain>(dom);
  ExtensionConfig ec;
  ec.levels = 24;
  ScalarField g1 = bump_on(d);
  Eigen::VectorXd raw(48);
  for (int i = 0; i < 48; ++i) raw[i] = std::cos(2.1 * dom.center(static_cast<std::size_t>(i))[0]);
  ScalarField g2(d, raw);

  ExtensionField w1 = solve_extension_dirichlet(dom, 0.8, g1, ec);
  ExtensionField w2 = solve_extension_dirichlet(dom, 0.8, g2, ec);
  ScalarField combo(d, (2.0 * g1.values + g2.values).eval());
  ExtensionField wc = solve_extension_dirichlet(dom, 0.8, combo, ec);
  CHECK((wc.values - 2.0 * w1.values - w2.values).cwiseAbs().maxCoeff() <= 1e-9);

  ScalarField t1 = dtn_trace(w1), t2 = dtn_trace(w2), tc = dtn_trace(wc);
  CHECK((tc.values - 2.0 * t1.values - t2.values).cwiseAbs().maxCoeff() <= 1e-8);

  // g >= 0 implies w >= 0 everywhere
  CHECK(w1.values.minCoeff() >= -1e-12);
}

TEST_CASE("trace flux matches the matrix operator", "[extension][oracle]") {
  double sigma = 0.6;
  Domain dom = build_interval(-1.0, 1.0, 96);
  auto d = std::make_shared<Domain>(dom);
  ScalarField g = bump_on(d);
  ExtensionConfig ec;
  ec.levels = 72;
  ExtensionField w = solve_extension_dirichlet(dom, sigma, g, ec);
  ScalarField t = dtn_trace(w);
  OperatorMatrix A = assemble_restricted(dom, sigma);
  Eigen::VectorXd ref = A.A * g.values;
  double err = std::sqrt((t.values - ref).squaredNorm() / ref.squaredNorm());
  CHECK(err < 0.05);
}

TEST_CASE("eigenfunction trace reproduces lambda1 psi1", "[extension]") {
  double sigma = 1.0;
  Domain dom = build_interval(-1.0, 1.0, 128);
  auto d = std::make_shared<Domain>(dom);
  OperatorMatrix A = assemble_restricted(dom, sigma);
  SpectralResult r = eigensolve(A, 1);
  ScalarField psi(d, r.psi1());
  ExtensionConfig ec;
  ec.levels = 96;
  ExtensionField w = solve_extension_dirichlet(dom, sigma, psi, ec);
  ScalarField t = dtn_trace(w);
  double err = std::sqrt((t.values - r.lambda1() * psi.values).squaredNorm() /
                         (r.lambda1() * psi.values).squaredNorm());
  CHECK(err < 0.05);
}

TEST_CASE("neumann solve agrees with the elliptic solver", "[extension]") {
  double sigma = 0.8;
  Domain dom = build_interval(-1.0, 1.0, 128);
  auto d = std::make_shared<Domain>(dom);
  ScalarField f = bump_on(d);
  Nonlinearity B = Nonlinearity::rational();
  ExtensionConfig ec;
  ec.levels = 64;
  ExtensionField w = solve_extension_neumann(dom, sigma, f, B, ec);
  OperatorMatrix A = assemble_restricted(dom, sigma);
  ScalarField v = solve_nonlinear(A, B, f);
  std::int64_t padx = std::llround((dom.lo[0] - w.box->lo[0]) / dom.spacing);
  Eigen::VectorXd tr(128);
  for (std::size_t k = 0; k < dom.size(); ++k)
    tr[static_cast<Eigen::Index>(k)] =
        w.values(w.box->active_at(dom.cells[k] + padx, 0), 0);
  double err = std::sqrt((tr - v.values).squaredNorm() / v.values.squaredNorm());
  CHECK(err < 0.03);
}

TEST_CASE("insufficient zmax is flagged", "[extension]") {
  Domain dom = build_interval(-1.0, 1.0, 32);
  auto d = std::make_shared<Domain>(dom);
  ExtensionConfig tight;
  tight.levels = 16;
  tight.zmax = 0.4;  // far too shallow for the slow tail
  ExtensionField w = solve_extension_dirichlet(dom, 1.0, bump_on(d), tight);
  CHECK_FALSE(w.decay_ok);
}

TEST_CASE("z diagnostic vanishes on identical problems", "[extension]") {
  Domain dom = build_interval(-1.0, 1.0, 48);
  auto d = std::make_shared<Domain>(dom);
  Nonlinearity B = Nonlinearity::linear(1.0);
  ExtensionConfig ec;
  ec.levels = 24;
  ExtensionField w = solve_extension_neumann(dom, 0.8, bump_on(d), B, ec);
  ZDiagnostic zd = z_diagnostic(w, w, B);
  CHECK(zd.max_Z == 0.0);
  CHECK(zd.min_boundary_slack >= -1e-12);
  for (int j = 0; j < w.levels(); ++j) CHECK(zd.Z(0, j) == 0.0);  // Z(0, z) = 0
}

TEST_CASE("z diagnostic on the symmetrized comparison pair", "[extension]") {
  for (double sigma : {0.6, 1.2}) {
    Domain omega = make_shape("union-intervals:a1=0,b1=1,a2=2,b2=3", 64);
    Domain ball = schwarz_ball(omega);
    auto om = std::make_shared<Domain>(omega);
    ScalarField f = ScalarField::constant(om, 1.0);
    ScalarField fsharp = spherical_rearrangement(f);
    Nonlinearity B = Nonlinearity::linear(1.0);
    double diam = std::max(omega.diameter(), ball.diameter());
    ExtensionConfig ec;
    ec.levels = 32;
    ec.zmax = 8.0 * diam;
    ec.box_halfwidth = 0.5 * (omega.hi[0] - omega.lo[0]) + 3.0 * diam;
    ExtensionField w = solve_extension_neumann(omega, sigma, f, B, ec);
    ExtensionField psi = solve_extension_neumann(ball, sigma, fsharp, B, ec);
    ZDiagnostic zd = z_diagnostic(w, psi, B);
    double tol = w.box->cell_measure() * w.values.col(0).cwiseAbs().maxCoeff();
    REQUIRE(zd.max_Z <= tol);
  }
}

TEST_CASE("first-order differentiation formula", "[extension]") {
  auto make_field = [](long n, int M, bool separable) {
    Domain box = build_interval(-2.0, 2.0, n);
    ExtensionField w;
    w.box = std::make_shared<Domain>(box);
    w.omega = w.box;
    w.sigma = 1.0;
    w.zmax = 1.0;
    w.z.resize(static_cast<std::size_t>(M) + 1);
    for (int j = 0; j <= M; ++j) w.z[static_cast<std::size_t>(j)] = static_cast<double>(j) / M;
    w.values.resize(static_cast<Eigen::Index>(box.size()), M + 1);
    for (std::size_t k = 0; k < box.size(); ++k) {
      double x = box.center(k)[0];
      for (int j = 0; j <= M; ++j) {
        double z = w.z[static_cast<std::size_t>(j)];
        // off-grid center keeps all slice values distinct
        double v = std::exp(-z) * std::exp(-(x - 0.0137) * (x - 0.0137));
        if (!separable) v += 0.3 * std::exp(-2.0 * z) * std::exp(-2.0 * (x - 0.4) * (x - 0.4));
        w.values(static_cast<Eigen::Index>(k), j) = v;
      }
    }
    return w;
  };

  // separable strictly radial field: both sides coincide
  DiffCheckResult sep = first_order_differentiation_check(make_field(64, 16, true));
  CHECK_FALSE(sep.skipped_plateau);
  CHECK(sep.max_defect <= 1e-10);

  // non-separable smooth field: defect decreases under refinement
  DiffCheckResult c1 = first_order_differentiation_check(make_field(48, 12, false));
  DiffCheckResult c2 = first_order_differentiation_check(make_field(96, 24, false));
  DiffCheckResult c3 = first_order_differentiation_check(make_field(192, 48, false));
  CHECK(c2.max_defect < c1.max_defect);
  CHECK(c3.max_defect < c2.max_defect);

  // plateau: constant slice values trigger the skip flag
  ExtensionField flat = make_field(32, 8, true);
  flat.values.setConstant(1.0);
  DiffCheckResult p = first_order_differentiation_check(flat);
  CHECK(p.skipped_plateau);
  CHECK(p.max_defect == 0.0);
}
