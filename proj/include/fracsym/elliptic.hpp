#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <string>
#include <utility>

#include "fracsym/fraclap.hpp"
#include "fracsym/rearrange.hpp"

namespace fracsym {

/// Monotone lower-order nonlinearity B with B(0) = 0, extended to negative
/// arguments by odd symmetry. Presets: linear c*t, t/(1+t), and the
/// delta-regularized power (t+delta)^m - delta^m with m in (0,1).
class Nonlinearity {
 public:
  static Nonlinearity linear(double c) {
    detail::require(c >= 0.0, "linear coefficient must be nonnegative");
    Nonlinearity b;
    b.linear_ = true;
    b.coef_ = c;
    b.fn_ = [c](double t) { return c * t; };
    b.dfn_ = [c](double) { return c; };
    b.name_ = "linear:" + std::to_string(c);
    return b;
  }

  static Nonlinearity rational() {
    Nonlinearity b;
    b.fn_ = [](double t) { return t / (1.0 + std::abs(t)); };
    b.dfn_ = [](double t) {
      double d = 1.0 + std::abs(t);
      return 1.0 / (d * d);
    };
    b.name_ = "rational";
    b.check_concave_increasing();
    return b;
  }

  static Nonlinearity power(double m, double delta = 1e-6) {
    detail::require(m > 0.0 && m < 1.0, "power preset expects m in (0,1)");
    detail::require(delta > 0.0, "power preset expects delta > 0");
    Nonlinearity b;
    b.fn_ = [m, delta](double t) {
      double a = std::pow(std::abs(t) + delta, m) - std::pow(delta, m);
      return t >= 0 ? a : -a;
    };
    b.dfn_ = [m, delta](double t) { return m * std::pow(std::abs(t) + delta, m - 1.0); };
    b.name_ = "power:" + std::to_string(m);
    b.check_concave_increasing();
    return b;
  }

  static Nonlinearity custom(std::function<double(double)> f, std::function<double(double)> df,
                             std::string name = "custom") {
    Nonlinearity b;
    b.fn_ = std::move(f);
    b.dfn_ = std::move(df);
    b.name_ = std::move(name);
    detail::require(std::abs(b.fn_(0.0)) < 1e-14, "nonlinearity must vanish at 0");
    return b;
  }

  /// Parses "linear:<c>", "rational", or "power:m=<m>[,delta=<d>]".
  static Nonlinearity parse(const std::string& text) {
    if (text.rfind("linear", 0) == 0) {
      auto colon = text.find(':');
      double c = colon == std::string::npos ? 0.0 : std::stod(text.substr(colon + 1));
      return linear(c);
    }
    if (text == "rational") return rational();
    if (text.rfind("power", 0) == 0) {
      ShapeSpec s = parse_shape_spec(text);
      return power(s.get("m", 0.5), s.get("delta", 1e-6));
    }
    throw std::invalid_argument("unknown nonlinearity: " + text);
  }

  double operator()(double t) const { return fn_(t); }
  double deriv(double t) const { return dfn_(t); }
  bool is_linear() const { return linear_; }
  double linear_coef() const { return coef_; }
  const std::string& name() const { return name_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const {
    return v.unaryExpr([this](double t) { return fn_(t); });
  }

 private:
  void check_concave_increasing() const {
    double prev_slope = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 64; ++k) {
      double t = 5.0 * k / 64.0;
      detail::require(dfn_(t) > 0.0, "nonlinearity must be strictly increasing");
      detail::require(dfn_(t) <= prev_slope + 1e-12, "preset nonlinearity must be concave");
      prev_slope = dfn_(t);
    }
  }

  std::function<double(double)> fn_;
  std::function<double(double)> dfn_;
  bool linear_ = false;
  double coef_ = 0.0;
  std::string name_;
};

/// Solves (A + cI) v = f by Cholesky with one step of iterative refinement.
inline ScalarField solve_linear(const OperatorMatrix& op, double c, const ScalarField& f) {
  detail::require(c >= 0.0, "zero-order coefficient must be nonnegative");
  detail::require(f.dom->hash() == op.dom->hash(), "field/operator domain mismatch");
  detail::require(f.values.allFinite(), "right-hand side must be finite");
  Eigen::MatrixXd M = op.A;
  M.diagonal().array() += c;
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("factorization failed: operator lost positive definiteness");
  Eigen::VectorXd v = llt.solve(f.values);
  v += llt.solve(f.values - M * v);
  double resid = (M * v - f.values).cwiseAbs().maxCoeff();
  double scale = f.values.cwiseAbs().maxCoeff();
  if (resid > 1e-9 * std::max(scale, 1e-300))
    throw std::runtime_error("linear solve residual above tolerance");
  return ScalarField(f.dom, std::move(v));
}

/// Damped Newton for h A v + B(v) = f with f >= 0. The Jacobian
/// h A + diag(B') stays positive definite, and the step is halved until the
/// residual decreases.
inline ScalarField solve_nonlinear(const OperatorMatrix& op, const Nonlinearity& B,
                                   const ScalarField& f, double h = 1.0) {
  detail::require(h > 0.0, "time weight must be positive");
  detail::require(f.dom->hash() == op.dom->hash(), "field/operator domain mismatch");
  detail::require(f.values.minCoeff() >= 0.0, "nonlinear solve requires f >= 0");
  const Eigen::Index n = op.n();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  double tol = 1e-9 * (1.0 + f.values.cwiseAbs().maxCoeff());

  auto residual = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return h * (op.A * x) + B.apply(x) - f.values;
  };

  Eigen::VectorXd r = residual(v);
  for (int it = 0; it < 50; ++it) {
    double rn = r.cwiseAbs().maxCoeff();
    if (rn <= tol) return ScalarField(f.dom, std::move(v));
    Eigen::MatrixXd J = h * op.A;
    for (Eigen::Index i = 0; i < n; ++i) J(i, i) += B.deriv(v[i]);
    Eigen::LLT<Eigen::MatrixXd> llt(J);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("Newton Jacobian factorization failed");
    Eigen::VectorXd step = llt.solve(-r);
    double t = 1.0;
    for (int half = 0; half < 30; ++half) {
      Eigen::VectorXd cand = v + t * step;
      Eigen::VectorXd rc = residual(cand);
      if (rc.cwiseAbs().maxCoeff() < rn || t < 1e-6) {
        v = std::move(cand);
        r = std::move(rc);
        break;
      }
      t *= 0.5;
    }
  }
  if (r.cwiseAbs().maxCoeff() > tol)
    throw std::runtime_error(
        "Newton did not converge; a degenerate B'(0) may need the regularized preset");
  return ScalarField(f.dom, std::move(v));
}

/// Dispatches to the direct linear solve when B is linear.
inline ScalarField solve_elliptic(const OperatorMatrix& op, const Nonlinearity& B,
                                  const ScalarField& f, double h = 1.0) {
  if (B.is_linear() && std::abs(h - 1.0) < 1e-15) return solve_linear(op, B.linear_coef(), f);
  return solve_nonlinear(op, B, f, h);
}

/// Trace of the epsilon-lifted problem with exterior value eps and data
/// f + c*eps, via the exact shift identity for linear B.
inline ScalarField solve_linear_lifted(const OperatorMatrix& op, double c, const ScalarField& f,
                                       double eps) {
  detail::require(eps >= 0.0, "exterior lift must be nonnegative");
  ScalarField v = solve_linear(op, c, f);
  v.values.array() += eps;
  return v;
}

/// L1 contraction of the solution map f -> B(v): returns
/// (int [B(v)-B(v2)]+, int [f-f2]+); the first never exceeds the second.
inline std::pair<double, double> l1_contraction_check(const OperatorMatrix& op,
                                                      const Nonlinearity& B, const ScalarField& f,
                                                      const ScalarField& f2, double h = 1.0) {
  ScalarField v = solve_elliptic(op, B, f, h);
  ScalarField v2 = solve_elliptic(op, B, f2, h);
  double meas = op.dom->cell_measure();
  double lhs = 0, rhs = 0;
  for (Eigen::Index i = 0; i < op.n(); ++i) {
    lhs += std::max(B(v.values[i]) - B(v2.values[i]), 0.0);
    rhs += std::max(f.values[i] - f2.values[i], 0.0);
  }
  return {lhs * meas, rhs * meas};
}

struct ComparisonReport {
  Concentration verdict = Concentration::Equal;
  double max_overshoot = 0.0;  // max over s of cum(v*) - cum(V*)
  double max_undershoot = 0.0;
  double tolerance = 0.0;
  Profile profile_v;       // rearranged solution on Omega
  Profile profile_V;       // symmetrized-problem solution on the ball
  bool radial_check_ran = false;
  Concentration radial_verdict = Concentration::Equal;
};

/// Solves the problem on Omega and the symmetrized problem (data f#) on the
/// equal-measure ball, and compares concentrations; the expected verdict is
/// LESS or EQUAL. For a ball domain the radial comparison (more concentrated
/// radial data yields a more concentrated solution) is exercised as well.
/// The _pre variant takes preassembled matrices (Ab on the Schwarz ball).
inline ComparisonReport elliptic_concentration_experiment_pre(const OperatorMatrix& A,
                                                              const OperatorMatrix& Ab,
                                                              const Nonlinearity& B,
                                                              const ScalarField& f) {
  detail::require(f.values.minCoeff() >= 0.0, "comparison experiment requires f >= 0");
  const Domain& d = *A.dom;
  ScalarField v = solve_elliptic(A, B, f);

  ScalarField fsharp = spherical_rearrangement(f);
  detail::require(fsharp.dom->hash() == Ab.dom->hash(),
                  "Ab must be assembled on the Schwarz ball of A's domain");
  ScalarField V = solve_elliptic(Ab, B, fsharp);

  ComparisonReport rep;
  rep.profile_v = decreasing_rearrangement(v);
  rep.profile_V = decreasing_rearrangement(V);
  rep.tolerance = cross_grid_tolerance(rep.profile_V);
  auto det = concentration_compare_detail(rep.profile_v, rep.profile_V, rep.tolerance);
  rep.verdict = det.verdict;
  rep.max_overshoot = det.max_f_minus_g;
  rep.max_undershoot = det.max_g_minus_f;

  if (B.is_linear() && d.hash() == fsharp.dom->hash()) {
    // Omega is already the canonical ball: radial pair comparison. The more
    // concentrated datum adds mass on the innermost cells.
    auto order = radial_order(d);
    ScalarField f2 = fsharp;
    double bump = 0.2 * (f2.values.maxCoeff() + 1.0);
    std::size_t top = std::max<std::size_t>(1, order.size() / 10);
    for (std::size_t k = 0; k < top; ++k)
      f2.values[static_cast<Eigen::Index>(order[k])] += bump;
    ScalarField v2 = solve_elliptic(Ab, B, f2);
    Profile p2 = decreasing_rearrangement(v2);
    rep.radial_check_ran = true;
    rep.radial_verdict = concentration_compare(rep.profile_V, p2, same_grid_tolerance(p2));
  }
  return rep;
}

inline ComparisonReport elliptic_concentration_experiment(const Domain& d, double sigma,
                                                          const Nonlinearity& B,
                                                          const ScalarField& f) {
  OperatorMatrix A = assemble_restricted(d, sigma);
  OperatorMatrix Ab = assemble_restricted(schwarz_ball(d), sigma);
  return elliptic_concentration_experiment_pre(A, Ab, B, f);
}

/// Radial comparison on a ball: f1 < f2 in concentration implies the same
/// for the solutions (linear B).
inline Concentration elliptic_radial_comparison(const OperatorMatrix& op, double c,
                                                const ScalarField& f1, const ScalarField& f2) {
  Profile pf1 = decreasing_rearrangement(f1), pf2 = decreasing_rearrangement(f2);
  auto hyp = concentration_compare(pf1, pf2, same_grid_tolerance(pf2));
  detail::require(hyp == Concentration::Less || hyp == Concentration::Equal,
                  "radial comparison requires f1 < f2 in concentration");
  ScalarField v1 = solve_linear(op, c, f1);
  ScalarField v2 = solve_linear(op, c, f2);
  Profile p1 = decreasing_rearrangement(v1), p2 = decreasing_rearrangement(v2);
  return concentration_compare(p1, p2, same_grid_tolerance(p2));
}

}  // namespace fracsym
