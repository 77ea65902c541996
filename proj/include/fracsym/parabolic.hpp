#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "fracsym/elliptic.hpp"
#include "fracsym/fraclap.hpp"
#include "fracsym/rearrange.hpp"

namespace fracsym {

/// Step sources deliver the discretized f_k for [t_{k-1}, t_k]: the interval
/// average when f is given in closed form, the left endpoint for samples.
using StepSource = std::function<Eigen::VectorXd(double t_prev, double t_next)>;

inline StepSource source_zero(Eigen::Index n) {
  return [n](double, double) { return Eigen::VectorXd::Zero(n).eval(); };
}

inline StepSource source_constant(Eigen::VectorXd v) {
  return [v = std::move(v)](double, double) { return v; };
}

inline StepSource source_closed_form(std::function<Eigen::VectorXd(double)> f) {
  // two-point Gauss average over the step
  return [f = std::move(f)](double a, double b) {
    double m = 0.5 * (a + b), r = 0.5 * (b - a) / std::sqrt(3.0);
    return (0.5 * (f(m - r) + f(m + r))).eval();
  };
}

inline StepSource source_samples(std::function<Eigen::VectorXd(double)> f) {
  return [f = std::move(f)](double a, double) { return f(a); };
}

/// Cached resolvent J_h = (I + hA)^{-1}; applications add one refinement pass.
class Resolvent {
 public:
  Resolvent(const OperatorMatrix& op, double h) : h_(h) {
    detail::require(h > 0.0, "step size must be positive");
    M_ = h * op.A;
    M_.diagonal().array() += 1.0;
    llt_.compute(M_);
    if (llt_.info() != Eigen::Success)
      throw std::runtime_error("resolvent factorization failed");
  }
  double step() const { return h_; }
  Eigen::VectorXd apply(const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd v = llt_.solve(rhs);
    v += llt_.solve(rhs - M_ * v);
    return v;
  }

 private:
  double h_;
  Eigen::MatrixXd M_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

/// One implicit step: returns (I + hA)^{-1}(prev + h f_k).
inline ScalarField itd_step(const OperatorMatrix& op, double h, const ScalarField& prev,
                            const ScalarField& f_k) {
  detail::require(prev.dom->hash() == op.dom->hash(), "state/operator domain mismatch");
  Resolvent J(op, h);
  return ScalarField(prev.dom, J.apply(prev.values + h * f_k.values));
}

struct Trajectory {
  DomainPtr dom;
  double h = 0.0;
  std::vector<double> times;                // saved times, t_0 = 0 first
  std::vector<Eigen::VectorXd> states;      // state per saved time
  std::vector<Eigen::VectorXd> sources;     // f_k used on the step ending at the saved time

  const Eigen::VectorXd& final_state() const { return states.back(); }
  double l2(std::size_t k) const {
    return std::sqrt(states[k].squaredNorm() * dom->cell_measure());
  }
};

/// Implicit time discretization of u' + Au = f up to T with step h; T is
/// rounded up to a whole number of steps and the actual horizon recorded.
inline Trajectory evolve(const OperatorMatrix& op, const ScalarField& u0, const StepSource& f,
                         double T, double h, int save_every = 1) {
  detail::require(T > 0.0 && h > 0.0, "evolve requires T > 0 and h > 0");
  detail::require(u0.dom->hash() == op.dom->hash(), "state/operator domain mismatch");
  long steps = static_cast<long>(std::ceil(T / h - 1e-12));
  Resolvent J(op, h);
  Trajectory tr;
  tr.dom = u0.dom;
  tr.h = h;
  tr.times.push_back(0.0);
  tr.states.push_back(u0.values);
  tr.sources.emplace_back(Eigen::VectorXd::Zero(u0.values.size()));
  Eigen::VectorXd u = u0.values;
  for (long k = 1; k <= steps; ++k) {
    Eigen::VectorXd fk = f((k - 1) * h, k * h);
    u = J.apply(u + h * fk);
    if (k % save_every == 0 || k == steps) {
      tr.times.push_back(k * h);
      tr.states.push_back(u);
      tr.sources.push_back(std::move(fk));
    }
  }
  return tr;
}

/// e^{-tA} u0 through the eigendecomposition; oracle route for the
/// exponential-formula checks.
inline Eigen::VectorXd heat_semigroup_apply(const OperatorMatrix& op, double t,
                                            const Eigen::VectorXd& u0) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.A);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  Eigen::VectorXd coef = es.eigenvectors().transpose() * u0;
  coef.array() *= (-t * es.eigenvalues().array()).exp();
  return es.eigenvectors() * coef;
}

/// || (J_{t/n})^n u0 - e^{-tA} u0 ||_2 for each n; decreasing, O(1/n).
inline std::vector<std::pair<long, double>> crandall_liggett_limit(
    const OperatorMatrix& op, const ScalarField& u0, double t, const std::vector<long>& ns) {
  detail::require(t >= 0.0, "time must be nonnegative");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.A);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  Eigen::VectorXd coef = es.eigenvectors().transpose() * u0.values;
  Eigen::VectorXd exact =
      es.eigenvectors() * (coef.array() * (-t * es.eigenvalues().array()).exp()).matrix();
  double meas = op.dom->cell_measure();
  std::vector<std::pair<long, double>> table;
  for (long n : ns) {
    detail::require(n >= 1, "resolvent power needs n >= 1");
    Eigen::VectorXd u;
    if (t == 0.0) {
      u = u0.values;
    } else {
      Resolvent J(op, t / static_cast<double>(n));
      u = u0.values;
      for (long k = 0; k < n; ++k) u = J.apply(u);
    }
    table.emplace_back(n, std::sqrt((u - exact).squaredNorm() * meas));
  }
  return table;
}

struct ParabolicReport {
  std::vector<double> times;
  std::vector<Concentration> verdicts;
  std::vector<double> max_overshoots;
  std::vector<std::array<double, 3>> norms_u;  // p = 1, 2, inf
  std::vector<std::array<double, 3>> norms_v;
  double tolerance = 0.0;
  bool all_less_equal = true;
};

/// Concentration comparison along the evolution: u on Omega against v on the
/// equal-measure ball with rearranged data dominating the rearrangements of
/// (u0, f). Hypotheses are verified before stepping.
inline ParabolicReport parabolic_concentration_experiment(
    const Domain& d, double sigma, const ScalarField& u0, const StepSource& f,
    const ScalarField& ubar0, const StepSource& fbar, double T, double h, int save_every = 1) {
  detail::require(u0.values.minCoeff() >= 0.0, "u0 must be nonnegative");
  OperatorMatrix A = assemble_restricted(d, sigma);
  Domain ball = schwarz_ball(d);
  detail::require(ubar0.dom->hash() == ball.hash(),
                  "ubar0 must live on the Schwarz ball of the domain");

  // hypothesis: ubar0 rearranged, and u0# < ubar0 in concentration
  auto order = radial_order(ball);
  for (std::size_t k = 1; k < order.size(); ++k)
    detail::require(ubar0.values[static_cast<Eigen::Index>(order[k])] <=
                        ubar0.values[static_cast<Eigen::Index>(order[k - 1])] + 1e-12,
                    "ubar0 is not rearranged (radially non-increasing)");
  Profile pu0 = decreasing_rearrangement(u0);
  Profile pub = decreasing_rearrangement(ubar0);
  auto hyp = concentration_compare(pu0, pub, same_grid_tolerance(pub) + 1e-14);
  detail::require(hyp == Concentration::Less || hyp == Concentration::Equal,
                  "hypothesis u0# < ubar0 violated");

  OperatorMatrix Ab = assemble_restricted(ball, sigma);
  Trajectory tu = evolve(A, u0, f, T, h, save_every);
  Trajectory tv = evolve(Ab, ubar0, fbar, T, h, save_every);

  // hypothesis on the sources, step by step
  for (std::size_t k = 1; k < tu.times.size(); ++k) {
    Profile pf = decreasing_rearrangement(ScalarField(tu.dom, tu.sources[k]));
    Profile pfb = decreasing_rearrangement(ScalarField(tv.dom, tv.sources[k]));
    auto fh = concentration_compare(pf, pfb, same_grid_tolerance(pfb) + 1e-14);
    detail::require(fh == Concentration::Less || fh == Concentration::Equal,
                    "hypothesis f# < fbar violated at a time step");
  }

  ParabolicReport rep;
  for (std::size_t k = 0; k < tu.times.size(); ++k) {
    ScalarField uk(tu.dom, tu.states[k]);
    ScalarField vk(tv.dom, tv.states[k]);
    Profile pu = decreasing_rearrangement(uk);
    Profile pv = decreasing_rearrangement(vk);
    double tol = cross_grid_tolerance(pv);
    auto det = concentration_compare_detail(pu, pv, tol);
    rep.times.push_back(tu.times[k]);
    rep.verdicts.push_back(det.verdict);
    rep.max_overshoots.push_back(det.max_f_minus_g);
    rep.norms_u.push_back({uk.norm_p(1), uk.norm_p(2), uk.norm_p(INFINITY)});
    rep.norms_v.push_back({vk.norm_p(1), vk.norm_p(2), vk.norm_p(INFINITY)});
    rep.tolerance = std::max(rep.tolerance, tol);
    if (det.verdict != Concentration::Less && det.verdict != Concentration::Equal)
      rep.all_less_equal = false;
  }
  return rep;
}

/// Exploration mode for u' + A(nonlinear law) u = f via per-step monotone
/// solves; no comparison claim is attached to this path.
inline Trajectory evolve_nonlinear(const OperatorMatrix& op, const Nonlinearity& B,
                                   const ScalarField& u0, const StepSource& f, double T, double h,
                                   int save_every = 1) {
  detail::require(T > 0.0 && h > 0.0, "evolve requires T > 0 and h > 0");
  long steps = static_cast<long>(std::ceil(T / h - 1e-12));
  Trajectory tr;
  tr.dom = u0.dom;
  tr.h = h;
  tr.times.push_back(0.0);
  tr.states.push_back(u0.values);
  tr.sources.emplace_back(Eigen::VectorXd::Zero(u0.values.size()));
  Eigen::VectorXd u = u0.values;
  for (long k = 1; k <= steps; ++k) {
    Eigen::VectorXd fk = f((k - 1) * h, k * h);
    // u_k + h L A(u_k) = u_{k-1} + h f_k, solved in w = A(u_k): hLw + B(w) = rhs
    ScalarField rhs(tr.dom, (u + h * fk).cwiseMax(0.0));
    ScalarField w = solve_nonlinear(op, B, rhs, h);
    u = B.apply(w.values);
    if (k % save_every == 0 || k == steps) {
      tr.times.push_back(k * h);
      tr.states.push_back(u);
      tr.sources.push_back(std::move(fk));
    }
  }
  return tr;
}

}  // namespace fracsym
