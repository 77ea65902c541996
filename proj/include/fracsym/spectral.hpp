#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <string>
#include <thread>
#include <vector>

#include "fracsym/fraclap.hpp"
#include "fracsym/parabolic.hpp"

namespace fracsym {

struct SpectralResult {
  Eigen::VectorXd lambda;  // ascending
  Eigen::MatrixXd psi;     // columns, L2-normalized in the cell measure
  std::string method = "dense";
  double fit_residual = 0.0;

  double lambda1() const { return lambda[0]; }
  Eigen::VectorXd psi1() const { return psi.col(0); }
};

/// Lowest k eigenpairs of the dense symmetric matrix; the first eigenfunction
/// is sign-fixed nonnegative.
inline SpectralResult eigensolve(const OperatorMatrix& op, int k) {
  detail::require(k >= 1 && k <= op.n(), "eigensolve: invalid pair count");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.A);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  SpectralResult r;
  r.lambda = es.eigenvalues().head(k);
  r.psi = es.eigenvectors().leftCols(k);
  double scale = 1.0 / std::sqrt(op.dom->cell_measure());
  r.psi *= scale;  // L2 normalization over the domain measure
  if (r.psi.col(0).sum() < 0.0) r.psi.col(0) *= -1.0;
  return r;
}

/// min over the trial fields of the Rayleigh quotient; never below lambda1.
inline double lambda1_rayleigh_check(const OperatorMatrix& op,
                                     const std::vector<ScalarField>& trials) {
  detail::require(!trials.empty(), "rayleigh check needs at least one trial field");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& u : trials) {
    double den = u.values.squaredNorm() * op.dom->cell_measure();
    detail::require(den > 0.0, "zero trial field");
    best = std::min(best, gagliardo_form(op, u) / den);
  }
  return best;
}

struct DecayFit {
  double lambda1_hat = 0.0;
  double fit_residual = 0.0;   // rms residual of the log-linear fit
  double itd_bias = 0.0;       // |log(1+h*rate)/h - rate| style bound, reported
  bool orthogonal_to_psi1 = false;
};

/// Documented fitting regime for the semigroup-decay route: horizon long
/// enough that higher modes decay by e^{-8} over the discarded transient,
/// step small enough that the implicit-Euler rate bias stays near 0.5%.
inline std::pair<double, double> decay_fit_regime(double lambda1, double lambda2) {
  detail::require(lambda2 > lambda1 && lambda1 > 0.0, "regime needs 0 < lambda1 < lambda2");
  double T = 8.0 / (lambda2 - lambda1);
  double h = std::min(0.01 / lambda1, T / 200.0);
  h = std::max(h, T / 20000.0);
  return {T, h};
}

/// Evolves the source-free problem and fits the decay rate of log ||u(t)||_2
/// over the tail window [T/2, T].
inline DecayFit lambda1_decay_fit(const OperatorMatrix& op, const ScalarField& u0, double T,
                                  double h, const SpectralResult* dense = nullptr) {
  detail::require(u0.values.cwiseAbs().maxCoeff() > 0.0, "u0 must be nonzero");
  long steps = static_cast<long>(std::ceil(T / h - 1e-12));
  Resolvent J(op, h);
  double meas = op.dom->cell_measure();
  Eigen::VectorXd u = u0.values;
  std::vector<double> ts, logn;
  for (long k = 1; k <= steps; ++k) {
    u = J.apply(u);
    double t = k * h;
    if (t < 0.5 * T) continue;
    double nrm = std::sqrt(u.squaredNorm() * meas);
    if (!(nrm > 1e-280))
      throw std::runtime_error("decay underflow: reduce T for this grid's spectral gap");
    ts.push_back(t);
    logn.push_back(std::log(nrm));
  }
  detail::require(ts.size() >= 3, "fit window too short");
  double n = static_cast<double>(ts.size());
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    st += ts[k];
    sy += logn[k];
    stt += ts[k] * ts[k];
    sty += ts[k] * logn[k];
  }
  double slope = (n * sty - st * sy) / (n * stt - st * st);
  double icept = (sy - slope * st) / n;
  double ss = 0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    double r = logn[k] - (icept + slope * ts[k]);
    ss += r * r;
  }
  DecayFit fit;
  fit.lambda1_hat = -slope;
  fit.fit_residual = std::sqrt(ss / n);
  fit.itd_bias = std::abs(fit.lambda1_hat - std::log1p(h * fit.lambda1_hat) / h);
  if (dense) {
    double overlap = std::abs(u0.values.dot(dense->psi1())) * op.dom->cell_measure();
    double scale = u0.norm_p(2);
    fit.orthogonal_to_psi1 = overlap < 1e-10 * scale;
  }
  return fit;
}

/// Relative effect of a one-cell measure change on lambda1, from the exact
/// scaling law lambda1 ~ |Omega|^(-sigma/N).
inline double one_cell_tolerance(const Domain& d, double sigma) {
  return (sigma / d.dim) * d.cell_measure() / d.measure();
}

struct FKEntry {
  std::string shape;
  double sigma = 0.0;
  std::int64_t n = 0;
  double lambda1_omega = 0.0;
  double lambda1_ball = 0.0;
  double ratio = 0.0;
  double tol_grid = 0.0;
  double decay_fit_lambda1 = 0.0;
  double measure_omega = 0.0;
  double measure_ball = 0.0;
  double lambda1_spectral_variant = 0.0;  // recorded, no inequality asserted
};

namespace detail {
template <typename F>
void parallel_for(std::size_t count, int workers, F&& body) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  int nthreads = std::min<std::size_t>(workers, count);
  for (int t = 0; t < nthreads; ++t)
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        body(i);
      }
    });
  for (auto& th : pool) th.join();
}
}  // namespace detail

/// Faber-Krahn sweep: for each (shape, sigma) computes lambda1 on the domain
/// and on its equal-measure ball at identical spacing, the ratio, the
/// one-cell tolerance, and optionally the decay-fit cross check.
inline std::vector<FKEntry> faber_krahn_sweep(const std::vector<ShapeSpec>& shapes,
                                              const std::vector<double>& sigmas, std::int64_t n,
                                              bool with_decay_fit = false, int workers = 1,
                                              bool with_spectral_variant = false) {
  std::vector<std::pair<const ShapeSpec*, double>> cases;
  for (const auto& s : shapes)
    for (double sg : sigmas) cases.emplace_back(&s, sg);
  std::vector<FKEntry> out(cases.size());

  detail::parallel_for(cases.size(), workers, [&](std::size_t idx) {
    const ShapeSpec& spec = *cases[idx].first;
    double sigma = cases[idx].second;
    Domain omega = make_shape(spec, n);
    Domain ball = schwarz_ball(omega);
    OperatorMatrix A = assemble_restricted(omega, sigma);
    OperatorMatrix Ab = assemble_restricted(ball, sigma);
    int k = static_cast<int>(std::min<Eigen::Index>(4, A.n()));
    SpectralResult so = eigensolve(A, k);
    SpectralResult sb = eigensolve(Ab, k);
    FKEntry e;
    e.shape = spec.name;
    e.sigma = sigma;
    e.n = n;
    e.lambda1_omega = so.lambda1();
    e.lambda1_ball = sb.lambda1();
    e.ratio = so.lambda1() / sb.lambda1();
    e.tol_grid = one_cell_tolerance(omega, sigma);
    e.measure_omega = omega.measure();
    e.measure_ball = ball.measure();
    if (with_decay_fit) {
      auto [T, h] = decay_fit_regime(so.lambda[0], so.lambda[1]);
      ScalarField u0(A.dom, so.psi1().cwiseAbs() +
                                Eigen::VectorXd::Constant(A.n(), 0.1 * so.psi1().cwiseAbs().maxCoeff()));
      e.decay_fit_lambda1 = lambda1_decay_fit(A, u0, T, h, &so).lambda1_hat;
    }
    if (with_spectral_variant && sigma < 2.0) {
      OperatorMatrix As = assemble_spectral(omega, sigma);
      e.lambda1_spectral_variant = eigensolve(As, 1).lambda1();
    }
    out[idx] = std::move(e);
  });
  return out;
}

}  // namespace fracsym
