#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <vector>

#include "fracsym/domain.hpp"

namespace fracsym {

enum class OperatorKind { Restricted, Spectral };

/// Dense symmetric realization of the fractional Laplacian on a Domain.
/// Restricted matrices keep the exterior killing coefficients T_i; row sums
/// of the matrix equal T exactly, so A applied to the constant 1 yields T.
struct OperatorMatrix {
  DomainPtr dom;
  double sigma = 1.0;
  OperatorKind kind = OperatorKind::Restricted;
  Eigen::MatrixXd A;
  Eigen::VectorXd killing;  // T_i including the normalization constant

  Eigen::Index n() const { return A.rows(); }
};

/// c(N, sigma) = 2^sigma Gamma((N+sigma)/2) / (pi^(N/2) |Gamma(-sigma/2)|),
/// the constant that makes the Fourier symbol |xi|^sigma.
inline double normalization_constant(int dim, double sigma) {
  detail::require(dim == 1 || dim == 2, "dimension must be 1 or 2");
  detail::require(sigma > 0.0 && sigma < 2.0, "sigma must lie in (0,2)");
  double num = std::pow(2.0, sigma) * std::tgamma(0.5 * (dim + sigma));
  double den = std::pow(M_PI, 0.5 * dim) * std::abs(std::tgamma(-0.5 * sigma));
  return num / den;
}

/// kappa_sigma = 2^(1-sigma) Gamma(1-sigma/2) / Gamma(sigma/2).
inline double kappa_sigma(double sigma) {
  detail::require(sigma > 0.0 && sigma < 2.0, "sigma must lie in (0,2)");
  return std::pow(2.0, 1.0 - sigma) * std::tgamma(1.0 - 0.5 * sigma) / std::tgamma(0.5 * sigma);
}

/// theta_sigma = sigma^(sigma-1) kappa_sigma, the flux constant of the
/// extension problem in the z = (y/sigma)^sigma variables.
inline double theta_sigma(double sigma) {
  return std::pow(sigma, sigma - 1.0) * kappa_sigma(sigma);
}

namespace detail {

// Closed-form power integrals of the 1D kernel t^(-1-sigma) over (a,b).
struct Kernel1D {
  double sigma;
  double i0(double a, double b) const {  // int t^(-1-s)
    return (std::pow(a, -sigma) - std::pow(b, -sigma)) / sigma;
  }
  double i1(double a, double b) const {  // int t^(-s)
    if (std::abs(sigma - 1.0) < 1e-13) return std::log(b / a);
    return (std::pow(b, 1.0 - sigma) - std::pow(a, 1.0 - sigma)) / (1.0 - sigma);
  }
  double i2(double a, double b) const {  // int t^(1-s)
    return (std::pow(b, 2.0 - sigma) - std::pow(a, 2.0 - sigma)) / (2.0 - sigma);
  }
};

// Pair weights for the 1D restricted operator. W[k] couples cells k apart;
// the scheme is a sum of symmetric pair forms plus the exact exterior
// killing diagonal, so row sums reproduce T identically. Each W[k] carries a
// second-moment consistency correction that restores O(h^2) interior
// accuracy; the k = 1 weight also absorbs the self-cell PV moment, which is
// what turns the scheme into the standard three-point Laplacian as
// sigma -> 2.
struct PairTable1D {
  double h;
  std::vector<double> w;   // corrected pair weights, index = offset
  std::vector<double> m0;  // exact flat cell integrals, index = offset

  PairTable1D(double spacing, std::int64_t max_offset, double sigma) : h(spacing) {
    Kernel1D K{sigma};
    w.assign(static_cast<std::size_t>(max_offset) + 1, 0.0);
    m0.assign(static_cast<std::size_t>(max_offset) + 1, 0.0);
    double self_m2 = 2.0 * K.i2(0.0, 0.5 * h) ;  // int_{cell} t^2 K(t) dt
    for (std::int64_t k = 1; k <= max_offset; ++k) {
      double d = k * h, a = d - 0.5 * h, b = d + 0.5 * h;
      double i0 = K.i0(a, b), i1 = K.i1(a, b), i2 = K.i2(a, b);
      double m1 = i1 - d * i0;
      double m2 = i2 - 2.0 * d * i1 + d * d * i0;
      double mu = 2.0 * d * m1 + m2;
      std::size_t idx = static_cast<std::size_t>(k);
      m0[idx] = i0;
      w[idx] = i0 + mu / (static_cast<double>(k * k) * h * h);
      if (k == 1) w[idx] += 0.5 * self_m2 / (h * h);
      if (!(w[idx] > 0.0))
        throw std::runtime_error("pair weight lost positivity; assembly invalid");
    }
  }
};

// 2D kernel moments per lattice offset. Near offsets use tensor
// Gauss-Legendre on the cell, far offsets the midpoint value with its
// curvature correction.
struct PairTable2D {
  double h;
  std::int64_t mx, my;  // table covers |dx| <= mx, |dy| <= my
  std::vector<double> w;
  std::vector<double> m0;

  double& at(std::vector<double>& v, std::int64_t dx, std::int64_t dy) {
    return v[static_cast<std::size_t>(dx * (my + 1) + dy)];
  }
  double get_w(std::int64_t dx, std::int64_t dy) const {
    return w[static_cast<std::size_t>(std::abs(dx) * (my + 1) + std::abs(dy))];
  }
  double get_m0(std::int64_t dx, std::int64_t dy) const {
    return m0[static_cast<std::size_t>(std::abs(dx) * (my + 1) + std::abs(dy))];
  }

  PairTable2D(double spacing, std::int64_t max_dx, std::int64_t max_dy, double sigma)
      : h(spacing), mx(max_dx), my(max_dy) {
    w.assign(static_cast<std::size_t>((mx + 1) * (my + 1)), 0.0);
    m0 = w;
    const auto gl = gauss_legendre(12);
    const double p = -(2.0 + sigma);

    auto kernel = [&](double x, double y) { return std::pow(x * x + y * y, 0.5 * p); };

    // Per-offset moments: flat weight, and the scalar 2 c.m1 + tr(m2)
    // entering the isotropic correction.
    double q = 0.0;
    for (std::int64_t dx = 0; dx <= mx; ++dx) {
      for (std::int64_t dy = 0; dy <= my; ++dy) {
        if (dx == 0 && dy == 0) continue;
        double cx = dx * h, cy = dy * h;
        double r2 = cx * cx + cy * cy;
        double flat, corr_scalar;
        if (std::max(dx, dy) <= 4) {
          double s0 = 0, sx = 0, sy = 0, s2 = 0;
          for (std::size_t a = 0; a < gl.x.size(); ++a)
            for (std::size_t b = 0; b < gl.x.size(); ++b) {
              double tx = cx + 0.5 * h * gl.x[a], ty = cy + 0.5 * h * gl.x[b];
              double kv = kernel(tx, ty) * gl.w[a] * gl.w[b] * 0.25 * h * h;
              s0 += kv;
              sx += (tx - cx) * kv;
              sy += (ty - cy) * kv;
              s2 += ((tx - cx) * (tx - cx) + (ty - cy) * (ty - cy)) * kv;
            }
          flat = s0;
          corr_scalar = 2.0 * (cx * sx + cy * sy) + s2;
        } else {
          double kc = std::pow(r2, 0.5 * p);
          flat = h * h * kc * (1.0 + (2.0 + sigma) * (2.0 + sigma) * h * h / (24.0 * r2));
          corr_scalar = -(1.0 + sigma) * (h * h * h * h / 6.0) * kc;
        }
        at(m0, dx, dy) = flat;
        at(w, dx, dy) = flat;
        // half-lattice multiplicity: (a>0,b>0) orbits appear twice
        double mult = (dx > 0 && dy > 0) ? 2.0 : 1.0;
        q += mult * corr_scalar;
      }
    }
    // self-cell second moment, polar closed form in r with angular quadrature
    const auto ga = gauss_legendre(32);
    double ang = 0.0;
    for (std::size_t a = 0; a < ga.x.size(); ++a) {
      double th = 0.125 * M_PI * (ga.x[a] + 1.0);
      ang += std::pow(std::cos(th), sigma - 2.0) * ga.w[a] * 0.125 * M_PI;
    }
    double self_tr_m2 = 8.0 / (2.0 - sigma) * std::pow(0.5 * h, 2.0 - sigma) * ang;
    q += 0.5 * self_tr_m2;

    // distribute the isotropic correction over the four nearest offsets;
    // the Hessian contraction tr(H Q) with isotropic Q = (q/2) I pairs with
    // the five-point form (PF_10 + PF_01) u ~ -h^2 Lap u
    at(w, 1, 0) += 0.5 * q / (h * h);
    at(w, 0, 1) += 0.5 * q / (h * h);
    if (!(get_w(1, 0) > 0.0) || !(get_w(0, 1) > 0.0))
      throw std::runtime_error("pair weight lost positivity; assembly invalid");
  }
};

// Distance from an interior point to the rectangle boundary along (cos t, sin t).
inline double ray_box_distance(double x, double y, double ct, double st, double lx, double hx,
                               double ly, double hy) {
  double t = std::numeric_limits<double>::infinity();
  if (ct > 1e-300) t = std::min(t, (hx - x) / ct);
  if (ct < -1e-300) t = std::min(t, (lx - x) / ct);
  if (st > 1e-300) t = std::min(t, (hy - y) / st);
  if (st < -1e-300) t = std::min(t, (ly - y) / st);
  return t;
}

// int_{R^2 \ box} |x - y|^(-2-sigma) dy by the exact radial integral per
// direction, integrated over angle with the corner angles as panel breaks.
inline double box_complement_integral_2d(double x, double y, const Domain& d, double sigma) {
  double lx = d.lo[0], hx = d.hi[0], ly = d.lo[1], hy = d.hi[1];
  std::vector<double> angles = {
      std::atan2(ly - y, lx - x), std::atan2(ly - y, hx - x),
      std::atan2(hy - y, lx - x), std::atan2(hy - y, hx - x)};
  std::sort(angles.begin(), angles.end());
  angles.push_back(angles.front() + 2.0 * M_PI);
  static const GaussRule gl = gauss_legendre(16);
  double total = 0.0;
  for (std::size_t seg = 0; seg + 1 < angles.size(); ++seg) {
    double a = angles[seg], b = angles[seg + 1];
    if (b - a < 1e-15) continue;
    for (std::size_t i = 0; i < gl.x.size(); ++i) {
      double th = 0.5 * (a + b) + 0.5 * (b - a) * gl.x[i];
      double rho = ray_box_distance(x, y, std::cos(th), std::sin(th), lx, hx, ly, hy);
      total += std::pow(rho, -sigma) / sigma * gl.w[i] * 0.5 * (b - a);
    }
  }
  return total;
}

// Exterior integrals int_{R^N \ Omega} K(x_i - y) dy, exact in 1D and exact
// per inactive cell plus the angular-radial box complement in 2D.
inline Eigen::VectorXd exterior_integrals(const Domain& d, double sigma,
                                          const PairTable1D* t1, const PairTable2D* t2) {
  Eigen::VectorXd T(static_cast<Eigen::Index>(d.size()));
  if (d.dim == 1) {
    Kernel1D K{sigma};
    for (std::size_t k = 0; k < d.size(); ++k) {
      double x = d.center(k)[0];
      double left = x - d.lo[0], right = d.hi[0] - x;
      double acc = std::pow(left, -sigma) / sigma + std::pow(right, -sigma) / sigma;
      std::int64_t ix = d.cells[k];
      for (std::int64_t j = 0; j < d.nx; ++j) {
        if (d.lattice_index[static_cast<std::size_t>(j)] >= 0) continue;
        acc += t1->m0[static_cast<std::size_t>(std::abs(j - ix))];
      }
      T[static_cast<Eigen::Index>(k)] = acc;
    }
    return T;
  }
  for (std::size_t k = 0; k < d.size(); ++k) {
    auto c = d.center(k);
    double acc = box_complement_integral_2d(c[0], c[1], d, sigma);
    std::int64_t ix = d.cells[k] / d.ny, iy = d.cells[k] % d.ny;
    for (std::int64_t jx = 0; jx < d.nx; ++jx)
      for (std::int64_t jy = 0; jy < d.ny; ++jy) {
        if (d.lattice_index[static_cast<std::size_t>(jx * d.ny + jy)] >= 0) continue;
        acc += t2->get_m0(jx - ix, jy - iy);
      }
    T[static_cast<Eigen::Index>(k)] = acc;
  }
  return T;
}

}  // namespace detail

/// Assembles the restricted fractional Laplacian: off-diagonal pair couplings
/// from the singular-kernel cell quadrature, diagonal from the pair sums plus
/// the exact exterior killing term.
inline OperatorMatrix assemble_restricted(const Domain& d, double sigma) {
  double c = normalization_constant(d.dim, sigma);
  const Eigen::Index n = static_cast<Eigen::Index>(d.size());
  OperatorMatrix op;
  op.dom = std::make_shared<Domain>(d);
  op.sigma = sigma;
  op.kind = OperatorKind::Restricted;
  op.A = Eigen::MatrixXd::Zero(n, n);

  if (d.dim == 1) {
    detail::PairTable1D table(d.spacing, d.nx, sigma);
    op.killing = c * detail::exterior_integrals(d, sigma, &table, nullptr);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        std::int64_t k = d.cells[static_cast<std::size_t>(j)] - d.cells[static_cast<std::size_t>(i)];
        double wij = c * table.w[static_cast<std::size_t>(k)];
        op.A(i, j) = -wij;
        op.A(j, i) = -wij;
        op.A(i, i) += wij;
        op.A(j, j) += wij;
      }
      op.A(i, i) += op.killing[i];
    }
  } else {
    detail::PairTable2D table(d.spacing, d.nx, d.ny, sigma);
    op.killing = c * detail::exterior_integrals(d, sigma, nullptr, &table);
    std::vector<std::int64_t> gx(d.size()), gy(d.size());
    for (std::size_t k = 0; k < d.size(); ++k) {
      gx[k] = d.cells[k] / d.ny;
      gy[k] = d.cells[k] % d.ny;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        double wij = c * table.get_w(gx[static_cast<std::size_t>(j)] - gx[static_cast<std::size_t>(i)],
                                     gy[static_cast<std::size_t>(j)] - gy[static_cast<std::size_t>(i)]);
        op.A(i, j) = -wij;
        op.A(j, i) = -wij;
        op.A(i, i) += wij;
        op.A(j, j) += wij;
      }
      op.A(i, i) += op.killing[i];
    }
  }
  if (!op.A.allFinite()) throw std::runtime_error("assembly produced non-finite entries");
  return op;
}

/// Standard Dirichlet Laplacian in finite-volume form: missing neighbors are
/// reflected through the cell face, which keeps eigenvalues at the exact
/// discrete sine values.
inline Eigen::MatrixXd dirichlet_laplacian(const Domain& d) {
  const Eigen::Index n = static_cast<Eigen::Index>(d.size());
  double ih2 = 1.0 / (d.spacing * d.spacing);
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k < d.size(); ++k) {
    std::int64_t ix = d.cells[k] / d.ny, iy = d.cells[k] % d.ny;
    const std::int64_t offs[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    int slots = d.dim == 1 ? 2 : 4;
    for (int s = 0; s < slots; ++s) {
      std::int32_t nb = d.active_at(ix + offs[s][0], iy + offs[s][1]);
      Eigen::Index i = static_cast<Eigen::Index>(k);
      if (nb >= 0) {
        L(i, i) += ih2;
        L(i, nb) -= ih2;
      } else {
        L(i, i) += 2.0 * ih2;
      }
    }
  }
  return L;
}

/// Spectral variant: eigenvalues of the Dirichlet Laplacian raised to the
/// power sigma/2 on the same eigenvectors. Accepts sigma = 2 (the Laplacian
/// itself).
inline OperatorMatrix assemble_spectral(const Domain& d, double sigma) {
  detail::require(sigma > 0.0 && sigma <= 2.0, "spectral variant needs sigma in (0,2]");
  Eigen::MatrixXd L = dirichlet_laplacian(d);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
  Eigen::VectorXd lam = es.eigenvalues().array().pow(0.5 * sigma);
  OperatorMatrix op;
  op.dom = std::make_shared<Domain>(d);
  op.sigma = sigma;
  op.kind = OperatorKind::Spectral;
  op.A = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
  op.killing = Eigen::VectorXd();
  return op;
}

/// Quadratic form <Au, u> x cell measure through the assembled matrix.
inline double gagliardo_form(const OperatorMatrix& op, const ScalarField& u) {
  detail::require(op.kind == OperatorKind::Restricted, "gagliardo_form needs a RESTRICTED matrix");
  detail::require(u.dom->hash() == op.dom->hash(), "field/operator domain mismatch");
  return u.values.dot(op.A * u.values) * op.dom->cell_measure();
}

/// Same quantity evaluated as the discrete pair double sum plus the exterior
/// term, from freshly computed weights; never touches the assembled matrix.
/// Also serves as the memory-light route for large symbol-check grids.
inline double gagliardo_form_direct(const Domain& d, double sigma, const Eigen::VectorXd& u) {
  detail::require(static_cast<std::size_t>(u.size()) == d.size(), "field length mismatch");
  double c = normalization_constant(d.dim, sigma);
  double acc = 0.0;
  if (d.dim == 1) {
    detail::PairTable1D table(d.spacing, d.nx, sigma);
    Eigen::VectorXd T = detail::exterior_integrals(d, sigma, &table, nullptr);
    for (std::size_t i = 0; i < d.size(); ++i) {
      for (std::size_t j = i + 1; j < d.size(); ++j) {
        double diff = u[static_cast<Eigen::Index>(i)] - u[static_cast<Eigen::Index>(j)];
        acc += table.w[static_cast<std::size_t>(d.cells[j] - d.cells[i])] * diff * diff;
      }
      acc += T[static_cast<Eigen::Index>(i)] * u[static_cast<Eigen::Index>(i)] *
             u[static_cast<Eigen::Index>(i)];
    }
  } else {
    detail::PairTable2D table(d.spacing, d.nx, d.ny, sigma);
    Eigen::VectorXd T = detail::exterior_integrals(d, sigma, nullptr, &table);
    std::vector<std::int64_t> gx(d.size()), gy(d.size());
    for (std::size_t k = 0; k < d.size(); ++k) {
      gx[k] = d.cells[k] / d.ny;
      gy[k] = d.cells[k] % d.ny;
    }
    for (std::size_t i = 0; i < d.size(); ++i) {
      for (std::size_t j = i + 1; j < d.size(); ++j) {
        double diff = u[static_cast<Eigen::Index>(i)] - u[static_cast<Eigen::Index>(j)];
        acc += table.get_w(gx[j] - gx[i], gy[j] - gy[i]) * diff * diff;
      }
      acc += T[static_cast<Eigen::Index>(i)] * u[static_cast<Eigen::Index>(i)] *
             u[static_cast<Eigen::Index>(i)];
    }
  }
  return c * acc * d.cell_measure();
}

}  // namespace fracsym
