#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "fracsym/detail/numeric.hpp"

namespace fracsym {

/// Measure of the unit ball: 2 in 1D (the interval (-1,1)), pi in 2D.
inline double unit_ball_measure(int dim) {
  detail::require(dim == 1 || dim == 2, "dimension must be 1 or 2");
  return dim == 1 ? 2.0 : M_PI;
}

/// Bounded domain as a masked uniform lattice. Cells are whole squares or
/// segments of size `spacing`; the active set is stored as sorted lattice
/// ids, id = ix*ny + iy, which orders cells lexicographically by (x, y).
struct Domain {
  int dim = 1;
  double spacing = 0.0;
  std::array<double, 2> lo{{0.0, 0.0}};
  std::array<double, 2> hi{{0.0, 0.0}};
  std::int64_t nx = 0, ny = 1;
  std::vector<std::int64_t> cells;          // active lattice ids, ascending
  std::vector<std::int32_t> lattice_index;  // lattice id -> active index or -1

  std::size_t size() const { return cells.size(); }
  double cell_measure() const { return dim == 1 ? spacing : spacing * spacing; }
  double measure() const { return static_cast<double>(cells.size()) * cell_measure(); }

  std::array<double, 2> center(std::size_t k) const {
    std::int64_t id = cells[k];
    std::int64_t ix = id / ny, iy = id % ny;
    return {lo[0] + (ix + 0.5) * spacing, dim == 2 ? lo[1] + (iy + 0.5) * spacing : 0.0};
  }

  /// Active index of the cell at lattice coordinates, or -1.
  std::int32_t active_at(std::int64_t ix, std::int64_t iy) const {
    if (ix < 0 || ix >= nx || iy < 0 || iy >= ny) return -1;
    return lattice_index[ix * ny + iy];
  }

  double diameter() const {
    if (dim == 1) return hi[0] - lo[0];
    double dx = hi[0] - lo[0], dy = hi[1] - lo[1];
    return std::sqrt(dx * dx + dy * dy);
  }

  void finalize() {
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    detail::require(!cells.empty(), "domain has no active cells");
    lattice_index.assign(static_cast<std::size_t>(nx * ny), -1);
    for (std::size_t k = 0; k < cells.size(); ++k)
      lattice_index[static_cast<std::size_t>(cells[k])] = static_cast<std::int32_t>(k);
  }

  std::string hash() const {
    std::uint64_t h = detail::fnv1a(&dim, sizeof dim);
    h = detail::fnv1a(&spacing, sizeof spacing, h);
    h = detail::fnv1a(lo.data(), sizeof lo, h);
    h = detail::fnv1a(hi.data(), sizeof hi, h);
    h = detail::fnv1a(&nx, sizeof nx, h);
    h = detail::fnv1a(&ny, sizeof ny, h);
    h = detail::fnv1a(cells.data(), cells.size() * sizeof(std::int64_t), h);
    return detail::hex64(h);
  }
};

using DomainPtr = std::shared_ptr<const Domain>;

/// Real values on the active cells; interpreted as the null-extension
/// (identically zero outside the domain).
struct ScalarField {
  DomainPtr dom;
  Eigen::VectorXd values;

  ScalarField() = default;
  ScalarField(DomainPtr d, Eigen::VectorXd v) : dom(std::move(d)), values(std::move(v)) {
    detail::require(static_cast<std::size_t>(values.size()) == dom->size(),
                    "field length does not match active cell count");
  }
  static ScalarField zero(DomainPtr d) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d->size()));
    return ScalarField(std::move(d), std::move(v));
  }
  static ScalarField constant(DomainPtr d, double c) {
    Eigen::VectorXd v = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(d->size()), c);
    return ScalarField(std::move(d), std::move(v));
  }

  double norm_p(double p) const {
    double meas = dom->cell_measure();
    if (std::isinf(p)) return values.cwiseAbs().maxCoeff();
    if (p == 1.0) return values.cwiseAbs().sum() * meas;
    if (p == 2.0) return std::sqrt(values.squaredNorm() * meas);
    double s = 0;
    for (double v : values) s += std::pow(std::abs(v), p);
    return std::pow(s * meas, 1.0 / p);
  }
  double integral() const { return values.sum() * dom->cell_measure(); }
};

inline Domain build_interval(double a, double b, std::int64_t n) {
  detail::require(std::isfinite(a) && std::isfinite(b), "interval endpoints must be finite");
  detail::require(a < b, "interval requires a < b");
  detail::require(n >= 2, "interval requires at least 2 cells");
  Domain d;
  d.dim = 1;
  d.lo = {a, 0.0};
  d.hi = {b, 0.0};
  d.nx = n;
  d.ny = 1;
  d.spacing = (b - a) / static_cast<double>(n);
  d.cells.resize(static_cast<std::size_t>(n));
  std::iota(d.cells.begin(), d.cells.end(), std::int64_t{0});
  d.finalize();
  return d;
}

/// Keep only the listed active-cell positions of an existing domain.
inline Domain restrict_cells(const Domain& d, const std::vector<std::size_t>& keep) {
  Domain out = d;
  out.cells.clear();
  for (std::size_t k : keep) {
    detail::require(k < d.cells.size(), "restrict_cells: index out of range");
    out.cells.push_back(d.cells[k]);
  }
  out.finalize();
  return out;
}

inline Domain build_masked_2d(double x0, double x1, double y0, double y1, std::int64_t nx,
                              std::int64_t ny,
                              const std::function<bool(double, double)>& inside) {
  detail::require(x0 < x1 && y0 < y1, "degenerate bounding box");
  detail::require(nx >= 1 && ny >= 1, "cell counts must be positive");
  double hx = (x1 - x0) / static_cast<double>(nx);
  double hy = (y1 - y0) / static_cast<double>(ny);
  detail::require(std::abs(hx - hy) <= 1e-9 * std::max(hx, hy),
                  "anisotropic spacing requested; cells must be square");
  Domain d;
  d.dim = 2;
  d.lo = {x0, y0};
  d.hi = {x1, y1};
  d.nx = nx;
  d.ny = ny;
  d.spacing = hx;
  for (std::int64_t ix = 0; ix < nx; ++ix)
    for (std::int64_t iy = 0; iy < ny; ++iy) {
      double cx = x0 + (ix + 0.5) * hx, cy = y0 + (iy + 0.5) * hy;
      if (inside(cx, cy)) d.cells.push_back(ix * ny + iy);
    }
  detail::require(!d.cells.empty(), "empty mask: no cell center satisfies the predicate");
  d.finalize();
  return d;
}

/// Radius of the ball with the given measure: (|Omega| / omega_N)^(1/N).
inline double continuum_ball_radius(double measure, int dim) {
  return std::pow(measure / unit_ball_measure(dim), 1.0 / dim);
}

/// Ball of the same measure as `d`, discretized at the same spacing on its
/// own origin-centered lattice. The active set is the cell-count-matched set
/// of cells nearest the origin, so discrete measures agree exactly.
inline Domain schwarz_ball(const Domain& d) {
  double h = d.spacing;
  std::size_t count = d.size();
  if (d.dim == 1) {
    double half = 0.5 * static_cast<double>(count) * h;
    return build_interval(-half, half, static_cast<std::int64_t>(count));
  }
  double r = continuum_ball_radius(d.measure(), 2);
  std::int64_t m = static_cast<std::int64_t>(std::ceil(r / h)) + 2;
  Domain ball;
  ball.dim = 2;
  ball.spacing = h;
  ball.lo = {-m * h, -m * h};
  ball.hi = {m * h, m * h};
  ball.nx = ball.ny = 2 * m;
  struct Entry {
    double r2;
    std::int64_t id;
  };
  std::vector<Entry> entries;
  entries.reserve(static_cast<std::size_t>(ball.nx * ball.ny));
  for (std::int64_t ix = 0; ix < ball.nx; ++ix)
    for (std::int64_t iy = 0; iy < ball.ny; ++iy) {
      double cx = ball.lo[0] + (ix + 0.5) * h, cy = ball.lo[1] + (iy + 0.5) * h;
      entries.push_back({cx * cx + cy * cy, ix * ball.ny + iy});
    }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.r2 != b.r2 ? a.r2 < b.r2 : a.id < b.id;
  });
  detail::require(entries.size() >= count, "internal: ball lattice too small");
  for (std::size_t k = 0; k < count; ++k) ball.cells.push_back(entries[k].id);
  ball.finalize();
  return ball;
}

/// Active cells of a ball domain ordered by distance from the origin
/// (ties by lattice id); the measure coordinate of cell k is k*cell_measure.
inline std::vector<std::size_t> radial_order(const Domain& ball) {
  std::vector<std::size_t> order(ball.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> r2(ball.size());
  for (std::size_t k = 0; k < ball.size(); ++k) {
    auto c = ball.center(k);
    double mx = 0.5 * (ball.lo[0] + ball.hi[0]);
    double my = ball.dim == 2 ? 0.5 * (ball.lo[1] + ball.hi[1]) : 0.0;
    double dx = c[0] - mx, dy = c[1] - my;
    r2[k] = dx * dx + dy * dy;
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return r2[a] != r2[b] ? r2[a] < r2[b] : ball.cells[a] < ball.cells[b];
  });
  return order;
}

// ---------------------------------------------------------------------------
// Named shapes. Specs look like "disk:r=1,n=64"; every 2D shape lives on a
// square bounding lattice so spacings are equal by construction.
// ---------------------------------------------------------------------------

struct ShapeSpec {
  std::string name;
  std::map<std::string, double> params;

  double get(const std::string& key, double fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  }
  bool has(const std::string& key) const { return params.count(key) > 0; }
};

inline ShapeSpec parse_shape_spec(const std::string& text) {
  ShapeSpec spec;
  auto colon = text.find(':');
  spec.name = text.substr(0, colon);
  if (colon != std::string::npos) {
    std::stringstream ss(text.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      auto eq = item.find('=');
      detail::require(eq != std::string::npos, "shape parameter must be key=value: " + item);
      spec.params[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
    }
  }
  return spec;
}

inline Domain make_shape(const ShapeSpec& spec, std::int64_t n_override = 0) {
  std::int64_t n = n_override > 0 ? n_override : static_cast<std::int64_t>(spec.get("n", 0));
  detail::require(n >= 2, "shape needs a resolution parameter n >= 2");
  const std::string& s = spec.name;
  if (s == "interval") {
    return build_interval(spec.get("a", 0.0), spec.get("b", 1.0), n);
  }
  if (s == "union-intervals") {
    double a1 = spec.get("a1", 0.0), b1 = spec.get("b1", 1.0);
    double a2 = spec.get("a2", 2.0), b2 = spec.get("b2", 3.0);
    detail::require(a1 < b1 && b1 <= a2 && a2 < b2, "union-intervals requires a1<b1<=a2<b2");
    Domain grid = build_interval(a1, b2, n);
    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      double x = grid.center(k)[0];
      if ((x > a1 && x < b1) || (x > a2 && x < b2)) keep.push_back(k);
    }
    return restrict_cells(grid, keep);
  }
  if (s == "square") {
    double side = spec.get("s", 1.0);
    double half = 0.5 * side;
    return build_masked_2d(-half, half, -half, half, n, n,
                           [](double, double) { return true; });
  }
  if (s == "disk") {
    double r = spec.get("r", 1.0);
    return build_masked_2d(-r, r, -r, r, n, n, [r](double x, double y) {
      return x * x + y * y < r * r;
    });
  }
  if (s == "ellipse") {
    double a = spec.get("a", 1.0), b = spec.get("b", 0.5);
    detail::require(a >= b, "ellipse expects a >= b");
    return build_masked_2d(-a, a, -a, a, n, n, [a, b](double x, double y) {
      return (x * x) / (a * a) + (y * y) / (b * b) < 1.0;
    });
  }
  if (s == "lshape") {
    double side = spec.get("s", 1.0);
    double half = 0.5 * side;
    return build_masked_2d(-half, half, -half, half, n, n, [](double x, double y) {
      return x < 0.0 || y < 0.0;
    });
  }
  if (s == "annulus") {
    double R = spec.get("R", 1.0), r = spec.get("r", 0.5);
    detail::require(r < R, "annulus requires r < R");
    return build_masked_2d(-R, R, -R, R, n, n, [R, r](double x, double y) {
      double q = x * x + y * y;
      return q > r * r && q < R * R;
    });
  }
  throw std::invalid_argument("unknown shape: " + s +
                              " (known: interval, union-intervals, square, disk, ellipse, "
                              "lshape, annulus)");
}

inline Domain make_shape(const std::string& text, std::int64_t n_override = 0) {
  return make_shape(parse_shape_spec(text), n_override);
}

}  // namespace fracsym
