#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "fracsym/domain.hpp"
#include "fracsym/extension_field.hpp"

namespace fracsym {

/// Decreasing rearrangement as a right-continuous step function on the
/// measure coordinate s in [0, total]; value on [breaks[k], breaks[k+1]) is
/// values[k]. Extended by zero beyond its total. All integrals of profiles
/// are exact sums.
struct Profile {
  std::vector<double> breaks;  // size m+1, breaks[0] = 0, strictly increasing
  std::vector<double> values;  // size m, non-increasing

  double total() const { return breaks.empty() ? 0.0 : breaks.back(); }

  double value_at(double s) const {
    if (s < 0 || breaks.empty() || s >= breaks.back()) return 0.0;
    auto it = std::upper_bound(breaks.begin(), breaks.end(), s);
    std::size_t k = static_cast<std::size_t>(it - breaks.begin());
    return values[k - 1];
  }

  /// Exact integral over [0, s]; saturates for s beyond the total.
  double cumulative(double s) const {
    if (s <= 0 || breaks.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
      double a = breaks[k], b = breaks[k + 1];
      if (s <= a) break;
      acc += values[k] * (std::min(s, b) - a);
    }
    return acc;
  }

  double mass() const { return cumulative(total()); }

  double norm_p(double p) const {
    if (values.empty()) return 0.0;
    if (std::isinf(p)) {
      double m = 0;
      for (double v : values) m = std::max(m, std::abs(v));
      return m;
    }
    double s = 0;
    for (std::size_t k = 0; k < values.size(); ++k)
      s += std::pow(std::abs(values[k]), p) * (breaks[k + 1] - breaks[k]);
    return std::pow(s, 1.0 / p);
  }

  /// Distribution function of the profile itself: |{s : value > k}|.
  double distribution(double k) const {
    double meas = 0;
    for (std::size_t i = 0; i < values.size(); ++i)
      if (std::abs(values[i]) > k) meas += breaks[i + 1] - breaks[i];
    return meas;
  }
};

/// mu_f(k) = measure{ |f| > k }, exact over whole cells.
inline double distribution_function(const ScalarField& f, double k) {
  detail::require(k >= 0.0, "distribution_function requires k >= 0");
  std::int64_t count = 0;
  for (double v : f.values)
    if (std::abs(v) > k) ++count;
  return static_cast<double>(count) * f.dom->cell_measure();
}

/// f*: cell values of |f| sorted in descending order on uniform widths.
inline Profile decreasing_rearrangement(const ScalarField& f) {
  std::vector<double> vals(f.values.size());
  for (Eigen::Index i = 0; i < f.values.size(); ++i) vals[i] = std::abs(f.values[i]);
  std::sort(vals.begin(), vals.end(), std::greater<>());
  double w = f.dom->cell_measure();
  Profile p;
  p.values = std::move(vals);
  p.breaks.resize(p.values.size() + 1);
  for (std::size_t k = 0; k < p.breaks.size(); ++k)
    p.breaks[k] = static_cast<double>(k) * w;
  return p;
}

inline Profile profile_from_sorted(std::vector<double> desc_values, double width) {
  Profile p;
  p.values = std::move(desc_values);
  p.breaks.resize(p.values.size() + 1);
  for (std::size_t k = 0; k < p.breaks.size(); ++k)
    p.breaks[k] = static_cast<double>(k) * width;
  return p;
}

/// f#: the sorted values of |f| placed on the equal-measure ball, nearest
/// cells first. Cell counts match exactly, so f# is exactly equimeasurable
/// with f at the cell level.
inline ScalarField spherical_rearrangement(const ScalarField& f) {
  auto ball = std::make_shared<Domain>(schwarz_ball(*f.dom));
  std::vector<double> vals(f.values.size());
  for (Eigen::Index i = 0; i < f.values.size(); ++i) vals[i] = std::abs(f.values[i]);
  std::sort(vals.begin(), vals.end(), std::greater<>());
  auto order = radial_order(*ball);
  Eigen::VectorXd out(static_cast<Eigen::Index>(ball->size()));
  for (std::size_t k = 0; k < order.size(); ++k)
    out[static_cast<Eigen::Index>(order[k])] = vals[k];
  return ScalarField(ball, std::move(out));
}

/// Slice-wise rearrangement in x for each fixed z, about the box center.
inline ExtensionField steiner_rearrangement(const ExtensionField& w) {
  ExtensionField out = w;
  auto order = radial_order(*w.box);
  std::vector<double> slice(w.box->size());
  for (int j = 0; j < w.levels(); ++j) {
    for (std::size_t i = 0; i < slice.size(); ++i)
      slice[i] = std::abs(w.values(static_cast<Eigen::Index>(i), j));
    std::sort(slice.begin(), slice.end(), std::greater<>());
    for (std::size_t k = 0; k < order.size(); ++k)
      out.values(static_cast<Eigen::Index>(order[k]), j) = slice[k];
  }
  return out;
}

/// Decreasing rearrangement of one z-slice of an extension field.
inline Profile slice_profile(const ExtensionField& w, int j) {
  std::vector<double> vals(w.box->size());
  for (std::size_t i = 0; i < vals.size(); ++i)
    vals[i] = std::abs(w.values(static_cast<Eigen::Index>(i), j));
  std::sort(vals.begin(), vals.end(), std::greater<>());
  return profile_from_sorted(std::move(vals), w.box->cell_measure());
}

enum class Concentration { Less, Greater, Equal, Incomparable };

inline const char* to_string(Concentration c) {
  switch (c) {
    case Concentration::Less: return "LESS";
    case Concentration::Greater: return "GREATER";
    case Concentration::Equal: return "EQUAL";
    case Concentration::Incomparable: return "INCOMPARABLE";
  }
  return "?";
}

struct ComparisonDetail {
  Concentration verdict = Concentration::Equal;
  double max_f_minus_g = 0.0;  // max over s of F(s) - G(s)
  double max_g_minus_f = 0.0;
  double tolerance = 0.0;
};

/// Compare cumulatives F(s) = int_0^s f*, G(s) = int_0^s g* at every
/// breakpoint of either profile (the cumulatives are piecewise linear, so
/// extrema sit on breakpoints). LESS means f is less concentrated: F <= G.
inline ComparisonDetail concentration_compare_detail(const Profile& f, const Profile& g,
                                                     double tol) {
  detail::require(tol >= 0.0, "negative tolerance");
  std::vector<double> s;
  s.reserve(f.breaks.size() + g.breaks.size());
  s.insert(s.end(), f.breaks.begin(), f.breaks.end());
  s.insert(s.end(), g.breaks.begin(), g.breaks.end());
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());

  ComparisonDetail out;
  out.tolerance = tol;
  double F = 0, G = 0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (k > 0) {
      double mid = 0.5 * (s[k - 1] + s[k]);
      F += f.value_at(mid) * (s[k] - s[k - 1]);
      G += g.value_at(mid) * (s[k] - s[k - 1]);
    }
    out.max_f_minus_g = std::max(out.max_f_minus_g, F - G);
    out.max_g_minus_f = std::max(out.max_g_minus_f, G - F);
  }
  bool f_below = out.max_f_minus_g <= tol;
  bool g_below = out.max_g_minus_f <= tol;
  if (f_below && g_below) out.verdict = Concentration::Equal;
  else if (f_below) out.verdict = Concentration::Less;
  else if (g_below) out.verdict = Concentration::Greater;
  else out.verdict = Concentration::Incomparable;
  return out;
}

inline Concentration concentration_compare(const Profile& f, const Profile& g, double tol) {
  return concentration_compare_detail(f, g, tol).verdict;
}

/// Default tolerance for comparisons across the (Omega, Omega#) grid pair:
/// the mass of one cell at the peak value of the dominating profile.
inline double cross_grid_tolerance(const Profile& g) {
  if (g.values.empty()) return 0.0;
  return (g.breaks[1] - g.breaks[0]) * std::abs(g.values.front());
}

inline double same_grid_tolerance(const Profile& g) { return 1e-10 * g.mass(); }

/// Convex nondecreasing test family: t, t^2, and hinge functions (t-c)+ on a
/// grid of thresholds up to tmax.
inline std::vector<std::function<double(double)>> default_convex_family(double tmax) {
  std::vector<std::function<double(double)>> phis;
  phis.emplace_back([](double t) { return t; });
  phis.emplace_back([](double t) { return t * t; });
  int levels = 8;
  for (int k = 1; k <= levels; ++k) {
    double c = tmax * static_cast<double>(k) / (levels + 1);
    phis.emplace_back([c](double t) { return std::max(t - c, 0.0); });
  }
  return phis;
}

/// Forward direction of the convex-order lemma: f < g in concentration
/// implies int Phi(f) <= int Phi(g) for convex nondecreasing Phi(0)=0.
inline bool convex_order_check(const Profile& f, const Profile& g,
                               const std::vector<std::function<double(double)>>& phis,
                               double tol) {
  for (const auto& phi : phis) {
    double lhs = 0, rhs = 0;
    for (std::size_t k = 0; k < f.values.size(); ++k)
      lhs += phi(f.values[k]) * (f.breaks[k + 1] - f.breaks[k]);
    for (std::size_t k = 0; k < g.values.size(); ++k)
      rhs += phi(g.values[k]) * (g.breaks[k + 1] - g.breaks[k]);
    if (lhs > rhs + tol) return false;
  }
  return true;
}

/// Returns (int |f g|, int f* g*); the first never exceeds the second.
inline std::pair<double, double> hardy_littlewood_check(const ScalarField& f,
                                                        const ScalarField& g) {
  detail::require(f.dom->hash() == g.dom->hash(), "hardy_littlewood_check: mismatched domains");
  double meas = f.dom->cell_measure();
  double lhs = 0;
  for (Eigen::Index i = 0; i < f.values.size(); ++i)
    lhs += std::abs(f.values[i] * g.values[i]);
  lhs *= meas;
  Profile fs = decreasing_rearrangement(f);
  Profile gs = decreasing_rearrangement(g);
  double rhs = 0;
  for (std::size_t k = 0; k < fs.values.size(); ++k)
    rhs += fs.values[k] * gs.values[k];
  rhs *= meas;
  return {lhs, rhs};
}

}  // namespace fracsym
