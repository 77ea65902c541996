#include <catch2/catch.hpp>

#include "fracsym/experiments.hpp"
#include "fracsym/rearrange.hpp"

using namespace fracsym;

namespace {
ScalarField field_of(DomainPtr d, std::initializer_list<double> vals) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (double x : vals) v[i++] = x;
  return ScalarField(std::move(d), std::move(v));
}
}  // namespace

TEST_CASE("distribution function", "[rearrange]") {
  auto d = std::make_shared<Domain>(build_interval(0.0, 3.0, 3));  // unit cells
  ScalarField f = field_of(d, {2.0, 0.0, 1.0});
  CHECK(distribution_function(f, 0.5) == Approx(2.0));
  CHECK(distribution_function(f, 2.0) == 0.0);
  CHECK(distribution_function(f, 5.0) == 0.0);
  CHECK_THROWS_AS(distribution_function(f, -0.1), std::invalid_argument);

  // brute-force enumeration oracle on a random field
  auto d100 = std::make_shared<Domain>(build_interval(0.0, 1.0, 100));
  auto rng = detail::Rng(42);
  Eigen::VectorXd v(100);
  for (int i = 0; i < 100; ++i) v[i] = rng.uniform(-1.0, 2.0);
  ScalarField g(d100, v);
  for (double k : {0.0, 0.3, 0.9, 1.7}) {
    long count = 0;
    for (int i = 0; i < 100; ++i)
      if (std::abs(v[i]) > k) ++count;
    CHECK(distribution_function(g, k) == Approx(count * d100->cell_measure()));
  }
}

TEST_CASE("decreasing rearrangement", "[rearrange]") {
  auto d = std::make_shared<Domain>(build_interval(0.0, 3.0, 3));
  Profile p = decreasing_rearrangement(field_of(d, {2.0, 0.0, 1.0}));
  REQUIRE(p.values.size() == 3);
  CHECK(p.values[0] == 2.0);
  CHECK(p.values[1] == 1.0);
  CHECK(p.values[2] == 0.0);
  CHECK(p.breaks[0] == 0.0);
  CHECK(p.total() == Approx(3.0));

  // constant field: constant profile
  auto dc = std::make_shared<Domain>(build_interval(0.0, 2.0, 8));
  Profile pc = decreasing_rearrangement(ScalarField::constant(dc, 3.5));
  for (double v : pc.values) CHECK(v == 3.5);

  // Cavalieri: Lp norms conserved exactly at the discrete level
  auto d200 = std::make_shared<Domain>(build_interval(-1.0, 1.0, 200));
  auto rng = detail::Rng(7);
  Eigen::VectorXd v(200);
  for (int i = 0; i < 200; ++i) v[i] = rng.uniform(-2.0, 2.0);
  ScalarField f(d200, v);
  Profile pf = decreasing_rearrangement(f);
  for (double pnorm : {1.0, 2.0, std::numeric_limits<double>::infinity()})
    CHECK(pf.norm_p(pnorm) == Approx(f.norm_p(pnorm)).epsilon(1e-12));
  // equimeasurability at every tested level
  for (double k : {0.0, 0.5, 1.0, 1.9})
    CHECK(pf.distribution(k) == distribution_function(f, k));
}

TEST_CASE("spherical rearrangement", "[rearrange]") {
  // a rearranged field on the canonical ball is a fixed point
  Domain protoball = schwarz_ball(make_shape("disk:r=0.5", 24));
  auto ball = std::make_shared<Domain>(protoball);
  auto order = radial_order(*ball);
  Eigen::VectorXd v(static_cast<Eigen::Index>(ball->size()));
  for (std::size_t k = 0; k < order.size(); ++k)
    v[static_cast<Eigen::Index>(order[k])] = 1.0 / (1.0 + static_cast<double>(k));
  ScalarField f(ball, v);
  ScalarField fs = spherical_rearrangement(f);
  REQUIRE(fs.dom->hash() == ball->hash());
  CHECK((fs.values - f.values).cwiseAbs().maxCoeff() == 0.0);

  // indicator of an off-center square becomes the indicator of the
  // centered disk of equal measure
  Domain sq = make_shape("square:s=1", 24);
  auto dsq = std::make_shared<Domain>(sq);
  Eigen::VectorXd ind = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sq.size()));
  long marked = 0;
  for (std::size_t k = 0; k < sq.size(); ++k) {
    auto c = sq.center(k);
    if (c[0] > 0.1 && c[1] > 0.1) {
      ind[static_cast<Eigen::Index>(k)] = 1.0;
      ++marked;
    }
  }
  ScalarField fi(dsq, ind);
  ScalarField fis = spherical_rearrangement(fi);
  auto ord2 = radial_order(*fis.dom);
  for (std::size_t k = 0; k < ord2.size(); ++k) {
    double expect = k < static_cast<std::size_t>(marked) ? 1.0 : 0.0;
    REQUIRE(fis.values[static_cast<Eigen::Index>(ord2[k])] == expect);
  }

  // mass conservation, exact with the count-matched ball
  auto rng = detail::Rng(12);
  Eigen::VectorXd w(static_cast<Eigen::Index>(sq.size()));
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = rng.uniform(0.0, 1.0);
  ScalarField g(dsq, w);
  ScalarField gs = spherical_rearrangement(g);
  CHECK(gs.norm_p(1) == Approx(g.norm_p(1)).epsilon(1e-12));
}

TEST_CASE("steiner rearrangement", "[rearrange]") {
  // separable w(x,z) = g(z) 1_E(x): each slice becomes g(z) times the
  // indicator of the centered set of equal measure
  Domain box = build_interval(-2.0, 2.0, 40);
  ExtensionField w;
  w.box = std::make_shared<Domain>(box);
  w.omega = w.box;
  w.sigma = 1.0;
  w.z = {0.0, 0.5, 1.0, 2.0};
  w.values = Eigen::MatrixXd::Zero(40, 4);
  for (int j = 0; j < 4; ++j) {
    double gz = std::exp(-w.z[static_cast<std::size_t>(j)]);
    for (std::size_t k = 0; k < box.size(); ++k) {
      double x = box.center(k)[0];
      if (x > 0.3 && x < 1.3) w.values(static_cast<Eigen::Index>(k), j) = gz;
    }
  }
  ExtensionField ws = steiner_rearrangement(w);
  auto order = radial_order(box);
  for (int j = 0; j < 4; ++j) {
    double gz = std::exp(-w.z[static_cast<std::size_t>(j)]);
    // 10 active cells per slice (width 1, h = 0.1), values gz nearest center
    for (std::size_t k = 0; k < order.size(); ++k) {
      double expect = k < 10 ? gz : 0.0;
      REQUIRE(ws.values(static_cast<Eigen::Index>(order[k]), j) == Approx(expect));
    }
    CHECK(ws.values.col(j).sum() == Approx(w.values.col(j).sum()));
  }
}

TEST_CASE("concentration comparison", "[rearrange]") {
  Profile f = profile_from_sorted({1.0, 1.0, 0.0}, 1.0);
  Profile g = profile_from_sorted({2.0, 0.0, 0.0}, 1.0);
  CHECK(concentration_compare(f, g, 1e-12) == Concentration::Less);
  CHECK(concentration_compare(g, f, 1e-12) == Concentration::Greater);
  CHECK(concentration_compare(f, f, 1e-12) == Concentration::Equal);

  // antisymmetry up to tolerance
  Profile f2 = profile_from_sorted({1.0 + 1e-14, 1.0, 0.0}, 1.0);
  CHECK(concentration_compare(f, f2, 1e-10) == Concentration::Equal);

  // incomparable pair
  Profile a = profile_from_sorted({3.0, 0.0, 0.0}, 1.0);
  Profile b = profile_from_sorted({2.0, 2.0, 0.0}, 1.0);
  CHECK(concentration_compare(a, b, 1e-12) == Concentration::Incomparable);

  CHECK_THROWS_AS(concentration_compare(f, g, -1.0), std::invalid_argument);

  // random rearranged pair matches a brute-force fine-grid comparison
  auto rng = detail::Rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> va(50), vb(50);
    for (int i = 0; i < 50; ++i) {
      va[static_cast<std::size_t>(i)] = rng.uniform(0.0, 1.0);
      vb[static_cast<std::size_t>(i)] = rng.uniform(0.0, 1.0);
    }
    std::sort(va.begin(), va.end(), std::greater<>());
    std::sort(vb.begin(), vb.end(), std::greater<>());
    Profile pa = profile_from_sorted(va, 0.02), pb = profile_from_sorted(vb, 0.02);
    bool a_le = true, b_le = true;
    for (int m = 0; m <= 5000; ++m) {
      double s = 1.0 * m / 5000.0;
      double fa = pa.cumulative(s), fb = pb.cumulative(s);
      if (fa > fb + 1e-12) a_le = false;
      if (fb > fa + 1e-12) b_le = false;
    }
    Concentration expect = a_le && b_le  ? Concentration::Equal
                           : a_le        ? Concentration::Less
                           : b_le        ? Concentration::Greater
                                         : Concentration::Incomparable;
    REQUIRE(concentration_compare(pa, pb, 1e-12) == expect);
  }
}

TEST_CASE("convex order", "[rearrange]") {
  Profile f = profile_from_sorted({1.0, 1.0, 0.0}, 1.0);
  Profile g = profile_from_sorted({2.0, 0.0, 0.0}, 1.0);
  auto square_only = std::vector<std::function<double(double)>>{[](double t) { return t * t; }};
  CHECK(convex_order_check(f, g, square_only, 1e-12));  // 2 <= 4
  CHECK(convex_order_check(f, f, default_convex_family(1.0), 1e-12));

  // property: every constructed ordered pair satisfies the whole family
  auto d = std::make_shared<Domain>(build_interval(0.0, 1.0, 64));
  for (int trial = 0; trial < 50; ++trial) {
    auto rng = detail::Rng::for_case(99, static_cast<std::uint64_t>(trial));
    ScalarField a = smoothed_noise_field(d, rng);
    ScalarField b = a;
    std::size_t top = 6;
    std::vector<std::size_t> idx(d->size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
      return a.values[static_cast<Eigen::Index>(x)] > a.values[static_cast<Eigen::Index>(y)];
    });
    for (std::size_t k = 0; k < top; ++k)
      b.values[static_cast<Eigen::Index>(idx[k])] += rng.uniform(0.1, 1.0);
    Profile pa = decreasing_rearrangement(a), pb = decreasing_rearrangement(b);
    auto v = concentration_compare(pa, pb, 1e-12);
    REQUIRE((v == Concentration::Less || v == Concentration::Equal));
    REQUIRE(convex_order_check(pa, pb, default_convex_family(pb.values.front()), 1e-10));
  }
}

TEST_CASE("hardy-littlewood", "[rearrange]") {
  auto d = std::make_shared<Domain>(build_interval(0.0, 2.0, 2));
  ScalarField f = field_of(d, {1.0, 2.0});
  ScalarField g = field_of(d, {3.0, 1.0});
  auto [lhs, rhs] = hardy_littlewood_check(f, g);
  CHECK(lhs == Approx(5.0));
  CHECK(rhs == Approx(7.0));

  auto [l2, r2] = hardy_littlewood_check(f, f);
  CHECK(l2 == Approx(r2));
  CHECK(l2 == Approx(f.norm_p(2) * f.norm_p(2)));

  auto dn = std::make_shared<Domain>(build_interval(0.0, 1.0, 128));
  for (int trial = 0; trial < 100; ++trial) {
    auto rng = detail::Rng::for_case(5, static_cast<std::uint64_t>(trial));
    Eigen::VectorXd a(128), b(128);
    for (int i = 0; i < 128; ++i) {
      a[i] = rng.uniform(-1.0, 1.0);
      b[i] = rng.uniform(-1.0, 1.0);
    }
    auto [l, r] = hardy_littlewood_check(ScalarField(dn, a), ScalarField(dn, b));
    REQUIRE(l <= r + 1e-12 * (1.0 + r));
  }

  auto dm = std::make_shared<Domain>(build_interval(0.0, 1.0, 4));
  CHECK_THROWS_AS(hardy_littlewood_check(f, ScalarField::zero(dm)), std::invalid_argument);
}

TEST_CASE("rearrangement idempotence and transitivity", "[rearrange]") {
  auto d = std::make_shared<Domain>(make_shape("lshape:s=1", 16));
  auto rng = detail::Rng(21);
  ScalarField f = smoothed_noise_field(d, rng);
  ScalarField fs = spherical_rearrangement(f);
  ScalarField fss = spherical_rearrangement(fs);
  CHECK(fs.dom->hash() == fss.dom->hash());
  CHECK((fs.values - fss.values).cwiseAbs().maxCoeff() <= 1e-14);
}
