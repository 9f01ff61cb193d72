#include <gtest/gtest.h>

#include <random>

#include "fkcp/fdata.hpp"
#include "oracles.hpp"

using namespace fkcp;

namespace {

std::vector<double> to_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

GridPtr random_grid(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> step(0.01, 0.2);
  std::vector<double> t(n);
  t[0] = -0.3;
  for (std::size_t i = 1; i < n; ++i) t[i] = t[i - 1] + step(rng);
  return std::make_shared<const TimeGrid>(t);
}

}  // namespace

TEST(TimeGrid, RejectsBadPoints) {
  EXPECT_THROW(TimeGrid({0.0}), InvalidArgument);
  EXPECT_THROW(TimeGrid({0.0, 0.0}), InvalidArgument);
  EXPECT_THROW(TimeGrid({0.0, 2.0, 1.0}), InvalidArgument);
  EXPECT_THROW(TimeGrid({0.0, NAN}), InvalidArgument);
}

TEST(TimeGrid, WeightsPositiveAndSumToLength) {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 20; ++rep) {
    const GridPtr g = random_grid(rng, 5 + rep);
    double s = 0.0;
    for (double w : g->weights()) {
      EXPECT_GT(w, 0.0);
      s += w;
    }
    EXPECT_NEAR(s, g->length(), 1e-12);
  }
}

TEST(TimeGrid, TrapezoidExactForLinear) {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    const GridPtr g = random_grid(rng, 3 + rep);
    const Curve f = Curve::tabulate(g, [](double t) { return 3.0 * t - 1.5; });
    const double a = g->front(), b = g->back();
    const double exact = 1.5 * (b * b - a * a) - 1.5 * (b - a);
    EXPECT_NEAR(g->integrate(f.values()), exact, 1e-12);
  }
}

TEST(Curve, RejectsNonFiniteAndLengthMismatch) {
  const GridPtr g = TimeGrid::uniform(0, 1, 3);
  EXPECT_THROW(Curve(g, {1.0, INFINITY, 0.0}), InvalidArgument);
  EXPECT_THROW(Curve(g, {1.0, 2.0}), InvalidArgument);
}

TEST(L2, InnerProductExamples) {
  const GridPtr g = TimeGrid::uniform(0, 1, 101);
  EXPECT_DOUBLE_EQ(l2_inner(Curve::constant(g, 1.0), Curve::constant(g, 1.0)), 1.0);
  EXPECT_NEAR(l2_inner(Curve::constant(g, 1.0), Curve::tabulate(g, [](double t) { return t; })), 0.5, 1e-6);
}

TEST(L2, InnerProductMatchesNaiveTrapezoid) {
  std::mt19937_64 rng(3);
  const GridPtr g = random_grid(rng, 51);
  const std::vector<double> t = to_vec(g->points());
  for (int rep = 0; rep < 10; ++rep) {
    const auto a = oracle::random_vec(rng, 51), b = oracle::random_vec(rng, 51);
    std::vector<double> ab(51);
    for (int k = 0; k < 51; ++k) ab[k] = a[k] * b[k];
    EXPECT_NEAR(l2_inner(Curve(g, a), Curve(g, b)), oracle::trapezoid(t, ab), 1e-14);
  }
}

TEST(L2, DistanceExamplesAndIdentities) {
  const GridPtr g = TimeGrid::uniform(0, 1, 101);
  const Curve a = Curve::tabulate(g, [](double t) { return std::sin(t); });
  EXPECT_EQ(l2_dist_sq(a, a), 0.0);
  EXPECT_NEAR(l2_dist_sq(a + 2.0, a), 4.0, 1e-12);

  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 20; ++rep) {
    const Curve x(g, oracle::random_vec(rng, 101)), y(g, oracle::random_vec(rng, 101));
    EXPECT_NEAR(l2_dist_sq(x, y), l2_inner(x - y, x - y), 1e-12);
    EXPECT_NEAR(l2_dist_sq(x, y), l2_inner(x, x) - 2 * l2_inner(x, y) + l2_inner(y, y), 1e-10);
  }
}

TEST(L2, GridMismatchThrows) {
  const Curve a = Curve::constant(TimeGrid::uniform(0, 1, 5), 1.0);
  const Curve b = Curve::constant(TimeGrid::uniform(0, 2, 5), 1.0);
  EXPECT_THROW(l2_inner(a, b), GridMismatch);
  EXPECT_THROW(l2_dist_sq(a, b), GridMismatch);
}

TEST(SpatialDist, ExamplesAndTriangleInequality) {
  EXPECT_EQ(spatial_dist({1, 2, "a"}, {1, 2, "b"}), 0.0);
  EXPECT_DOUBLE_EQ(spatial_dist({0, 0, "a"}, {3, 4, "b"}), 5.0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int rep = 0; rep < 200; ++rep) {
    const Site p{u(rng), u(rng), "p"}, q{u(rng), u(rng), "q"}, r{u(rng), u(rng), "r"};
    EXPECT_LE(spatial_dist(p, r), spatial_dist(p, q) + spatial_dist(q, r) + 1e-12);
  }
}

TEST(Dataset, ValidatesConstruction) {
  const GridPtr g = TimeGrid::uniform(0, 1, 4);
  const Curve c = Curve::constant(g, 0.0);
  EXPECT_THROW(Dataset(g, {}, {}), InvalidArgument);
  EXPECT_THROW(Dataset(g, {{0, 0, "a"}}, {c, c}), InvalidArgument);
  EXPECT_THROW(Dataset(g, {{0, 0, "a"}, {1, 0, "a"}}, {c, c}), InvalidArgument);
  EXPECT_THROW(Dataset(g, {{0, 0, "a"}, {0, 0, "b"}}, {c, c}), InvalidArgument);
  EXPECT_THROW(Dataset(g, {{0, 0, "a"}}, {Curve::constant(TimeGrid::uniform(0, 2, 4), 0.0)}), GridMismatch);
  EXPECT_NO_THROW(Dataset(g, {{0, 0, "a"}, {1, 0, "b"}}, {c, c}));
}

TEST(Dataset, SubsetWithoutAndLookup) {
  const GridPtr g = TimeGrid::uniform(0, 1, 3);
  std::vector<Site> s{{0, 0, "a"}, {1, 0, "b"}, {2, 0, "c"}};
  std::vector<Curve> c{Curve::constant(g, 1), Curve::constant(g, -2), Curve::constant(g, 5)};
  const Dataset d(g, s, c);
  EXPECT_EQ(d.index_of("c"), 2u);
  EXPECT_THROW(d.index_of("z"), InvalidArgument);
  const Dataset w = d.without(1);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w.site(1).id, "c");
  const std::size_t idx[] = {2, 0};
  EXPECT_EQ(d.subset(idx).site(0).id, "c");
  EXPECT_EQ(d.value_range(), std::make_pair(-2.0, 5.0));
}

TEST(Percentile, LinearInterpolation) {
  EXPECT_DOUBLE_EQ(detail::percentile_linear({4, 1, 3, 2}, 50), 2.5);
  EXPECT_DOUBLE_EQ(detail::percentile_linear({4, 1, 3, 2}, 25), 1.75);
  std::mt19937_64 rng(6);
  for (int rep = 0; rep < 50; ++rep) {
    const auto x = oracle::random_vec(rng, 1 + rep % 17);
    for (double p : {0.0, 25.0, 50.0, 75.0, 100.0})
      EXPECT_DOUBLE_EQ(detail::percentile_linear(x, p), oracle::percentile(x, p));
  }
}
