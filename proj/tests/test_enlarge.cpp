#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "whitney_oracle.hpp"
#include "wolff_lab/enlarge.hpp"
#include "wolff_lab/wolff.hpp"

using namespace wolff_lab;
using namespace wolff_lab::testing;

namespace {

const Box kUnitWindow{{-0.5, -1.0}, {0.5, 1.0}};

// Distance from p to a polyline.
double polyline_distance(std::span<const Vec2> line, const Vec2& p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < line.size(); ++k) best = std::min(best, distance_to_segment(p, line[k], line[k + 1]));
  return best;
}

// Hausdorff distance between two polylines, sampled along both at spacing h.
double polyline_hausdorff(std::span<const Vec2> a, std::span<const Vec2> b, double h) {
  auto directed = [h](std::span<const Vec2> from, std::span<const Vec2> to) {
    double worst = 0.0;
    for (std::size_t k = 0; k + 1 < from.size(); ++k) {
      const int n = std::max(1, static_cast<int>(std::ceil(distance(from[k], from[k + 1]) / h)));
      for (int s = 0; s <= n; ++s) worst = std::max(worst, polyline_distance(to, from[k] + (from[k + 1] - from[k]) * (double(s) / n)));
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

BoundaryChain segment_chain(int n) {
  BoundaryChain c;
  for (int k = 0; k <= n; ++k) c.vertices.push_back({-0.5 + double(k) / n, 0.0});
  for (int k = 0; k < n; ++k) c.faces.push_back({k, k + 1, 1});
  return c;
}

}  // namespace

TEST(DyadicCube, NestingAndGeometry) {
  const DyadicCube q{3, -2, 5};
  EXPECT_DOUBLE_EQ(q.side(), 0.125);
  EXPECT_EQ(q.lo(), (Vec2{-0.25, 0.625}));
  EXPECT_EQ(q.center(), (Vec2{-0.1875, 0.6875}));
  EXPECT_EQ(q.parent(), (DyadicCube{2, -1, 2}));
  for (const auto& c : q.children()) {
    EXPECT_TRUE(q.contains(c));
    EXPECT_EQ(c.parent(), q);
  }
  EXPECT_FALSE(q.children()[0].contains(q));
  EXPECT_FALSE((DyadicCube{3, -1, 5}).contains(q.children()[0]));
}

TEST(Whitney, FarKGivesWindowCubes) {
  const std::vector<Vec2> K{{100.0, 100.0}};
  const Box w{{0.0, 0.0}, {1.0, 1.0}};
  const auto cubes = whitney_cubes(K, w, 4.0);
  ASSERT_EQ(cubes.size(), 1u);
  EXPECT_EQ(cubes[0], (DyadicCube{0, 0, 0}));
  EXPECT_EQ(as_raw(cubes), brute_whitney(K, w, 4.0, 8));
}

TEST(Whitney, MatchesBruteForceOnRandomInstances) {
  std::mt19937_64 rng(20260415);
  std::uniform_real_distribution<double> coord(-1.2, 1.2);
  std::uniform_real_distribution<double> tdist(4.0, 12.0);
  std::uniform_int_distribution<int> count(1, 5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Vec2> K(count(rng));
    for (auto& x : K) x = {coord(rng), coord(rng)};
    const double t = tdist(rng);
    const Box w = trial % 2 ? Box{{-1.0, -1.0}, {1.0, 1.0}} : Box{{-0.5, -1.0}, {0.5, 1.0}};
    const auto cubes = whitney_cubes(K, w, t);
    ASSERT_EQ(as_raw(cubes), brute_whitney(K, w, t, 8)) << "trial " << trial;
  }
}

TEST(Whitney, SideScalesWithDistanceToK) {
  const std::vector<Vec2> K{{0.0, 0.0}};
  const double t = 8.0;
  const auto cubes = whitney_cubes(K, {{-1.0, -1.0}, {1.0, 1.0}}, t, 10);
  ASSERT_FALSE(cubes.empty());
  for (const auto& q : cubes) {
    const double d = distance(q.center(), K[0]);
    // cubes touching the window edge may be cut short by the window
    const bool interior = q.lo().x > -1 && q.lo().y > -1 && q.hi().x < 1 && q.hi().y < 1;
    if (!interior || q.level == 10) continue;
    const double ratio = q.side() / d;
    EXPECT_GE(ratio, 1.0 / (2.0 * t)) << q.level << " " << q.i << " " << q.j;
    EXPECT_LE(ratio, 2.0 / t) << q.level << " " << q.i << " " << q.j;
  }
}

TEST(Whitney, DisjointAndCovering) {
  const std::vector<Vec2> K{{0.1, -0.2}, {-0.4, 0.3}};
  const double t = 6.0;
  const Box w{{-1.0, -1.0}, {1.0, 1.0}};
  const int max_level = 9;
  const auto cubes = whitney_cubes(K, w, t, max_level);
  for (std::size_t a = 0; a < cubes.size(); ++a)
    for (std::size_t b = a + 1; b < cubes.size(); ++b) {
      EXPECT_FALSE(cubes[a].contains(cubes[b]) || cubes[b].contains(cubes[a]));
    }
  double area = 0.0;
  for (const auto& q : cubes) area += q.side() * q.side();
  EXPECT_LE(area, 4.0);
  // uncovered points lie within about t·2^{−max_level} of K
  const double reach = t * std::ldexp(1.0, -max_level);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int s = 0; s < 2000; ++s) {
    const Vec2 p{u(rng), u(rng)};
    const bool covered = std::ranges::any_of(cubes, [&](const DyadicCube& q) {
      return p.x >= q.lo().x && p.x <= q.hi().x && p.y >= q.lo().y && p.y <= q.hi().y;
    });
    double dk = std::numeric_limits<double>::infinity();
    for (const auto& x : K) dk = std::min(dk, cheb(p, x));
    if (dk > 2.0 * reach) {
      EXPECT_TRUE(covered) << p.x << " " << p.y;
    }
  }
}

TEST(Whitney, RejectsBadInput) {
  const std::vector<Vec2> K{{0.0, 0.0}};
  EXPECT_THROW(whitney_cubes(K, kUnitWindow, 3.9), DegenerateInput);
  EXPECT_THROW(whitney_cubes({}, kUnitWindow, 4.0), DegenerateInput);
  EXPECT_THROW(whitney_cubes(K, {{0.0, 0.0}, {0.0, 1.0}}, 4.0), DegenerateInput);
}

TEST(Enlarge, CubesComeFromWhitneyFamily) {
  const auto chain = segment_chain(64);
  const std::vector<Vec2> K{{0.0, 0.0}};
  EnlargeOptions opt;
  opt.pitch = 1e-3;
  const double eps = 0.009;
  const auto d = enlarge_domain(chain, K, eps, kUnitWindow, opt);
  ASSERT_GT(d.cube_count, 0u);
  const double t = 1.0 / (eps * eps);
  for (const auto& b : d.balls) {
    const auto& q = b.cube;
    EXPECT_TRUE(qualifies(K, kUnitWindow, t, q.level, q.i, q.j)) << q.level;
    EXPECT_FALSE(qualifies(K, kUnitWindow, t, q.level - 1, q.i >> 1, q.j >> 1)) << q.level;
    EXPECT_LE(b.cube.lo().y, 0.0);
    EXPECT_GE(b.cube.hi().y, 0.0);
    EXPECT_NEAR(b.center.y, 0.0, 1e-15);
    EXPECT_NEAR(b.radius, eps * std::abs(b.center.x), 1e-15);
    EXPECT_GE(b.radius, opt.pitch);
  }
}

TEST(Enlarge, BallsKeepClearOfK) {
  auto chain = generate_snowflake(build_template({}, 1, 0.25, 0.1), 1);
  std::vector<Vec2> K{chain.vertices[chain.vertices.size() / 3], chain.vertices[2 * chain.vertices.size() / 3]};
  const double eps = 0.008;
  const auto d = enlarge_domain(chain, K, eps, kUnitWindow);
  ASSERT_FALSE(d.balls.empty());
  for (const auto& b : d.balls) {
    double dz = std::numeric_limits<double>::infinity();
    for (const auto& x : K) dz = std::min(dz, distance(b.center, x));
    EXPECT_NEAR(b.radius, eps * dz, 1e-12 * dz);
    for (const auto& x : K) EXPECT_GE(distance(x, b.center) - b.radius, (1.0 - eps) * dz * (1 - 1e-12));
  }
}

TEST(Enlarge, KStaysOnBoundary) {
  const auto chain = segment_chain(16);
  const std::vector<Vec2> K{{0.0, 0.0}, {0.3125, 0.0}};
  for (double eps : {0.0025, 0.009}) {
    const auto d = enlarge_domain(chain, K, eps, kUnitWindow);
    for (const auto& x : K) EXPECT_LE(polyline_distance(d.boundary, x), d.pitch) << eps;
  }
}

TEST(Enlarge, ContainsOriginalDomain) {
  // Ω lies above the chain; every point above it stays above ∂Ω_ε^+.
  const auto chain = generate_snowflake(build_template({}, 1, 0.25, 0.1), 1);
  const std::vector<Vec2> K{{0.0, 0.0}};
  const auto d = enlarge_domain(chain, K, 0.009, kUnitWindow);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ux(-0.49, 0.49), uy(1e-3, 0.5);
  auto below = [](std::span<const Vec2> line, const Vec2& p) {
    // ray cast downward: count crossings of the polyline below p
    int crossings = 0;
    for (std::size_t k = 0; k + 1 < line.size(); ++k) {
      const Vec2 a = line[k], b = line[k + 1];
      if ((a.x <= p.x) == (b.x <= p.x)) continue;
      const double y = a.y + (b.y - a.y) * (p.x - a.x) / (b.x - a.x);
      if (y < p.y) ++crossings;
    }
    return crossings % 2 == 1;
  };
  int tested = 0;
  for (int s = 0; s < 4000; ++s) {
    const Vec2 p{ux(rng), uy(rng)};
    if (!below(chain.vertices, p)) continue;
    ++tested;
    EXPECT_TRUE(below(d.boundary, p)) << p.x << " " << p.y;
  }
  EXPECT_GT(tested, 1000);
}

TEST(Enlarge, ConvergesToBaseAsEpsilonShrinks) {
  const auto chain = generate_snowflake(build_template({}, 1, 0.25, 0.1), 1);
  const std::vector<Vec2> K{{0.0, 0.0}};
  const auto base = enlarged_boundary(chain, {});
  std::vector<double> dh;
  double prev_rmax = std::numeric_limits<double>::infinity();
  for (double eps : {0.008, 0.004, 0.002}) {
    const auto d = enlarge_domain(chain, K, eps, kUnitWindow);
    double rmax = 0.0;
    for (const auto& b : d.balls) rmax = std::max(rmax, b.radius);
    EXPECT_LT(rmax, prev_rmax);
    EXPECT_LE(rmax, eps * 0.75);
    prev_rmax = rmax;
    dh.push_back(polyline_hausdorff(d.boundary, base, 2e-4));
    EXPECT_LE(dh.back(), rmax + 1e-12);
  }
  EXPECT_LT(dh[1], dh[0]);
  EXPECT_LT(dh[2], dh[1]);
}

TEST(Enlarge, FlatnessScalesWithEpsilon) {
  const auto chain = flat_chain();
  const std::vector<Vec2> K{{0.0, 0.0}};
  std::vector<double> worst;
  for (double eps : {0.01 - 1e-9, 0.0025}) {
    const auto d = enlarge_domain(chain, K, eps, kUnitWindow);
    const ChainIndex boundary(d.boundary);
    double m = 0.0;
    for (double x : {-0.25, 0.0, 0.125, 0.25})
      for (double r : {0.05, 0.1, 0.2}) {
        const Vec2 w{x, -eps * std::abs(x) / std::sqrt(1.0 - eps * eps)};
        m = std::max(m, reifenberg_delta(boundary, w, r).delta);
      }
    worst.push_back(m);
  }
  EXPECT_GT(worst[0], 0.0);
  EXPECT_LE(worst[1], 0.6 * worst[0]);
}

TEST(Enlarge, MeasureNearKDoesNotDecrease) {
  EnlargeOptions eo;
  eo.pitch = 1e-3;
  eo.segments_per_circle = 32;
  DichotomyOptions opt;
  opt.p = 3.0;
  opt.domain.margin = 0.0;
  const auto snow = generate_snowflake(build_template({}, 1, 0.25, 0.1), 1);
  for (const auto& chain : {flat_chain(), snow}) {
    const Vec2 x = *std::ranges::min_element(chain.vertices, {}, [](const Vec2& v) { return std::abs(v.x); });
    const std::vector<Vec2> K{x};
    BoundaryChain base, plus;
    base.vertices = enlarged_boundary(chain, {}, eo);
    plus.vertices = enlarge_domain(chain, K, 0.009, kUnitWindow, eo).boundary;
    const auto sb = solve_snowflake(base, opt);
    const auto sp = solve_snowflake(plus, opt);
    const MeasureIndex ib(sb.measure), ip(sp.measure);
    for (double r : {0.05, 0.1, 0.2}) {
      const double mb = ib.mass_in_ball(x, r), mp = ip.mass_in_ball(x, r);
      EXPECT_GE(mp, mb * (1.0 - 1e-3)) << r;
    }
  }
}

TEST(Enlarge, RejectsBadInput) {
  const auto chain = flat_chain();
  const std::vector<Vec2> K{{0.0, 0.0}};
  EXPECT_THROW(enlarge_domain(chain, K, 0.01, kUnitWindow), DegenerateInput);
  EXPECT_THROW(enlarge_domain(chain, K, 0.0, kUnitWindow), DegenerateInput);
  EXPECT_THROW(enlarge_domain(chain, std::vector<Vec2>{{0.0, 0.1}}, 0.005, kUnitWindow), DegenerateInput);
  EXPECT_THROW(enlarge_domain(chain, {}, 0.005, kUnitWindow), DegenerateInput);
}

TEST(Enlarge, BallReachingKIsRejected) {
  const std::vector<Vec2> K{{0.0, 0.0}};
  const std::vector<EnlargeBall> bad{{{}, {0.2, 0.0}, 0.2, 0.7}};
  EXPECT_THROW(check_balls_clear(bad, PointTree(K)), BallSwallowsK);
  const std::vector<EnlargeBall> good{{{}, {0.2, 0.0}, 0.19, 0.7}};
  EXPECT_NO_THROW(check_balls_clear(good, PointTree(K)));
}

TEST(BoundaryLength, NoBallsGivesChainLength) {
  const auto chain = generate_snowflake(build_template({}, 1, 0.25, 0.1), 1);
  EnlargedDomain d;
  d.base = chain;
  d.boundary = enlarged_boundary(chain, {});
  d.window = kUnitWindow;
  EXPECT_NEAR(boundary_length_estimate(d, kUnitWindow), chain.length(), 1e-12);
  // a narrower window clips the chain
  const Box half{{0.0, -1.0}, {0.5, 1.0}};
  double expected = 0.0;
  for (std::size_t k = 0; k + 1 < chain.vertices.size(); ++k) {
    const auto iv = clip_segment_to_box(chain.vertices[k], chain.vertices[k + 1], half.lo, half.hi);
    if (iv) expected += (iv->second - iv->first) * distance(chain.vertices[k], chain.vertices[k + 1]);
  }
  EXPECT_NEAR(boundary_length_estimate(d, half), expected, 1e-12);
}

TEST(BoundaryLength, SingleBallOnFlatChain) {
  const auto chain = flat_chain();
  const double r = 0.1;
  for (int n : {64, 128, 256}) {
    EnlargeOptions opt;
    opt.segments_per_circle = n;
    EnlargedDomain d;
    d.base = chain;
    d.balls = {{{}, {0.05, 0.0}, r, 0.55}};
    d.boundary = enlarged_boundary(chain, d.balls, opt);
    // chain minus the chord, plus the lower half circle
    const double exact = 1.0 - 2.0 * r + std::numbers::pi * r;
    const double est = boundary_length_estimate(d, kUnitWindow);
    EXPECT_LE(est, exact + 1e-9) << n;
    // the polygon vertices at angles 0 and π lie on the chain
    EXPECT_NEAR(est, exact, 1e-9) << n;
  }
}

TEST(BoundaryLength, StableUnderRefinement) {
  const auto chain = generate_snowflake(build_template({}, 1, 0.25, 0.1), 1);
  const std::vector<Vec2> K{{0.0, 0.0}};
  EnlargeOptions coarse;
  EnlargeOptions fine;
  fine.segments_per_circle = 128;
  const double a = boundary_length_estimate(enlarge_domain(chain, K, 0.009, kUnitWindow, coarse), kUnitWindow);
  const double b = boundary_length_estimate(enlarge_domain(chain, K, 0.009, kUnitWindow, fine), kUnitWindow);
  EXPECT_TRUE(std::isfinite(a));
  EXPECT_LE(std::abs(a - b), 0.05 * b);
}

TEST(SingularCandidate, FlatMeasureIsEmpty) {
  BoundaryMeasure mu;
  const int n = 4096;
  for (int k = 0; k <= n; ++k) {
    mu.nodes.push_back({-0.5 + double(k) / n, 0.0});
    mu.weights.push_back(k == 0 || k == n ? 0.5 / n : 1.0 / n);
    if (k > 0) mu.edges.push_back({k - 1, k});
  }
  mu.window = Box{{-0.25, -1.0}, {0.25, 1.0}};
  const MeasureIndex idx(mu);
  for (double alpha : {0.06, 0.2, 0.5}) EXPECT_THROW(extract_singular_candidate(mu, idx, alpha, 0.1, 6), EmptyCandidate);
}

TEST(SingularCandidate, PointMassIsFound) {
  BoundaryMeasure mu;
  mu.nodes = {{0.3, 0.2}};
  mu.weights = {2.0};
  const auto c = extract_singular_candidate(mu, MeasureIndex(mu), 0.5, 0.05, 5);
  ASSERT_EQ(c.points.size(), 1u);
  EXPECT_EQ(c.points[0], mu.nodes[0]);
  EXPECT_EQ(c.mass, 2.0);
}

TEST(SingularCandidate, AtomOnSegmentIsFound) {
  BoundaryMeasure mu;
  const int n = 1024;
  for (int k = 0; k <= n; ++k) {
    mu.nodes.push_back({-0.5 + double(k) / n, 0.0});
    mu.weights.push_back(k == 0 || k == n ? 0.5 / n : 1.0 / n);
    if (k > 0) mu.edges.push_back({k - 1, k});
  }
  const Vec2 atom{0.123, 0.0};
  mu.nodes.push_back(atom);
  mu.weights.push_back(0.5);
  const MeasureIndex idx(mu);
  const double rho = 0.05;
  const int n_scales = 5;
  const auto c = extract_singular_candidate(mu, idx, 0.5, rho, n_scales);
  // segment nodes closer to the atom than the smallest radius see it at every scale
  EXPECT_NE(std::ranges::find(c.points, atom), c.points.end());
  for (const auto& x : c.points) EXPECT_LE(distance(x, atom), std::ldexp(rho, -(n_scales - 1)));
  EXPECT_GE(c.mass, 0.5);
  EXPECT_LE(c.mass, 0.5 + 2 * std::ldexp(rho, -(n_scales - 1)) + 1.0 / n);
  EXPECT_THROW(extract_singular_candidate(mu, idx, 1.0, 0.05, 5), DegenerateInput);
}
