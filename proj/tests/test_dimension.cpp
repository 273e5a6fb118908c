#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "wolff_lab/dimension.hpp"

using namespace wolff_lab;

namespace {

const double kCantorDim = std::log(2.0) / std::log(3.0);

BoundaryMeasure uniform_segment(int n) {
  BoundaryMeasure mu;
  const double h = 1.0 / n;
  for (int i = 0; i <= n; ++i) {
    mu.nodes.push_back({i * h, 0.0});
    mu.weights.push_back(i == 0 || i == n ? h / 2 : h);
    if (i > 0) mu.edges.push_back({i - 1, i});
  }
  return mu;
}

// Cantor function F(x) = μ([0, x]) by ternary digit expansion.
double cantor_cdf(double x) {
  if (x <= 0) return 0.0;
  if (x >= 1) return 1.0;
  double f = 0.0, scale = 0.5;
  for (int k = 0; k < 60; ++k) {
    x *= 3;
    const int digit = static_cast<int>(std::floor(x));
    x -= digit;
    if (digit == 1) return f + scale;
    if (digit == 2) f += scale;
    scale /= 2;
  }
  return f;
}

}  // namespace

TEST(LocalDimension, UniformSegment) {
  const auto mu = uniform_segment(4096);
  const MeasureIndex idx(mu);
  const auto fit = local_dimension(idx, {0.437, 0.0}, 1e-3, 0.1);
  EXPECT_NEAR(fit.slope, 1.0, 0.01);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-9);
}

TEST(LocalDimension, PointMass) {
  BoundaryMeasure mu;
  mu.nodes = {{0.3, 0.3}};
  mu.weights = {2.0};
  const MeasureIndex idx(mu);
  EXPECT_NEAR(local_dimension(idx, {0.3, 0.3}, 1e-3, 0.1).slope, 0.0, 1e-14);
  EXPECT_THROW(local_dimension(idx, {1.3, 0.3}, 1e-3, 0.1), ZeroMass);
  EXPECT_THROW(local_dimension(idx, {0.3, 0.3}, 1e-3, 1e-2), DegenerateInput);
}

TEST(LocalDimension, CantorMatchesConstructionOracle) {
  const auto mu = cantor_measure(8);
  const MeasureIndex idx(mu);
  // the depth-8 measure agrees with the Cantor function at triadic scales
  for (double x : {1.0 / 9, 0.25, 2.0 / 3, 0.8})
    EXPECT_NEAR(idx.mass_in_ball({0.0, 0.0}, x), cantor_cdf(x), std::ldexp(1.0, -8));
  const auto fit = local_dimension(idx, {0.0, 0.0}, 1e-3, 0.5);
  EXPECT_NEAR(fit.slope, kCantorDim, 0.03);
}

TEST(LocalDimension, ScaleInvariantSlopes) {
  auto mu = cantor_measure(6);
  const double base = local_dimension(MeasureIndex(mu), {2.0 / 9, 0.0}, 2e-3, 0.2).slope;
  for (double& w : mu.weights) w *= 37.5;
  EXPECT_NEAR(local_dimension(MeasureIndex(mu), {2.0 / 9, 0.0}, 2e-3, 0.2).slope, base, 1e-12);
}

TEST(Spectrum, UniformLine) {
  auto mu = uniform_segment(4096);
  mu.window = Box{{0.0, -1.0}, {1.0, 1.0}};
  const MeasureIndex idx(mu);
  const auto est = dimension_spectrum(mu, idx, 64, 7, 1e-3, 0.1);
  EXPECT_NEAR(est.mu_weighted_mean, 1.0, 0.01);
  EXPECT_LE(est.mu_weighted_std, 0.02);
  double w = 0.0;
  for (const auto& s : est.samples) {
    w += s.weight;
    EXPECT_GE(s.center.x, 0.1);
    EXPECT_LE(s.center.x, 0.9);
  }
  EXPECT_NEAR(w, est.sampled_mass, 1e-12);
}

TEST(Spectrum, CantorMean) {
  const auto mu = cantor_measure(8);
  const MeasureIndex idx(mu);
  const auto est = dimension_spectrum(mu, idx, 128, 3, 1e-3, 0.1);
  EXPECT_NEAR(est.mu_weighted_mean, kCantorDim, 0.05);
}

TEST(Spectrum, Deterministic) {
  const auto mu = cantor_measure(6);
  const MeasureIndex idx(mu);
  const auto a = dimension_spectrum(mu, idx, 32, 11, 2e-3, 0.1);
  const auto b = dimension_spectrum(mu, idx, 32, 11, 2e-3, 0.1);
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    EXPECT_EQ(a.samples[i].center, b.samples[i].center);
    EXPECT_EQ(a.samples[i].slope, b.samples[i].slope);
  }
  EXPECT_EQ(a.mu_weighted_mean, b.mu_weighted_mean);
  EXPECT_THROW(dimension_spectrum(mu, idx, 8, 11, 2e-3, 0.1), DegenerateInput);
}

TEST(Entropy, SegmentPointAndCantor) {
  const auto seg = uniform_segment(1024);
  const std::vector<double> dyadic{1.0 / 16, 1.0 / 64, 1.0 / 256};
  for (double v : entropy_dimension(seg, MeasureIndex(seg), dyadic)) EXPECT_NEAR(v, 1.0, 1e-9);
  BoundaryMeasure atom;
  atom.nodes = {{0.25, 0.25}};
  atom.weights = {1.0};
  for (double v : entropy_dimension(atom, MeasureIndex(atom), dyadic)) EXPECT_NEAR(v, 0.0, 1e-15);
  const auto c = cantor_measure(8);
  const std::vector<double> triadic{std::pow(3.0, -6)};
  EXPECT_NEAR(entropy_dimension(c, MeasureIndex(c), triadic)[0], kCantorDim, 0.05);
}

TEST(Content, FinitePointSet) {
  const std::vector<Vec2> pts{{0, 0}, {1, 0}, {0, 1}, {3, 2}, {-1, 4}};
  for (double cap : {1e-2, 1e-4, 1e-6}) {
    const double v = hausdorff_content(pts, 0.5, cap);
    EXPECT_LE(v, pts.size() * std::pow(cap, 0.5) * (1 + 1e-12));
  }
}

TEST(Content, DenseSegment) {
  std::vector<Vec2> pts;
  const double L = std::hypot(2.0, 1.0);
  for (int i = 0; i <= 4000; ++i) pts.push_back(Vec2{2.0, 1.0} * (i / 4000.0));
  for (double cap : {0.1, 0.03}) EXPECT_NEAR(hausdorff_content(pts, 1.0, cap), L, 0.1 * L) << cap;
}

TEST(Content, CantorBoundedByIntervalCover) {
  const auto pts = cantor_points(8, 5);
  // explicit oracle: the 2^8 construction intervals of length 3^{-8}
  const double interval_cover = std::ldexp(1.0, 8) * std::pow(std::pow(3.0, -8), kCantorDim);
  EXPECT_NEAR(interval_cover, 1.0, 1e-12);
  const double v = hausdorff_content(pts, kCantorDim, std::pow(3.0, -8));
  EXPECT_LE(v, 2.0);
  EXPECT_LE(v, interval_cover * (1 + 1e-9));
}

TEST(Content, NonDecreasingAsCapShrinks) {
  const auto pts = cantor_points(7, 3);
  double prev = 0.0;
  for (double cap = 0.5; cap > std::pow(3.0, -7); cap /= 2) {
    const double v = hausdorff_content(pts, kCantorDim, cap);
    EXPECT_GE(v, prev * (1 - 1e-12)) << cap;
    prev = v;
  }
}
