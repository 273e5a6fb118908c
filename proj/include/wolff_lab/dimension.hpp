#ifndef WOLFF_LAB_DIMENSION_HPP
#define WOLFF_LAB_DIMENSION_HPP

// Local and global dimension estimates of boundary measures, information
// dimension over dyadic partitions, and greedy Hausdorff content bounds.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <limits>
#include <vector>

#include "wolff_lab/errors.hpp"
#include "wolff_lab/measure.hpp"
#include "wolff_lab/planar.hpp"

namespace wolff_lab {

struct LocalFit {
  double slope = 0.0;
  double r_squared = 0.0;
};

/// Radii r_min·2^k up to r_max.
inline std::vector<double> dyadic_radii(double r_min, double r_max) {
  std::vector<double> out;
  for (double r = r_min; r <= r_max * (1 + 1e-12); r *= 2) out.push_back(r);
  return out;
}

namespace detail {

inline LocalFit least_squares(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LocalFit f;
  f.slope = sxy / sxx;
  f.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return f;
}

}  // namespace detail

/// Least-squares slope of log μ(B(x, r)) against log r over dyadic radii.
inline LocalFit local_dimension(const MeasureIndex& mu, const Vec2& x, double r_min, double r_max) {
  const auto radii = dyadic_radii(r_min, r_max);
  if (radii.size() < 5) throw DegenerateInput("fewer than 5 dyadic radii in [r_min, r_max]");
  std::vector<double> lx, ly;
  for (double r : radii) {
    const double m = mu.mass_in_ball(x, r);
    if (!(m > 0.0)) throw ZeroMass("no mass in B(x, r) at r = " + std::to_string(r));
    lx.push_back(std::log(r));
    ly.push_back(std::log(m));
  }
  return detail::least_squares(lx, ly);
}

struct DimensionSample {
  Vec2 center;
  double slope = 0.0;
  double r_squared = 0.0;
  double weight = 0.0;
};

struct DimensionEstimate {
  std::vector<DimensionSample> samples;
  double mu_weighted_mean = 0.0;
  double mu_weighted_std = 0.0;
  double r_min = 0.0, r_max = 0.0;
  /// Mass of the nodes eligible as centers.
  double sampled_mass = 0.0;
};

/// Local slopes at centers drawn with probability proportional to the node
/// weights. When the measure carries a window, only nodes whose r_max-ball
/// stays inside it are eligible. Each sample carries an equal share of the
/// eligible mass.
inline DimensionEstimate dimension_spectrum(const BoundaryMeasure& measure, const MeasureIndex& mu, int n_samples,
                                            std::uint64_t seed, double r_min, double r_max) {
  if (n_samples < 16) throw DegenerateInput("dimension_spectrum needs at least 16 samples");
  if (!(r_min > 0.0 && r_min < r_max)) throw DegenerateInput("need 0 < r_min < r_max");
  std::vector<double> cdf;
  std::vector<int> ids;
  double acc = 0.0;
  for (std::size_t i = 0; i < measure.nodes.size(); ++i) {
    const Vec2 x = measure.nodes[i];
    if (measure.window) {
      const Box& w = *measure.window;
      if (x.x - r_max < w.lo.x || x.x + r_max > w.hi.x || x.y - r_max < w.lo.y || x.y + r_max > w.hi.y) continue;
    }
    if (!(measure.weights[i] > 0.0)) continue;
    acc += measure.weights[i];
    cdf.push_back(acc);
    ids.push_back(static_cast<int>(i));
  }
  if (ids.empty()) throw ZeroMass("no eligible centers");
  DimensionEstimate est;
  est.r_min = r_min;
  est.r_max = r_max;
  est.sampled_mass = acc;
  std::mt19937_64 rng(seed);
  for (int s = 0; s < n_samples; ++s) {
    // 53-bit uniform in [0, 1) from the raw engine output
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u * acc);
    const int node = ids[std::min<std::size_t>(it - cdf.begin(), ids.size() - 1)];
    const auto fit = local_dimension(mu, measure.nodes[node], r_min, r_max);
    est.samples.push_back({measure.nodes[node], fit.slope, fit.r_squared, acc / n_samples});
  }
  double mean = 0.0;
  for (const auto& s : est.samples) mean += s.weight * s.slope;
  mean /= acc;
  double var = 0.0;
  for (const auto& s : est.samples) var += s.weight * (s.slope - mean) * (s.slope - mean);
  est.mu_weighted_mean = mean;
  est.mu_weighted_std = std::sqrt(var / acc);
  return est;
}

/// Σ_Q μ(Q) log μ(Q) / log l over the grid of side l anchored at the window
/// corner (or the support's lower-left corner), with μ normalized. Each mass
/// piece is assigned to the cell containing its midpoint.
inline std::vector<double> entropy_dimension(const BoundaryMeasure& measure, const MeasureIndex& mu,
                                             std::span<const double> scales) {
  Vec2 origin{1e300, 1e300};
  if (measure.window) {
    origin = measure.window->lo;
  } else {
    for (const auto& p : measure.nodes) origin = {std::min(origin.x, p.x), std::min(origin.y, p.y)};
  }
  const double total = mu.total_mass();
  if (!(total > 0.0)) throw ZeroMass("measure has no mass");
  std::vector<double> out;
  for (double l : scales) {
    std::map<std::pair<std::int64_t, std::int64_t>, double> cells;
    for (const auto& pc : mu.pieces()) {
      const Vec2 m = (pc.a + pc.b) * 0.5 - origin;
      // guard against midpoints that sit on a cell wall up to rounding
      const auto cx = static_cast<std::int64_t>(std::floor(m.x / l * (1 - 1e-12)));
      const auto cy = static_cast<std::int64_t>(std::floor(m.y / l * (1 - 1e-12)));
      cells[{cx, cy}] += pc.mass / total;
    }
    double h = 0.0;
    for (const auto& [key, m] : cells)
      if (m > 0.0) h += m * std::log(m);
    out.push_back(h / std::log(l));
  }
  return out;
}

namespace detail {

/// Greedy cover of the points by closed balls of diameter d centered at the
/// points, always taking the ball that covers the most uncovered points.
inline std::size_t greedy_ball_count(std::span<const Vec2> pts, double d) {
  const double cell = d;
  auto key = [cell](const Vec2& p) {
    return std::pair{static_cast<std::int64_t>(std::floor(p.x / cell)), static_cast<std::int64_t>(std::floor(p.y / cell))};
  };
  std::map<std::pair<std::int64_t, std::int64_t>, std::vector<int>> grid;
  for (std::size_t i = 0; i < pts.size(); ++i) grid[key(pts[i])].push_back(static_cast<int>(i));
  std::vector<char> covered(pts.size(), 0);
  const double r = d / 2 * (1 + 1e-12);
  auto for_neighbors = [&](int i, auto&& f) {
    const auto [ci, cj] = key(pts[i]);
    for (std::int64_t di = -1; di <= 1; ++di)
      for (std::int64_t dj = -1; dj <= 1; ++dj) {
        const auto it = grid.find({ci + di, cj + dj});
        if (it == grid.end()) continue;
        for (int k : it->second)
          if (distance(pts[i], pts[k]) <= r) f(k);
      }
  };
  auto gain = [&](int i) {
    int g = 0;
    for_neighbors(i, [&](int k) { g += covered[k] ? 0 : 1; });
    return g;
  };
  // lazy evaluation: gains only shrink as points get covered
  using Entry = std::pair<int, int>;
  auto cmp = [](const Entry& a, const Entry& b) { return a.first < b.first || (a.first == b.first && a.second > b.second); };
  std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> heap(cmp);
  for (std::size_t i = 0; i < pts.size(); ++i) heap.push({gain(static_cast<int>(i)), static_cast<int>(i)});
  std::size_t balls = 0, left = pts.size();
  while (left > 0 && !heap.empty()) {
    auto [g, i] = heap.top();
    heap.pop();
    const int now = gain(i);
    if (now == 0) continue;
    if (now < g) {
      heap.push({now, i});
      continue;
    }
    ++balls;
    for_neighbors(i, [&](int k) {
      if (!covered[k]) {
        covered[k] = 1;
        --left;
      }
    });
  }
  return balls;
}

inline double coarsest_gap(std::span<const Vec2> pts) {
  if (pts.size() < 2) return 0.0;
  std::vector<Vec2> sorted(pts.begin(), pts.end());
  std::sort(sorted.begin(), sorted.end(), [](const Vec2& a, const Vec2& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  const auto n = static_cast<std::ptrdiff_t>(sorted.size());
  double worst = 0.0;
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::ptrdiff_t k = i + 1; k < n && sorted[k].x - sorted[i].x < best; ++k) best = std::min(best, distance(sorted[i], sorted[k]));
    for (std::ptrdiff_t k = i - 1; k >= 0 && sorted[i].x - sorted[k].x < best; --k) best = std::min(best, distance(sorted[i], sorted[k]));
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace detail

/// Upper bound on the α-dimensional content H^α_δ of the set sampled by the
/// points: the cheapest greedy cover over diameters δ·2^{−j} that stay at or
/// above the sampling resolution (by default the largest nearest-neighbour
/// gap). Diameter δ itself is always tried.
inline double hausdorff_content(std::span<const Vec2> points, double alpha, double delta_cap,
                                std::optional<double> resolution = std::nullopt) {
  if (points.empty()) return 0.0;
  if (!(alpha > 0.0 && delta_cap > 0.0)) throw DegenerateInput("need alpha > 0 and delta_cap > 0");
  const double res = resolution ? *resolution : detail::coarsest_gap(points);
  double best = std::numeric_limits<double>::infinity();
  for (double d = delta_cap; d == delta_cap || d >= res; d /= 2)
    best = std::min(best, static_cast<double>(detail::greedy_ball_count(points, d)) * std::pow(d, alpha));
  return best;
}

/// Middle-thirds Cantor measure on [0, 1] × {0} at the given depth: mass
/// 2^{−depth} spread uniformly on each surviving interval.
inline BoundaryMeasure cantor_measure(int depth) {
  std::vector<double> left{0.0};
  double len = 1.0;
  for (int k = 0; k < depth; ++k) {
    len /= 3;
    std::vector<double> next;
    for (double a : left) {
      next.push_back(a);
      next.push_back(a + 2 * len);
    }
    left = std::move(next);
  }
  BoundaryMeasure mu;
  const double mass = std::ldexp(1.0, -depth);
  for (double a : left) {
    const int i = static_cast<int>(mu.nodes.size());
    mu.nodes.push_back({a, 0.0});
    mu.nodes.push_back({a + len, 0.0});
    mu.weights.push_back(mass / 2);
    mu.weights.push_back(mass / 2);
    mu.edges.push_back({i, i + 1});
  }
  return mu;
}

/// Evenly spaced samples of every interval of the depth-k Cantor construction.
inline std::vector<Vec2> cantor_points(int depth, int per_interval) {
  const auto mu = cantor_measure(depth);
  std::vector<Vec2> out;
  for (const auto& e : mu.edges) {
    const Vec2 a = mu.nodes[e[0]], b = mu.nodes[e[1]];
    for (int k = 0; k < per_interval; ++k) out.push_back(a + (b - a) * (per_interval == 1 ? 0.5 : double(k) / (per_interval - 1)));
  }
  return out;
}

}  // namespace wolff_lab

#endif  // WOLFF_LAB_DIMENSION_HPP
