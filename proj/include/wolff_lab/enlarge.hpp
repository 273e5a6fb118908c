#ifndef WOLFF_LAB_ENLARGE_HPP
#define WOLFF_LAB_ENLARGE_HPP

// Whitney cubes of the complement of a finite set K, the enlargement of a
// domain by boundary balls B_Q = B(z_Q, ε·dist(z_Q, K)), and extraction of
// candidate singular sets from a boundary measure.

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>
#include <boost/geometry/geometries/multi_polygon.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <span>
#include <unordered_map>
#include <vector>

#include "wolff_lab/errors.hpp"
#include "wolff_lab/geometry.hpp"
#include "wolff_lab/measure.hpp"
#include "wolff_lab/spatial.hpp"

namespace wolff_lab {

/// Dyadic cube [i, i+1] × [j, j+1] · 2^{−level}.
struct DyadicCube {
  int level = 0;
  std::int64_t i = 0;
  std::int64_t j = 0;

  double side() const { return std::ldexp(1.0, -level); }
  Vec2 lo() const { return {std::ldexp(static_cast<double>(i), -level), std::ldexp(static_cast<double>(j), -level)}; }
  Vec2 hi() const {
    return {std::ldexp(static_cast<double>(i + 1), -level), std::ldexp(static_cast<double>(j + 1), -level)};
  }
  Vec2 center() const {
    return {std::ldexp(static_cast<double>(i) + 0.5, -level), std::ldexp(static_cast<double>(j) + 0.5, -level)};
  }
  DyadicCube parent() const { return {level - 1, i >> 1, j >> 1}; }
  std::array<DyadicCube, 4> children() const {
    return {DyadicCube{level + 1, 2 * i, 2 * j}, DyadicCube{level + 1, 2 * i + 1, 2 * j},
            DyadicCube{level + 1, 2 * i, 2 * j + 1}, DyadicCube{level + 1, 2 * i + 1, 2 * j + 1}};
  }
  /// True when o is this cube or one of its descendants.
  bool contains(const DyadicCube& o) const {
    if (o.level < level) return false;
    const int d = o.level - level;
    return (o.i >> d) == i && (o.j >> d) == j;
  }
  friend auto operator<=>(const DyadicCube&, const DyadicCube&) = default;
};

namespace detail {

/// A level whose cubes are at least twice as large as the extent.
inline int coarse_level(double extent) { return static_cast<int>(std::floor(-std::log2(extent))) - 1; }

inline bool dilate_avoids(const PointTree& K, const DyadicCube& q, double t) {
  return K.nearest(q.center(), PointTree::Norm::chebyshev) > t * q.side() / 2.0;
}

inline bool cube_inside(const DyadicCube& q, const Box& w) {
  const Vec2 lo = q.lo(), hi = q.hi();
  return lo.x >= w.lo.x && lo.y >= w.lo.y && hi.x <= w.hi.x && hi.y <= w.hi.y;
}

inline bool cube_meets_interior(const DyadicCube& q, const Box& w) {
  const Vec2 lo = q.lo(), hi = q.hi();
  return lo.x < w.hi.x && hi.x > w.lo.x && lo.y < w.hi.y && hi.y > w.lo.y;
}

inline std::vector<DyadicCube> root_cubes(const Box& w, int level) {
  const double s = std::ldexp(1.0, -level);
  std::vector<DyadicCube> out;
  const auto i0 = static_cast<std::int64_t>(std::floor(w.lo.x / s)), i1 = static_cast<std::int64_t>(std::ceil(w.hi.x / s));
  const auto j0 = static_cast<std::int64_t>(std::floor(w.lo.y / s)), j1 = static_cast<std::int64_t>(std::ceil(w.hi.y / s));
  for (auto i = i0; i < i1; ++i)
    for (auto j = j0; j < j1; ++j) out.push_back({level, i, j});
  return out;
}

inline void validate_window(const Box& w) {
  if (!(w.hi.x > w.lo.x && w.hi.y > w.lo.y)) throw DegenerateInput("window must have positive area");
}

}  // namespace detail

/// Maximal dyadic cubes Q ⊂ window, down to max_level, whose closed
/// concentric t-dilate misses K. Sorted by (level, i, j).
inline std::vector<DyadicCube> whitney_cubes(std::span<const Vec2> K, const Box& window, double t, int max_level = 8) {
  if (K.empty()) throw DegenerateInput("K must be nonempty");
  if (!(t >= 4.0)) throw DegenerateInput("t must be >= 4");
  detail::validate_window(window);
  const PointTree tree({K.begin(), K.end()});
  const int k0 = detail::coarse_level(std::max(window.hi.x - window.lo.x, window.hi.y - window.lo.y));
  std::vector<DyadicCube> out;
  if (max_level < k0) return out;
  std::vector<DyadicCube> stack = detail::root_cubes(window, k0);
  while (!stack.empty()) {
    const DyadicCube q = stack.back();
    stack.pop_back();
    if (!detail::cube_meets_interior(q, window)) continue;
    if (detail::cube_inside(q, window) && detail::dilate_avoids(tree, q, t)) {
      out.push_back(q);
    } else if (q.level < max_level) {
      for (const auto& c : q.children()) stack.push_back(c);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Enlargement

struct EnlargeBall {
  DyadicCube cube;
  Vec2 center;  // z_Q
  double radius = 0.0;
  double arclength = 0.0;  // position of z_Q along the chain
};

struct EnlargeOptions {
  int segments_per_circle = 64;
  /// Balls smaller than the pitch are dropped; retained balls are thinned
  /// along the chain so that the union moves by at most about the pitch.
  double pitch = 1e-4;
  /// Flat extension of the chain beyond each end before the union.
  double margin = 0.5;
  int max_level = 60;
};

struct EnlargedDomain {
  BoundaryChain base;
  std::vector<Vec2> K;
  double epsilon = 0.0;
  Box window;
  /// Cubes of the family meeting the chain in the window with ball radius ≥ pitch.
  std::size_t cube_count = 0;
  /// Balls after thinning, ordered along the chain.
  std::vector<EnlargeBall> balls;
  /// ∂Ω_ε^+ as a polyline from the left margin end to the right one.
  std::vector<Vec2> boundary;
  double pitch = 0.0;
  int segments_per_circle = 0;
};

/// Throws BallSwallowsK when the closure of some ball meets K.
inline void check_balls_clear(std::span<const EnlargeBall> balls, const PointTree& K) {
  for (const auto& b : balls)
    if (!(K.nearest(b.center) > b.radius))
      throw BallSwallowsK("ball at (" + std::to_string(b.center.x) + ", " + std::to_string(b.center.y) + ") of radius " +
                          std::to_string(b.radius) + " reaches K");
}

namespace detail {

inline std::vector<double> cumulative_length(std::span<const Vec2> v) {
  std::vector<double> cum(v.size(), 0.0);
  for (std::size_t k = 1; k < v.size(); ++k) cum[k] = cum[k - 1] + distance(v[k - 1], v[k]);
  return cum;
}

/// The cubes of whitney_cubes(K, window, ε^{−2}) meeting the chain, each
/// with its ball. Candidate segments are filtered down the cube tree.
class ChainCubeWalker {
 public:
  ChainCubeWalker(const BoundaryChain& chain, const PointTree& K, double epsilon, const Box& window,
                  const EnlargeOptions& opt)
      : v_(chain.vertices), cum_(cumulative_length(chain.vertices)), K_(K), eps_(epsilon), t_(1.0 / (epsilon * epsilon)),
        window_(window), opt_(opt) {}

  std::vector<EnlargeBall> run() {
    for (std::size_t s = 0; s + 1 < v_.size(); ++s)
      if (clip_segment_to_box(v_[s], v_[s + 1], window_.lo, window_.hi)) buf_.push_back(static_cast<int>(s));
    const int k0 = coarse_level(std::max(window_.hi.x - window_.lo.x, window_.hi.y - window_.lo.y));
    const std::size_t n = buf_.size();
    for (const auto& q : root_cubes(window_, k0)) visit(q, 0, n);
    std::sort(out_.begin(), out_.end(), [](const EnlargeBall& a, const EnlargeBall& b) { return a.cube < b.cube; });
    return std::move(out_);
  }

 private:
  void visit(const DyadicCube& q, std::size_t begin, std::size_t end) {
    const Box region{{std::max(q.lo().x, window_.lo.x), std::max(q.lo().y, window_.lo.y)},
                     {std::min(q.hi().x, window_.hi.x), std::min(q.hi().y, window_.hi.y)}};
    if (region.lo.x > region.hi.x || region.lo.y > region.hi.y) return;
    const std::size_t first = buf_.size();
    for (std::size_t k = begin; k < end; ++k) {
      const int s = buf_[k];
      if (clip_segment_to_box(v_[s], v_[s + 1], region.lo, region.hi)) buf_.push_back(s);
    }
    const std::size_t last = buf_.size();
    if (first == last) return;
    const Vec2 c = q.center();
    if (eps_ * (K_.nearest(c) + q.side() * std::numbers::sqrt2 / 2.0) < opt_.pitch) {
      buf_.resize(first);
      return;
    }
    if (cube_inside(q, window_) && dilate_avoids(K_, q, t_)) {
      attach_ball(q, region, first, last);
    } else if (q.level < opt_.max_level) {
      for (const auto& child : q.children()) visit(child, first, last);
    }
    buf_.resize(first);
  }

  /// z_Q is the chain vertex in Q ∩ window nearest the cube center, or the
  /// nearest point of the chain in Q ∩ window when no vertex lies there.
  void attach_ball(const DyadicCube& q, const Box& region, std::size_t first, std::size_t last) {
    const Vec2 c = q.center();
    double best = std::numeric_limits<double>::infinity();
    Vec2 z;
    double arc = 0.0;
    for (std::size_t k = first; k < last; ++k)
      for (int v : {buf_[k], buf_[k] + 1})
        if (region.contains(v_[v]) && distance(v_[v], c) < best) {
          best = distance(v_[v], c);
          z = v_[v];
          arc = cum_[v];
        }
    if (!std::isfinite(best)) {
      for (std::size_t k = first; k < last; ++k) {
        const int s = buf_[k];
        const Vec2 a = v_[s], b = v_[s + 1];
        const auto iv = clip_segment_to_box(a, b, region.lo, region.hi);
        const Vec2 p0 = a + (b - a) * iv->first, p1 = a + (b - a) * iv->second;
        const Vec2 p = closest_point_on_segment(c, p0, p1);
        if (distance(p, c) < best) {
          best = distance(p, c);
          z = p;
          arc = cum_[s] + distance(a, p);
        }
      }
    }
    const double r = eps_ * K_.nearest(z);
    if (r >= opt_.pitch) out_.push_back({q, z, r, arc});
  }

  std::span<const Vec2> v_;
  std::vector<double> cum_;
  const PointTree& K_;
  double eps_, t_;
  Box window_;
  EnlargeOptions opt_;
  std::vector<int> buf_;
  std::vector<EnlargeBall> out_;
};

/// Keeps balls spaced along the chain by at least 2·sqrt(pitch·r), so the
/// scallops between neighbours are at most about pitch/2 deep.
inline std::vector<EnlargeBall> thin_balls(std::vector<EnlargeBall> balls, double pitch) {
  std::sort(balls.begin(), balls.end(), [](const EnlargeBall& a, const EnlargeBall& b) {
    return a.arclength != b.arclength ? a.arclength < b.arclength : a.cube < b.cube;
  });
  std::vector<EnlargeBall> kept;
  for (const auto& b : balls) {
    if (!kept.empty()) {
      const auto& prev = kept.back();
      if (b.arclength - prev.arclength < 2.0 * std::sqrt(pitch * std::min(b.radius, prev.radius))) continue;
    }
    kept.push_back(b);
  }
  return kept;
}

namespace bg = boost::geometry;
using BPoint = bg::model::d2::point_xy<double>;
using BPolygon = bg::model::polygon<BPoint, false, true>;
using BMulti = bg::model::multi_polygon<BPolygon>;

inline BPolygon to_polygon(std::span<const Vec2> ring) {
  BPolygon poly;
  for (const auto& p : ring) bg::append(poly.outer(), BPoint(p.x, p.y));
  bg::append(poly.outer(), BPoint(ring.front().x, ring.front().y));
  bg::correct(poly);
  return poly;
}

inline std::vector<Vec2> disc_ring(const Vec2& c, double r, int n) {
  std::vector<Vec2> ring;
  for (int k = 0; k < n; ++k) {
    const double a = 2.0 * std::numbers::pi * k / n;
    ring.push_back({c.x + r * std::cos(a), c.y + r * std::sin(a)});
  }
  return ring;
}

inline BMulti cascaded_union(std::vector<BMulti> parts) {
  while (parts.size() > 1) {
    std::vector<BMulti> next;
    for (std::size_t k = 0; k < parts.size(); k += 2) {
      if (k + 1 == parts.size()) {
        next.push_back(std::move(parts[k]));
        continue;
      }
      BMulti u;
      bg::union_(parts[k], parts[k + 1], u);
      next.push_back(std::move(u));
    }
    parts = std::move(next);
  }
  return parts.empty() ? BMulti{} : std::move(parts.front());
}

}  // namespace detail

/// Boundary of (region above the margin-extended chain) ∪ (polygonized
/// balls), as the polyline from the left margin end to the right one.
inline std::vector<Vec2> enlarged_boundary(const BoundaryChain& base, std::span<const EnlargeBall> balls,
                                           const EnlargeOptions& opt = {}) {
  if (base.vertices.size() < 2) throw DegenerateInput("chain needs at least two vertices");
  if (opt.segments_per_circle < 8) throw DegenerateInput("segments_per_circle must be >= 8");
  if (!(opt.margin > 0.0)) throw DegenerateInput("margin must be positive");
  const Vec2 left = base.vertices.front() - Vec2{opt.margin, 0.0};
  const Vec2 right = base.vertices.back() + Vec2{opt.margin, 0.0};
  double top = std::max(left.y, right.y);
  for (const auto& v : base.vertices) top = std::max(top, v.y);
  for (const auto& b : balls) top = std::max(top, b.center.y + b.radius);
  top += 1.0;
  std::vector<Vec2> ring{left};
  ring.insert(ring.end(), base.vertices.begin(), base.vertices.end());
  ring.push_back(right);
  ring.push_back({right.x, top});
  ring.push_back({left.x, top});

  std::vector<detail::BMulti> parts;
  parts.push_back({detail::to_polygon(ring)});
  for (const auto& b : balls) parts.push_back({detail::to_polygon(detail::disc_ring(b.center, b.radius, opt.segments_per_circle))});
  const auto u = detail::cascaded_union(std::move(parts));
  if (u.size() != 1) throw DegenerateInput("enlarged domain is not connected");
  const auto& outer = u.front().outer();
  const std::size_t n = outer.size() - 1;  // closed ring repeats its first point
  auto find = [&](const Vec2& p) {
    for (std::size_t k = 0; k < n; ++k)
      if (outer[k].x() == p.x && outer[k].y() == p.y) return k;
    throw DegenerateInput("margin end lost in the union");
  };
  const std::size_t from = find(left), to = find(right);
  std::vector<Vec2> path;
  for (std::size_t k = from;; k = (k + 1) % n) {
    path.push_back({outer[k].x(), outer[k].y()});
    if (k == to) break;
  }
  return path;
}

/// Ω ∪ ⋃ B_Q over the Whitney cubes of R² \ K with t = ε^{−2} that meet the
/// chain inside the window.
inline EnlargedDomain enlarge_domain(const BoundaryChain& chain, std::span<const Vec2> K, double epsilon, const Box& window,
                                     const EnlargeOptions& opt = {}) {
  if (!(epsilon > 0.0 && epsilon < 0.01)) throw DegenerateInput("epsilon must lie in (0, 1/100)");
  if (K.empty()) throw DegenerateInput("K must be nonempty");
  if (!(opt.pitch > 0.0)) throw DegenerateInput("pitch must be positive");
  detail::validate_window(window);
  const ChainIndex index(chain);
  const double scale = std::max(window.hi.x - window.lo.x, window.hi.y - window.lo.y);
  for (const auto& x : K)
    if (index.distance(x) > 1e-9 * scale) throw DegenerateInput("K must lie on the chain");
  const PointTree tree({K.begin(), K.end()});

  EnlargedDomain d;
  d.base = chain;
  d.K.assign(K.begin(), K.end());
  d.epsilon = epsilon;
  d.window = window;
  d.pitch = opt.pitch;
  d.segments_per_circle = opt.segments_per_circle;
  auto all = detail::ChainCubeWalker(chain, tree, epsilon, window, opt).run();
  check_balls_clear(all, tree);
  d.cube_count = all.size();
  d.balls = detail::thin_balls(std::move(all), opt.pitch);
  d.boundary = enlarged_boundary(chain, d.balls, opt);
  return d;
}

/// H¹ of ∂Ω_ε^+ inside the window. Boundary edges that are chords of a
/// retained ball are counted with the length of their arc.
inline double boundary_length_estimate(const EnlargedDomain& d, const Box& window) {
  double rmax = 0.0;
  for (const auto& b : d.balls) rmax = std::max(rmax, b.radius);
  const double cell = rmax > 0.0 ? 2.0 * rmax : 1.0;
  auto key = [cell](const Vec2& p) {
    const auto i = static_cast<std::int64_t>(std::floor(p.x / cell)), j = static_cast<std::int64_t>(std::floor(p.y / cell));
    return (static_cast<std::uint64_t>(i) << 32) ^ (static_cast<std::uint64_t>(j) & 0xffffffffULL);
  };
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> grid;
  for (std::size_t k = 0; k < d.balls.size(); ++k) grid[key(d.balls[k].center)].push_back(k);

  auto on_circle = [](const Vec2& p, const EnlargeBall& b) {
    return std::abs(distance(p, b.center) - b.radius) <= 1e-9 * b.radius;
  };
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < d.boundary.size(); ++k) {
    const Vec2 a = d.boundary[k], b = d.boundary[k + 1];
    const auto iv = clip_segment_to_box(a, b, window.lo, window.hi);
    if (!iv) continue;
    double len = distance(a, b);
    const Vec2 m = (a + b) * 0.5;
    bool done = false;
    for (int di = -1; di <= 1 && !done; ++di)
      for (int dj = -1; dj <= 1 && !done; ++dj) {
        const auto it = grid.find(key(m + Vec2{di * cell, dj * cell}));
        if (it == grid.end()) continue;
        for (std::size_t bi : it->second) {
          const auto& ball = d.balls[bi];
          if (on_circle(a, ball) && on_circle(b, ball)) {
            len = 2.0 * ball.radius * std::asin(std::min(1.0, len / (2.0 * ball.radius)));
            done = true;
            break;
          }
        }
      }
    total += (iv->second - iv->first) * len;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Candidate singular set

struct SingularCandidate {
  std::vector<int> nodes;
  std::vector<Vec2> points;
  double mass = 0.0;
  /// Nodes passing the threshold before clustering.
  std::size_t passing = 0;
};

/// Nodes x whose local slope log₂(μ(B(x, 2r)) / μ(B(x, r))) stays below
/// 1 − α at every sampled dyadic r = ρ·2^{−j}, j < n_scales − 1. Passing
/// nodes are linked when closer than the smallest sampled radius; the
/// cluster of largest μ-mass is returned.
inline SingularCandidate extract_singular_candidate(const BoundaryMeasure& mu, const MeasureIndex& index, double alpha,
                                                    double rho, int n_scales) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DegenerateInput("alpha must lie in (0, 1)");
  if (!(rho > 0.0)) throw DegenerateInput("rho must be positive");
  if (n_scales < 2) throw DegenerateInput("at least two scales are needed");
  std::vector<double> radii;
  for (int j = 0; j < n_scales; ++j) radii.push_back(std::ldexp(rho, -j));
  const double link = radii.back();

  std::vector<int> pass;
  std::vector<double> m(radii.size());
  for (std::size_t i = 0; i < mu.nodes.size(); ++i) {
    if (!(mu.weights[i] > 0.0)) continue;
    if (mu.window && !mu.window->contains(mu.nodes[i])) continue;
    for (std::size_t j = 0; j < radii.size(); ++j) m[j] = index.mass_in_ball(mu.nodes[i], radii[j]);
    if (!(m.back() > 0.0)) continue;
    bool ok = true;
    for (std::size_t j = 0; j + 1 < radii.size() && ok; ++j) ok = std::log2(m[j] / m[j + 1]) < 1.0 - alpha;
    if (ok) pass.push_back(static_cast<int>(i));
  }
  if (pass.empty()) throw EmptyCandidate("no boundary node passes the threshold at alpha " + std::to_string(alpha));

  // single-linkage clusters through a hash grid of cell size `link`
  std::vector<int> parent(pass.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto root = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  auto cell_of = [link](const Vec2& p) {
    return std::pair{static_cast<std::int64_t>(std::floor(p.x / link)), static_cast<std::int64_t>(std::floor(p.y / link))};
  };
  auto key = [](std::int64_t i, std::int64_t j) {
    return (static_cast<std::uint64_t>(i) << 32) ^ (static_cast<std::uint64_t>(j) & 0xffffffffULL);
  };
  std::unordered_map<std::uint64_t, std::vector<int>> grid;
  for (std::size_t k = 0; k < pass.size(); ++k) {
    const Vec2 p = mu.nodes[pass[k]];
    const auto [ci, cj] = cell_of(p);
    for (std::int64_t di = -1; di <= 1; ++di)
      for (std::int64_t dj = -1; dj <= 1; ++dj) {
        const auto it = grid.find(key(ci + di, cj + dj));
        if (it == grid.end()) continue;
        for (int other : it->second)
          if (distance(p, mu.nodes[pass[other]]) <= link) parent[root(static_cast<int>(k))] = root(other);
      }
    grid[key(ci, cj)].push_back(static_cast<int>(k));
  }
  std::unordered_map<int, double> cluster_mass;
  for (std::size_t k = 0; k < pass.size(); ++k) cluster_mass[root(static_cast<int>(k))] += mu.weights[pass[k]];
  int best = -1;
  for (std::size_t k = 0; k < pass.size(); ++k) {
    const int r = root(static_cast<int>(k));
    if (best < 0 || cluster_mass[r] > cluster_mass[best]) best = r;
  }
  SingularCandidate out;
  out.passing = pass.size();
  for (std::size_t k = 0; k < pass.size(); ++k)
    if (root(static_cast<int>(k)) == best) {
      out.nodes.push_back(pass[k]);
      out.points.push_back(mu.nodes[pass[k]]);
    }
  out.mass = cluster_mass[best];
  return out;
}

}  // namespace wolff_lab

#endif  // WOLFF_LAB_ENLARGE_HPP
