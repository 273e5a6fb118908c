#ifndef WOLFF_LAB_SPATIAL_HPP
#define WOLFF_LAB_SPATIAL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <unordered_map>
#include <vector>

#include "wolff_lab/planar.hpp"

namespace wolff_lab {

/// Uniform hash grid over a set of segments for nearest-distance and
/// box queries. Segments are registered in every cell their bounding box
/// touches.
class SegmentGrid {
 public:
  struct Segment {
    Vec2 a;
    Vec2 b;
  };

  SegmentGrid() = default;

  SegmentGrid(std::vector<Segment> segments, double cell) : segs_(std::move(segments)), cell_(cell) {
    if (!(cell_ > 0.0)) {
      double total = 0.0;
      for (const auto& s : segs_) total += wolff_lab::distance(s.a, s.b);
      cell_ = segs_.empty() ? 1.0 : std::max(total / segs_.size(), 1e-12) * 2.0;
    }
    stamp_.assign(segs_.size(), 0);
    for (std::size_t i = 0; i < segs_.size(); ++i) {
      const auto& s = segs_[i];
      const auto [i0, j0] = cell_of({std::min(s.a.x, s.b.x), std::min(s.a.y, s.b.y)});
      const auto [i1, j1] = cell_of({std::max(s.a.x, s.b.x), std::max(s.a.y, s.b.y)});
      for (std::int64_t ci = i0; ci <= i1; ++ci)
        for (std::int64_t cj = j0; cj <= j1; ++cj) cells_[key(ci, cj)].push_back(static_cast<int>(i));
      lo_ = {std::min(lo_.x, std::min(s.a.x, s.b.x)), std::min(lo_.y, std::min(s.a.y, s.b.y))};
      hi_ = {std::max(hi_.x, std::max(s.a.x, s.b.x)), std::max(hi_.y, std::max(s.a.y, s.b.y))};
    }
  }

  static SegmentGrid from_polyline(std::span<const Vec2> pts, double cell = 0.0) {
    std::vector<Segment> segs;
    for (std::size_t i = 1; i < pts.size(); ++i) segs.push_back({pts[i - 1], pts[i]});
    return SegmentGrid(std::move(segs), cell);
  }

  bool empty() const { return segs_.empty(); }
  const std::vector<Segment>& segments() const { return segs_; }

  struct Nearest {
    double distance = std::numeric_limits<double>::infinity();
    int index = -1;
  };

  /// Nearest segment to p; the search stops early once the answer is known
  /// to exceed `cap` (the result is then only a lower bound).
  Nearest nearest(const Vec2& p, double cap = std::numeric_limits<double>::infinity()) const {
    Nearest best;
    if (segs_.empty()) return best;
    ++epoch_;
    const auto [ci, cj] = cell_of(p);
    // rings beyond the bounding box add nothing
    const double far = std::max({lo_.x - p.x, p.x - hi_.x, lo_.y - p.y, p.y - hi_.y, 0.0});
    const std::int64_t kmax =
        static_cast<std::int64_t>(std::ceil((far + std::max(hi_.x - lo_.x, hi_.y - lo_.y)) / cell_)) + 1;
    const std::int64_t kmin = std::max<std::int64_t>(0, static_cast<std::int64_t>(far / cell_) - 1);
    for (std::int64_t k = kmin; k <= kmax; ++k) {
      if (best.distance <= (k - 1) * cell_ || (k - 1) * cell_ > cap) break;
      for (std::int64_t di = -k; di <= k; ++di) {
        const std::int64_t step = (std::abs(di) == k) ? 1 : 2 * k;
        for (std::int64_t dj = -k; dj <= k; dj += (step == 0 ? 1 : step)) {
          visit(ci + di, cj + dj, [&](int s) {
            const double d = distance_to_segment(p, segs_[s].a, segs_[s].b);
            if (d < best.distance) best = {d, s};
          });
        }
      }
    }
    return best;
  }

  double distance(const Vec2& p, double cap = std::numeric_limits<double>::infinity()) const {
    return nearest(p, cap).distance;
  }

  /// Calls f(index) once per segment whose cell overlaps the box [lo, hi].
  template <class F>
  void for_each_in_box(const Vec2& lo, const Vec2& hi, F&& f) const {
    ++epoch_;
    const auto [i0, j0] = cell_of(lo);
    const auto [i1, j1] = cell_of(hi);
    for (std::int64_t ci = i0; ci <= i1; ++ci)
      for (std::int64_t cj = j0; cj <= j1; ++cj) visit(ci, cj, f);
  }

 private:
  std::pair<std::int64_t, std::int64_t> cell_of(const Vec2& p) const {
    return {static_cast<std::int64_t>(std::floor(p.x / cell_)), static_cast<std::int64_t>(std::floor(p.y / cell_))};
  }
  static std::uint64_t key(std::int64_t i, std::int64_t j) {
    return (static_cast<std::uint64_t>(i) << 32) ^ (static_cast<std::uint64_t>(j) & 0xffffffffULL);
  }
  template <class F>
  void visit(std::int64_t ci, std::int64_t cj, F&& f) const {
    const auto it = cells_.find(key(ci, cj));
    if (it == cells_.end()) return;
    for (int s : it->second) {
      if (stamp_[s] == epoch_) continue;
      stamp_[s] = epoch_;
      f(s);
    }
  }

  std::vector<Segment> segs_;
  double cell_ = 1.0;
  std::unordered_map<std::uint64_t, std::vector<int>> cells_;
  Vec2 lo_{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  Vec2 hi_{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  mutable std::vector<std::uint32_t> stamp_;
  mutable std::uint32_t epoch_ = 0;
};

/// Static 2-d tree over points answering nearest-distance queries in the
/// Euclidean or the Chebyshev (max) norm.
class PointTree {
 public:
  enum class Norm { euclidean, chebyshev };

  PointTree() = default;
  explicit PointTree(std::vector<Vec2> pts) : pts_(std::move(pts)) { build(0, pts_.size(), 0); }

  bool empty() const { return pts_.empty(); }
  std::size_t size() const { return pts_.size(); }
  std::span<const Vec2> points() const { return pts_; }

  double nearest(const Vec2& q, Norm norm = Norm::euclidean) const {
    double best = std::numeric_limits<double>::infinity();
    search(0, pts_.size(), 0, q, norm, best);
    return best;
  }

 private:
  void build(std::size_t lo, std::size_t hi, int axis) {
    if (hi - lo <= 1) return;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::nth_element(pts_.begin() + lo, pts_.begin() + mid, pts_.begin() + hi,
                     [axis](const Vec2& a, const Vec2& b) { return axis == 0 ? a.x < b.x : a.y < b.y; });
    build(lo, mid, 1 - axis);
    build(mid + 1, hi, 1 - axis);
  }

  void search(std::size_t lo, std::size_t hi, int axis, const Vec2& q, Norm norm, double& best) const {
    if (lo >= hi) return;
    const std::size_t mid = lo + (hi - lo) / 2;
    const Vec2 p = pts_[mid];
    const double d = norm == Norm::euclidean ? distance(p, q) : std::max(std::abs(p.x - q.x), std::abs(p.y - q.y));
    best = std::min(best, d);
    const double split = axis == 0 ? q.x - p.x : q.y - p.y;
    const auto [near_lo, near_hi, far_lo, far_hi] =
        split < 0.0 ? std::array{lo, mid, mid + 1, hi} : std::array{mid + 1, hi, lo, mid};
    search(near_lo, near_hi, 1 - axis, q, norm, best);
    if (std::abs(split) < best) search(far_lo, far_hi, 1 - axis, q, norm, best);
  }

  std::vector<Vec2> pts_;
};

}  // namespace wolff_lab

#endif  // WOLFF_LAB_SPATIAL_HPP
