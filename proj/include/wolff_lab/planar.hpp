#ifndef WOLFF_LAB_PLANAR_HPP
#define WOLFF_LAB_PLANAR_HPP

// Planar primitives shared by every module: points, segment/disc clipping,
// intersection predicates and polygon utilities.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace wolff_lab {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
  constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
  friend constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
  friend constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
  friend constexpr Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
  friend constexpr Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }
  friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }
constexpr double norm2(const Vec2& a) { return dot(a, a); }
inline double distance(const Vec2& a, const Vec2& b) { return norm(a - b); }
/// Counter-clockwise rotation by 90 degrees.
constexpr Vec2 perp(const Vec2& a) { return {-a.y, a.x}; }
inline Vec2 normalized(const Vec2& a) { return a / norm(a); }

/// Twice the signed area of (a, b, c); positive when counter-clockwise.
constexpr double orient(const Vec2& a, const Vec2& b, const Vec2& c) {
  return cross(b - a, c - a);
}

namespace detail {

// Nonoverlapping expansion arithmetic for exact sign evaluation.
inline void grow_expansion(std::vector<double>& e, double b) {
  for (double& c : e) {
    const double sum = c + b;
    const double bv = sum - c;
    const double err = (c - (sum - bv)) + (b - bv);
    c = err;
    b = sum;
  }
  e.push_back(b);
}

inline void add_product(std::vector<double>& e, double x, double y) {
  const double p = x * y;
  grow_expansion(e, std::fma(x, y, -p));
  grow_expansion(e, p);
}

}  // namespace detail

/// Exact sign of orient(a, b, c): a floating-point filter with an
/// expansion-arithmetic fallback.
inline int orient_sign(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double left = (b.x - a.x) * (c.y - a.y);
  const double right = (b.y - a.y) * (c.x - a.x);
  const double det = left - right;
  const double bound = 3.3306690738754716e-16 * (std::abs(left) + std::abs(right));
  if (det > bound) return 1;
  if (-det > bound) return -1;
  std::vector<double> e;
  e.reserve(12);
  detail::add_product(e, a.x, b.y);
  detail::add_product(e, -a.x, c.y);
  detail::add_product(e, b.x, c.y);
  detail::add_product(e, -b.x, a.y);
  detail::add_product(e, c.x, a.y);
  detail::add_product(e, -c.x, b.y);
  for (auto it = e.rbegin(); it != e.rend(); ++it)
    if (*it != 0.0) return *it > 0.0 ? 1 : -1;
  return 0;
}

inline Vec2 closest_point_on_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double l2 = norm2(d);
  if (l2 == 0.0) return a;
  const double t = std::clamp(dot(p - a, d) / l2, 0.0, 1.0);
  return a + t * d;
}

inline double distance_to_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  return distance(p, closest_point_on_segment(p, a, b));
}

/// Parameter interval [t0, t1] ⊂ [0, 1] of the part of segment ab lying in the
/// closed disc of radius r about c, or nullopt if the segment misses it.
inline std::optional<std::pair<double, double>> clip_segment_to_disc(
    const Vec2& a, const Vec2& b, const Vec2& c, double r) {
  const Vec2 d = b - a;
  const Vec2 f = a - c;
  const double qa = norm2(d);
  const double qb = 2.0 * dot(f, d);
  const double qc = norm2(f) - r * r;
  if (qa == 0.0) {
    if (qc <= 0.0) return std::pair{0.0, 1.0};
    return std::nullopt;
  }
  const double disc = qb * qb - 4.0 * qa * qc;
  if (disc < 0.0) return std::nullopt;
  const double sq = std::sqrt(disc);
  // numerically stable roots
  const double q = -0.5 * (qb + std::copysign(sq, qb));
  double t0 = q / qa;
  double t1 = (q != 0.0) ? qc / q : -t0;
  if (t0 > t1) std::swap(t0, t1);
  t0 = std::max(t0, 0.0);
  t1 = std::min(t1, 1.0);
  if (t0 > t1) return std::nullopt;
  return std::pair{t0, t1};
}

/// Parameter interval [t0, t1] ⊂ [0, 1] of the part of segment ab lying in the
/// closed box [lo, hi], or nullopt if the segment misses it.
inline std::optional<std::pair<double, double>> clip_segment_to_box(
    const Vec2& a, const Vec2& b, const Vec2& lo, const Vec2& hi) {
  double t0 = 0.0, t1 = 1.0;
  const Vec2 d = b - a;
  const double p[4] = {-d.x, d.x, -d.y, d.y};
  const double q[4] = {a.x - lo.x, hi.x - a.x, a.y - lo.y, hi.y - a.y};
  for (int k = 0; k < 4; ++k) {
    if (p[k] == 0.0) {
      if (q[k] < 0.0) return std::nullopt;
      continue;
    }
    const double r = q[k] / p[k];
    if (p[k] < 0.0) t0 = std::max(t0, r);
    else t1 = std::min(t1, r);
    if (t0 > t1) return std::nullopt;
  }
  return std::pair{t0, t1};
}

/// Length of segment ab inside the disc B(c, r).
inline double clipped_length(const Vec2& a, const Vec2& b, const Vec2& c, double r) {
  const auto iv = clip_segment_to_disc(a, b, c, r);
  if (!iv) return 0.0;
  return (iv->second - iv->first) * distance(a, b);
}

/// True when the closed segments ab and cd share a point.
inline bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const int d1 = orient_sign(c, d, a);
  const int d2 = orient_sign(c, d, b);
  const int d3 = orient_sign(a, b, c);
  const int d4 = orient_sign(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
      ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
    return true;
  auto on_seg = [](const Vec2& p, const Vec2& q, const Vec2& r) {
    return std::min(p.x, q.x) <= r.x && r.x <= std::max(p.x, q.x) &&
           std::min(p.y, q.y) <= r.y && r.y <= std::max(p.y, q.y);
  };
  if (d1 == 0 && on_seg(c, d, a)) return true;
  if (d2 == 0 && on_seg(c, d, b)) return true;
  if (d3 == 0 && on_seg(a, b, c)) return true;
  if (d4 == 0 && on_seg(a, b, d)) return true;
  return false;
}

inline double segment_distance(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  if (segments_intersect(a, b, c, d)) return 0.0;
  return std::min({distance_to_segment(a, c, d), distance_to_segment(b, c, d),
                   distance_to_segment(c, a, b), distance_to_segment(d, a, b)});
}

/// Signed area of a closed polygon (counter-clockwise positive).
inline double signed_area(std::span<const Vec2> poly) {
  double s = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) s += cross(poly[i], poly[(i + 1) % n]);
  return 0.5 * s;
}

/// Even-odd point-in-polygon test over a set of closed loops.
inline bool point_in_loops(const Vec2& p, std::span<const std::vector<Vec2>> loops) {
  bool inside = false;
  for (const auto& loop : loops) {
    const std::size_t n = loop.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const Vec2& a = loop[i];
      const Vec2& b = loop[j];
      if ((a.y > p.y) != (b.y > p.y)) {
        const double xs = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
        if (p.x < xs) inside = !inside;
      }
    }
  }
  return inside;
}

inline bool point_in_polygon(const Vec2& p, const std::vector<Vec2>& poly) {
  return point_in_loops(p, std::span<const std::vector<Vec2>>(&poly, 1));
}

inline double polyline_length(std::span<const Vec2> pts) {
  double s = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) s += distance(pts[i - 1], pts[i]);
  return s;
}

/// Length of an open polyline inside the disc B(c, r).
inline double polyline_length_in_disc(std::span<const Vec2> pts, const Vec2& c, double r) {
  double s = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) s += clipped_length(pts[i - 1], pts[i], c, r);
  return s;
}

inline double distance_to_polyline(const Vec2& p, std::span<const Vec2> pts) {
  if (pts.size() == 1) return distance(p, pts[0]);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < pts.size(); ++i)
    best = std::min(best, distance_to_segment(p, pts[i - 1], pts[i]));
  return best;
}

/// Area of the intersection of triangle abc with the disc B(c0, r); the
/// triangle may have either orientation.
inline double triangle_disc_area(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& c0, double r) {
  // signed area of disc ∩ triangle(c0, p, q), summed over the three edges
  auto edge_part = [&](const Vec2& p0, const Vec2& q0) {
    const Vec2 p = p0 - c0;
    const Vec2 q = q0 - c0;
    auto piece = [&](const Vec2& u, const Vec2& v) {
      const Vec2 m = (u + v) * 0.5;
      if (norm2(m) <= r * r) return 0.5 * cross(u, v);
      return 0.5 * r * r * std::atan2(cross(u, v), dot(u, v));
    };
    const auto iv = clip_segment_to_disc(p, q, Vec2{}, r);
    if (!iv) return piece(p, q);
    const Vec2 d = q - p;
    const Vec2 s = p + iv->first * d;
    const Vec2 t = p + iv->second * d;
    return piece(p, s) + piece(s, t) + piece(t, q);
  };
  return std::abs(edge_part(a, b) + edge_part(b, c) + edge_part(c, a));
}

/// Circumcenter of a triangle; callers guarantee non-degeneracy.
inline Vec2 circumcenter(const Vec2& a, const Vec2& b, const Vec2& c) {
  const Vec2 ab = b - a;
  const Vec2 ac = c - a;
  const double d = 2.0 * cross(ab, ac);
  const double ab2 = norm2(ab);
  const double ac2 = norm2(ac);
  return a + Vec2{(ac.y * ab2 - ab.y * ac2) / d, (ab.x * ac2 - ac.x * ab2) / d};
}

/// Smallest interior angle of a triangle, radians.
inline double min_angle(const Vec2& a, const Vec2& b, const Vec2& c) {
  auto ang = [](const Vec2& p, const Vec2& q, const Vec2& r) {
    const Vec2 u = q - p;
    const Vec2 v = r - p;
    return std::atan2(std::abs(cross(u, v)), dot(u, v));
  };
  return std::min({ang(a, b, c), ang(b, c, a), ang(c, a, b)});
}

}  // namespace wolff_lab

#endif  // WOLFF_LAB_PLANAR_HPP
