#ifndef WOLFF_LAB_GEOMETRY_HPP
#define WOLFF_LAB_GEOMETRY_HPP

// Snowflake construction by iterated blips, and the geometric certificates
// used on boundary chains: flatness, Hausdorff distance, Ahlfors ratios and
// corkscrew points.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wolff_lab/errors.hpp"
#include "wolff_lab/planar.hpp"
#include "wolff_lab/spatial.hpp"

namespace wolff_lab {

/// Piecewise-linear bump φ on [−1/2, 1/2] together with the realized graph
/// of ψ(x) = φ(N x) / N. The domain lies above the graph.
struct BlipTemplate {
  std::vector<Vec2> phi;  // breakpoints (x, φ(x)), x increasing; φ vanishes outside
  double theta0 = 0.0;
  int N = 1;
  double b = 0.25;

  std::vector<Vec2> graph;  // from (−1/2, 0) to (1/2, 0), collinear runs merged

  /// True for graph pieces that leave the axis (the part that is new).
  bool is_bump_piece(std::size_t i) const { return graph[i].y != 0.0 || graph[i + 1].y != 0.0; }
  double arclength() const { return polyline_length(graph); }
  double sup_abs_psi() const {
    double m = 0.0;
    for (const auto& v : graph) m = std::max(m, std::abs(v.y));
    return m;
  }
  /// Vertices of the rhombus P ∪ P̃ with tips at (±1/2, 0) and height ±b.
  std::array<Vec2, 4> rhombus() const { return {Vec2{-0.5, 0.0}, Vec2{0.0, -b}, Vec2{0.5, 0.0}, Vec2{0.0, b}}; }
};

namespace detail {

inline std::vector<Vec2> merge_collinear(std::vector<Vec2> pts) {
  std::vector<Vec2> out;
  for (const auto& p : pts) {
    if (!out.empty() && out.back() == p) continue;
    while (out.size() >= 2 && orient(out[out.size() - 2], out.back(), p) == 0.0) out.pop_back();
    out.push_back(p);
  }
  return out;
}

}  // namespace detail

/// Validates φ and realizes the graph of ψ. Breakpoints must lie strictly
/// inside (−1/2, 1/2) with φ = 0 at the first and last one.
inline BlipTemplate build_template(std::vector<Vec2> phi, int N, double b, double theta0) {
  if (N < 1) throw DegenerateInput("N must be >= 1");
  if (!(b > 0.0 && b < 1.0)) throw DegenerateInput("b must lie in (0, 1)");
  BlipTemplate t;
  t.phi = std::move(phi);
  t.N = N;
  t.b = b;
  t.theta0 = theta0;
  for (std::size_t i = 0; i < t.phi.size(); ++i) {
    const auto& v = t.phi[i];
    if (!(v.x > -0.5 && v.x < 0.5)) throw ClearanceViolation("phi breakpoint outside (-1/2, 1/2)");
    if (i > 0 && !(v.x > t.phi[i - 1].x)) throw DegenerateInput("phi breakpoints must increase");
  }
  if (!t.phi.empty() && (t.phi.front().y != 0.0 || t.phi.back().y != 0.0))
    throw ClearanceViolation("phi must vanish at the ends of its support");
  for (std::size_t i = 1; i < t.phi.size(); ++i) {
    const double slope = std::abs((t.phi[i].y - t.phi[i - 1].y) / (t.phi[i].x - t.phi[i - 1].x));
    if (slope > theta0 * (1.0 + 1e-12))
      throw SlopeViolation("slope " + std::to_string(slope) + " exceeds theta0 " + std::to_string(theta0));
  }
  std::vector<Vec2> pts{{-0.5, 0.0}};
  for (const auto& v : t.phi) pts.push_back({v.x / N, v.y / N});
  pts.push_back({0.5, 0.0});
  t.graph = detail::merge_collinear(std::move(pts));

  const auto rh = t.rhombus();
  for (std::size_t i = 0; i + 1 < t.graph.size(); ++i) {
    if (!t.is_bump_piece(i)) continue;
    for (int k = 0; k < 4; ++k) {
      const double d = segment_distance(t.graph[i], t.graph[i + 1], rh[k], rh[(k + 1) % 4]);
      if (d < b / 100.0)
        throw ClearanceViolation("graph comes within " + std::to_string(d) + " of the rhombus boundary");
    }
  }
  return t;
}

/// Segment with a distinguished endpoint; `terminal` marks the end pieces
/// left over by a truncated Whitney subdivision.
struct Face {
  Vec2 a;
  Vec2 b;
  int distinguished_end = 1;  // 0 → a, 1 → b
  bool terminal = false;

  double length() const { return distance(a, b); }
  Vec2 distinguished() const { return distinguished_end == 0 ? a : b; }
  /// Unit normal to the right of a → b, away from a domain on the left.
  Vec2 outward_normal() const { return -perp(normalized(b - a)); }
};

/// Maximal 8-adic subsegments S of the face with len(S) ≤ dist(S, ends) ≤
/// 8·len(S), down to level `depth`, in order from a to b. The two end pieces
/// not reached by the truncation are returned as terminal faces.
inline std::vector<Face> whitney_face_subdivision(const Face& face, int depth = 1) {
  if (!(face.length() > 0.0)) throw DegenerateInput("face of zero length");
  if (depth < 1) throw DegenerateInput("subdivision depth must be >= 1");
  // cut points on [0, 1/2]: seven cells per level below the first, three at level 1
  std::vector<double> left{0.0};
  for (int k = depth; k >= 2; --k)
    for (int j = 1; j <= 7; ++j) left.push_back(j * std::pow(8.0, -k));
  for (int j = 1; j <= 4; ++j) left.push_back(j / 8.0);
  std::vector<double> cuts = left;
  for (auto it = left.rbegin() + 1; it != left.rend(); ++it) cuts.push_back(1.0 - *it);
  std::vector<Face> out;
  const bool toward_b = face.distinguished_end == 1;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    Face f;
    const double t0 = cuts[i], t1 = cuts[i + 1];
    f.a = (i == 0) ? face.a : face.a + (face.b - face.a) * t0;
    f.b = (i + 2 == cuts.size()) ? face.b : face.a + (face.b - face.a) * t1;
    f.distinguished_end = toward_b ? 1 : 0;
    f.terminal = (i == 0 || i + 2 == cuts.size());
    out.push_back(f);
  }
  return out;
}

/// Open polyline with the domain on its left. Segment i joins vertices i
/// and i+1; faces are the segments still to be blipped.
struct BoundaryChain {
  struct FaceRef {
    int i0 = 0;
    int i1 = 1;
    int dist_end = 1;  // 0 → vertex i0, 1 → vertex i1
  };
  std::vector<Vec2> vertices;
  std::vector<FaceRef> faces;
  int generation = 0;
  double edge_set_measure = 0.0;

  double length() const { return polyline_length(vertices); }
  Face face(std::size_t k) const {
    const auto& f = faces[k];
    return Face{vertices[f.i0], vertices[f.i1], f.dist_end, false};
  }
  std::size_t num_segments() const { return vertices.empty() ? 0 : vertices.size() - 1; }
};

/// Chain with a spatial index, for repeated geometric queries.
class ChainIndex {
 public:
  explicit ChainIndex(std::span<const Vec2> pts, double cell = 0.0)
      : pts_(pts.begin(), pts.end()), grid_(SegmentGrid::from_polyline(pts_, cell)) {}
  explicit ChainIndex(const BoundaryChain& c, double cell = 0.0) : ChainIndex(std::span<const Vec2>(c.vertices), cell) {}

  const std::vector<Vec2>& points() const { return pts_; }
  const SegmentGrid& grid() const { return grid_; }

  double distance(const Vec2& p) const { return grid_.distance(p); }

  /// True when p lies on the domain side (left) of the chain, judged at the
  /// nearest boundary point.
  bool inside(const Vec2& p) const {
    const auto nn = grid_.nearest(p);
    if (nn.index < 0) return false;
    const int i = nn.index;
    const Vec2 a = pts_[i], b = pts_[i + 1];
    const Vec2 d = b - a;
    const double t = dot(p - a, d) / norm2(d);
    if (t > 0.0 && t < 1.0) return orient(a, b, p) > 0.0;
    const int v = t <= 0.0 ? i : i + 1;
    const bool has_prev = v >= 1;
    const bool has_next = v + 1 < static_cast<int>(pts_.size());
    if (!has_prev) return orient(pts_[v], pts_[v + 1], p) > 0.0;
    if (!has_next) return orient(pts_[v - 1], pts_[v], p) > 0.0;
    const bool l1 = orient(pts_[v - 1], pts_[v], p) > 0.0;
    const bool l2 = orient(pts_[v], pts_[v + 1], p) > 0.0;
    return orient(pts_[v - 1], pts_[v], pts_[v + 1]) > 0.0 ? (l1 && l2) : (l1 || l2);
  }

  /// Pieces of the chain inside the closed disc B(c, r).
  std::vector<std::pair<Vec2, Vec2>> clip(const Vec2& c, double r) const {
    std::vector<std::pair<Vec2, Vec2>> out;
    std::vector<int> ids;
    grid_.for_each_in_box(c - Vec2{r, r}, c + Vec2{r, r}, [&](int s) { ids.push_back(s); });
    std::sort(ids.begin(), ids.end());
    for (int s : ids) {
      const Vec2 a = pts_[s], b = pts_[s + 1];
      const auto iv = clip_segment_to_disc(a, b, c, r);
      if (!iv) continue;
      out.emplace_back(a + (b - a) * iv->first, a + (b - a) * iv->second);
    }
    return out;
  }

  /// H¹ of the chain inside B(c, r).
  double length_in_disc(const Vec2& c, double r) const {
    double s = 0.0;
    grid_.for_each_in_box(c - Vec2{r, r}, c + Vec2{r, r},
                          [&](int k) { s += clipped_length(pts_[k], pts_[k + 1], c, r); });
    return s;
  }

 private:
  std::vector<Vec2> pts_;
  SegmentGrid grid_;
};

namespace detail {

/// Image of a template point under the similarity taking Q(1) onto the face:
/// (1/2, 0) goes to the distinguished end and (0, 1) to the inward normal.
struct BlipMap {
  Vec2 center;
  Vec2 along;   // unit, toward the distinguished end
  Vec2 inward;  // unit
  double scale;

  explicit BlipMap(const Face& f) {
    center = (f.a + f.b) * 0.5;
    scale = f.length();
    along = normalized(f.distinguished() - center);
    inward = perp(normalized(f.b - f.a));
  }
  Vec2 operator()(const Vec2& x) const { return center + (along * x.x + inward * x.y) * scale; }
};

struct BlipResult {
  std::vector<Vec2> points;      // from face.a to face.b inclusive
  std::vector<int> new_faces;    // local segment indices that become faces
  std::vector<int> dist_ends;    // distinguished end per new face (0 / 1 along a → b)
};

inline BlipResult blip_face(const Face& face, const BlipTemplate& tpl, int depth) {
  const BlipMap T(face);
  // traverse the template so the output runs from face.a to face.b
  std::vector<Vec2> g = tpl.graph;
  std::vector<char> bump(g.size() - 1);
  for (std::size_t i = 0; i + 1 < g.size(); ++i) bump[i] = tpl.is_bump_piece(i);
  const bool reversed = face.distinguished_end == 0;
  if (reversed) {
    std::reverse(g.begin(), g.end());
    std::reverse(bump.begin(), bump.end());
  }
  BlipResult out;
  out.points.push_back(face.a);
  for (std::size_t i = 0; i + 1 < g.size(); ++i) {
    const Vec2 pa = (i == 0) ? face.a : T(g[i]);
    const Vec2 pb = (i + 2 == g.size()) ? face.b : T(g[i + 1]);
    if (!bump[i]) {
      out.points.push_back(pb);
      continue;
    }
    // pieces inherit the parent's orientation: distinguished end toward face.b unless reversed
    Face piece{pa, pb, reversed ? 0 : 1, false};
    const auto cells = whitney_face_subdivision(piece, depth);
    for (const auto& c : cells) {
      const int seg = static_cast<int>(out.points.size()) - 1;
      out.points.push_back(c.b);
      if (!c.terminal) {
        out.new_faces.push_back(seg);
        out.dist_ends.push_back(c.distinguished_end);
      }
    }
    out.points.back() = pb;
  }
  return out;
}

}  // namespace detail

/// Indices (i, j) of the first pair of non-adjacent chain segments that
/// meet, or of adjacent segments that fold back onto each other.
inline std::optional<std::pair<int, int>> find_self_intersection(std::span<const Vec2> pts) {
  const auto grid = SegmentGrid::from_polyline(pts);
  const int n = static_cast<int>(pts.size()) - 1;
  for (int i = 0; i < n; ++i) {
    const Vec2 a = pts[i], b = pts[i + 1];
    std::optional<std::pair<int, int>> hit;
    grid.for_each_in_box({std::min(a.x, b.x), std::min(a.y, b.y)}, {std::max(a.x, b.x), std::max(a.y, b.y)},
                         [&](int j) {
                           if (hit || j <= i) return;
                           const Vec2 c = pts[j], d = pts[j + 1];
                           if (j == i + 1) {
                             if (orient_sign(a, b, d) == 0 && dot(b - a, d - c) < 0.0) hit = {{i, j}};
                             return;
                           }
                           if (segments_intersect(a, b, c, d)) hit = {{i, j}};
                         });
    if (hit) return hit;
  }
  return std::nullopt;
}

/// Replaces face k of the chain by its blip. Throws CollisionError when the
/// scaled rhombus or the new graph meets the rest of the chain.
inline BoundaryChain add_blip(const BoundaryChain& chain, std::size_t k, const BlipTemplate& tpl, int depth = 1);

namespace detail {

/// Checks the scaled rhombus of face `seg` against the rest of the chain.
inline void check_rhombus_clear(const ChainIndex& idx, int seg, const Face& face, const BlipTemplate& tpl) {
  const BlipMap T(face);
  const auto rh = tpl.rhombus();
  std::vector<Vec2> poly;
  for (const auto& v : rh) poly.push_back(T(v));
  poly[0] = face.distinguished_end == 0 ? face.b : face.a;
  poly[2] = face.distinguished();
  Vec2 lo = poly[0], hi = poly[0];
  for (const auto& v : poly) {
    lo = {std::min(lo.x, v.x), std::min(lo.y, v.y)};
    hi = {std::max(hi.x, v.x), std::max(hi.y, v.y)};
  }
  const auto& pts = idx.points();
  bool clash = false;
  idx.grid().for_each_in_box(lo, hi, [&](int j) {
    if (clash || j == seg) return;
    const Vec2 c = pts[j], d = pts[j + 1];
    if (j == seg - 1 || j == seg + 1) {
      // neighbours touch a tip; they may not enter the rhombus
      const Vec2 tip = (j == seg - 1) ? d : c;
      const Vec2 other = (j == seg - 1) ? c : d;
      const Vec2 probe = tip + (other - tip) * 1e-6;
      if (point_in_polygon(probe, poly)) clash = true;
      for (int e = 0; e < 4 && !clash; ++e) {
        const Vec2 p0 = poly[e], p1 = poly[(e + 1) % 4];
        if (p0 == tip || p1 == tip) continue;
        if (segments_intersect(c, d, p0, p1)) clash = true;
      }
      return;
    }
    if (point_in_polygon(c, poly) || point_in_polygon(d, poly)) clash = true;
    for (int e = 0; e < 4 && !clash; ++e)
      if (segments_intersect(c, d, poly[e], poly[(e + 1) % 4])) clash = true;
  });
  if (clash) throw CollisionError("blip region of segment " + std::to_string(seg) + " meets the chain");
}

/// Applies blips to the faces listed (indices into chain.faces).
inline BoundaryChain apply_blips(const BoundaryChain& chain, std::span<const std::size_t> which, const BlipTemplate& tpl,
                                 int depth) {
  const ChainIndex idx(chain);
  std::vector<int> face_at_segment(chain.num_segments(), -1);
  for (std::size_t k : which) {
    const auto& f = chain.faces.at(k);
    if (f.i1 != f.i0 + 1) throw DegenerateInput("faces must be single chain segments");
    face_at_segment[f.i0] = static_cast<int>(k);
  }
  BoundaryChain out;
  out.generation = chain.generation;
  out.edge_set_measure = chain.edge_set_measure;
  // faces that are not blipped survive unchanged
  std::vector<char> blipped(chain.faces.size(), 0);
  for (std::size_t k : which) blipped[k] = 1;
  std::vector<int> keep_face_at(chain.num_segments(), -1);
  for (std::size_t k = 0; k < chain.faces.size(); ++k)
    if (!blipped[k]) keep_face_at[chain.faces[k].i0] = static_cast<int>(k);

  out.vertices.push_back(chain.vertices.front());
  for (std::size_t s = 0; s < chain.num_segments(); ++s) {
    const int base = static_cast<int>(out.vertices.size()) - 1;
    if (face_at_segment[s] < 0) {
      out.vertices.push_back(chain.vertices[s + 1]);
      if (keep_face_at[s] >= 0) out.faces.push_back({base, base + 1, chain.faces[keep_face_at[s]].dist_end});
      continue;
    }
    const Face face = chain.face(static_cast<std::size_t>(face_at_segment[s]));
    check_rhombus_clear(idx, static_cast<int>(s), face, tpl);
    const auto r = blip_face(face, tpl, depth);
    for (std::size_t i = 1; i < r.points.size(); ++i) out.vertices.push_back(r.points[i]);
    int new_edge_points = 0;
    for (std::size_t j = 0; j < r.new_faces.size(); ++j) {
      const int seg = base + r.new_faces[j];
      out.faces.push_back({seg, seg + 1, r.dist_ends[j]});
      // each new face contributes its far endpoint; the first one also its near one
      new_edge_points += (j == 0 || r.new_faces[j - 1] + 1 != r.new_faces[j]) ? 2 : 1;
    }
    out.edge_set_measure += new_edge_points;
  }
  if (const auto hit = find_self_intersection(out.vertices))
    throw CollisionError("segments " + std::to_string(hit->first) + " and " + std::to_string(hit->second) + " meet");
  return out;
}

}  // namespace detail

inline BoundaryChain add_blip(const BoundaryChain& chain, std::size_t k, const BlipTemplate& tpl, int depth) {
  if (k >= chain.faces.size()) throw DegenerateInput("face index out of range");
  const std::size_t which[1] = {k};
  return detail::apply_blips(chain, which, tpl, depth);
}

/// The flat segment Q(1) = [−1/2, 1/2] × {0} as a single face.
inline BoundaryChain flat_chain() {
  BoundaryChain c;
  c.vertices = {{-0.5, 0.0}, {0.5, 0.0}};
  c.faces = {{0, 1, 1}};
  c.edge_set_measure = 2.0;
  return c;
}

/// Generation-m approximant: every face of generation k is blipped to
/// produce generation k+1.
inline BoundaryChain generate_snowflake(const BlipTemplate& tpl, int m, int depth = 1) {
  if (m < 0) throw DegenerateInput("generation must be >= 0");
  BoundaryChain c = flat_chain();
  for (int g = 0; g < m; ++g) {
    std::vector<std::size_t> all(c.faces.size());
    for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
    BoundaryChain next = detail::apply_blips(c, all, tpl, depth);
    next.generation = g + 1;
    c = std::move(next);
  }
  return c;
}

struct FlatnessReport {
  Vec2 center;
  double radius = 0.0;
  double delta = 0.0;
  /// Best line through the center: unit direction.
  Vec2 direction{1.0, 0.0};
};

/// Symmetric Hausdorff distance between finite point sets.
inline double hausdorff_distance(std::span<const Vec2> A, std::span<const Vec2> B) {
  if (A.empty() || B.empty()) throw EmptySet("Hausdorff distance of an empty set");
  auto directed = [](std::span<const Vec2> from, std::span<const Vec2> to) {
    Vec2 lo = to[0], hi = to[0];
    for (const auto& p : to) {
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
    const double span = std::max(hi.x - lo.x, hi.y - lo.y);
    std::vector<SegmentGrid::Segment> pts;
    pts.reserve(to.size());
    for (const auto& p : to) pts.push_back({p, p});
    const SegmentGrid grid(std::move(pts), span > 0.0 ? span / std::sqrt(static_cast<double>(to.size())) : 1.0);
    double worst = 0.0;
    for (const auto& p : from) worst = std::max(worst, grid.distance(p));
    return worst;
  };
  return std::max(directed(A, B), directed(B, A));
}

namespace detail {

/// Flatness objective for the line through w with unit direction dir.
class FlatnessObjective {
 public:
  FlatnessObjective(std::vector<std::pair<Vec2, Vec2>> pieces, const Vec2& w, double r, int samples)
      : pieces_(std::move(pieces)), w_(w), r_(r), samples_(samples) {
    std::vector<SegmentGrid::Segment> segs;
    for (const auto& [a, b] : pieces_) segs.push_back({a, b});
    grid_ = SegmentGrid(std::move(segs), r / 16.0);
  }

  double operator()(double theta) const {
    const Vec2 dir{std::cos(theta), std::sin(theta)};
    const Vec2 nrm = perp(dir);
    double d1 = 0.0;
    for (const auto& [a, b] : pieces_) d1 = std::max({d1, std::abs(dot(a - w_, nrm)), std::abs(dot(b - w_, nrm))});
    // line to patch: dense samples, then local refinement of the worst one
    double d2 = 0.0;
    double s_best = 0.0;
    for (int k = 0; k <= samples_; ++k) {
      const double s = -r_ + 2.0 * r_ * k / samples_;
      const double d = grid_.distance(w_ + dir * s);
      if (d > d2) {
        d2 = d;
        s_best = s;
      }
    }
    double lo = std::max(-r_, s_best - 2.0 * r_ / samples_);
    double hi = std::min(r_, s_best + 2.0 * r_ / samples_);
    for (int it = 0; it < 40; ++it) {
      const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
      if (grid_.distance(w_ + dir * m1) < grid_.distance(w_ + dir * m2))
        lo = m1;
      else
        hi = m2;
    }
    d2 = std::max(d2, grid_.distance(w_ + dir * (0.5 * (lo + hi))));
    return std::max(d1, d2) / r_;
  }

 private:
  std::vector<std::pair<Vec2, Vec2>> pieces_;
  Vec2 w_;
  double r_;
  int samples_;
  SegmentGrid grid_;
};

}  // namespace detail

/// Smallest normalized Hausdorff distance between the patch Δ(w, r) and a
/// line through w, over n_angles uniform directions plus the principal axis,
/// refined by golden-section search to 1e−4 rad.
inline FlatnessReport reifenberg_delta(const ChainIndex& chain, const Vec2& w, double r, int n_angles = 64) {
  if (!(r > 0.0)) throw DegenerateInput("radius must be positive");
  if (n_angles < 16) throw DegenerateInput("n_angles must be >= 16");
  auto pieces = chain.clip(w, r);
  double total = 0.0;
  for (const auto& [a, b] : pieces) total += distance(a, b);
  if (pieces.empty() || !(total > 0.0)) throw EmptyPatch("fewer than two boundary points in the ball");

  // second moment of the patch about w
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [a, b] : pieces) {
    const double len = distance(a, b);
    const Vec2 u = a - w, v = b - w;
    sxx += len * (u.x * u.x + u.x * v.x + v.x * v.x) / 3.0;
    syy += len * (u.y * u.y + u.y * v.y + v.y * v.y) / 3.0;
    sxy += len * (2 * u.x * u.y + u.x * v.y + v.x * u.y + 2 * v.x * v.y) / 6.0;
  }
  const double seed = 0.5 * std::atan2(2.0 * sxy, sxx - syy);

  const detail::FlatnessObjective f(std::move(pieces), w, r, 512);
  double best_theta = seed;
  double best = f(seed);
  for (int k = 0; k < n_angles; ++k) {
    const double th = std::numbers::pi * k / n_angles;
    const double v = f(th);
    if (v < best) {
      best = v;
      best_theta = th;
    }
  }
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = best_theta - std::numbers::pi / n_angles;
  double hi = best_theta + std::numbers::pi / n_angles;
  double x1 = hi - invphi * (hi - lo), x2 = lo + invphi * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  while (hi - lo > 1e-4) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - invphi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + invphi * (hi - lo);
      f2 = f(x2);
    }
  }
  for (const auto& [th, v] : {std::pair{x1, f1}, std::pair{x2, f2}})
    if (v < best) {
      best = v;
      best_theta = th;
    }
  return {w, r, best, {std::cos(best_theta), std::sin(best_theta)}};
}

inline FlatnessReport reifenberg_delta(const BoundaryChain& chain, const Vec2& w, double r, int n_angles = 64) {
  return reifenberg_delta(ChainIndex(chain), w, r, n_angles);
}

/// H¹(Δ(x, r)) / r.
inline double adr_ratio(const ChainIndex& chain, const Vec2& x, double r) {
  if (!(r > 0.0)) throw DegenerateInput("radius must be positive");
  return chain.length_in_disc(x, r) / r;
}

inline double adr_ratio(const BoundaryChain& chain, const Vec2& x, double r) { return adr_ratio(ChainIndex(chain), x, r); }

/// Interior point a with r/M < |a − w| < r and dist(a, chain) > r/M, chosen
/// to maximize the distance to the chain over a 32 × 32 polar grid refined
/// once around the best node. The search is confined to |a − w| ≤ reach·r.
inline Vec2 corkscrew_point(const ChainIndex& chain, const Vec2& w, double r, double M, double reach = 1.0) {
  if (!(M > 1.0)) throw DegenerateInput("M must exceed 1");
  if (!(reach > 1.0 / M && reach <= 1.0)) throw DegenerateInput("reach must lie in (1/M, 1]");
  constexpr int kGrid = 32;
  auto score = [&](const Vec2& a) {
    const double d = distance(a, w);
    if (!(d > r / M && d < r && d <= reach * r)) return -1.0;
    if (!chain.inside(a)) return -1.0;
    return chain.distance(a);
  };
  double best = -1.0;
  double best_rho = 0.0, best_th = 0.0;
  for (int i = 0; i < kGrid; ++i) {
    const double rho = reach * r * (i + 0.5) / kGrid;
    for (int j = 0; j < kGrid; ++j) {
      const double th = 2.0 * std::numbers::pi * j / kGrid;
      const double s = score(w + Vec2{std::cos(th), std::sin(th)} * rho);
      if (s > best) {
        best = s;
        best_rho = rho;
        best_th = th;
      }
    }
  }
  if (best > 0.0) {
    const double drho = reach * r / kGrid, dth = 2.0 * std::numbers::pi / kGrid;
    const double rho0 = best_rho, th0 = best_th;
    for (int i = 0; i < kGrid; ++i) {
      const double rho = rho0 + drho * ((i + 0.5) / kGrid - 0.5);
      for (int j = 0; j < kGrid; ++j) {
        const double th = th0 + dth * ((j + 0.5) / kGrid - 0.5);
        const double s = score(w + Vec2{std::cos(th), std::sin(th)} * rho);
        if (s > best) {
          best = s;
          best_rho = rho;
          best_th = th;
        }
      }
    }
  }
  const Vec2 a = w + Vec2{std::cos(best_th), std::sin(best_th)} * best_rho;
  if (!(best > r / M)) throw NoCorkscrew("no interior point at distance > r/M from the boundary");
  return a;
}

inline Vec2 corkscrew_point(const BoundaryChain& chain, const Vec2& w, double r, double M, double reach = 1.0) {
  return corkscrew_point(ChainIndex(chain), w, r, M, reach);
}

}  // namespace wolff_lab

#endif  // WOLFF_LAB_GEOMETRY_HPP
