#ifndef WOLFF_LAB_MESH_HPP
#define WOLFF_LAB_MESH_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "wolff_lab/delaunay.hpp"
#include "wolff_lab/errors.hpp"
#include "wolff_lab/planar.hpp"
#include "wolff_lab/spatial.hpp"

namespace wolff_lab {

enum class BoundaryMarker { graph, artificial_top, artificial_side };

inline const char* to_string(BoundaryMarker m) {
  switch (m) {
    case BoundaryMarker::graph: return "graph";
    case BoundaryMarker::artificial_top: return "artificial_top";
    case BoundaryMarker::artificial_side: return "artificial_side";
  }
  return "graph";
}

inline BoundaryMarker marker_from_string(const std::string& s) {
  if (s == "graph") return BoundaryMarker::graph;
  if (s == "artificial_top") return BoundaryMarker::artificial_top;
  if (s == "artificial_side") return BoundaryMarker::artificial_side;
  throw DegenerateInput("unknown boundary marker '" + s + "'");
}

/// Closed polygonal domain, possibly with holes. Edge i of a loop joins
/// vertex i to vertex i+1 (cyclically) and carries markers[loop][i].
struct PolygonDomain {
  std::vector<std::vector<Vec2>> loops;
  std::vector<std::vector<BoundaryMarker>> markers;

  void add_loop(std::vector<Vec2> pts, std::vector<BoundaryMarker> m) {
    loops.push_back(std::move(pts));
    markers.push_back(std::move(m));
  }
  void add_loop(std::vector<Vec2> pts, BoundaryMarker m) {
    const std::size_t n = pts.size();
    add_loop(std::move(pts), std::vector<BoundaryMarker>(n, m));
  }
  double area() const {
    double a = 0.0;
    for (const auto& l : loops) a += std::abs(signed_area(l)) * (&l == &loops.front() ? 1.0 : -1.0);
    return a;
  }
  bool contains(const Vec2& p) const { return point_in_loops(p, loops); }
};

struct BoundaryEdge {
  int v0 = 0;
  int v1 = 0;
  BoundaryMarker marker = BoundaryMarker::graph;
};

/// Conforming triangulation; triangles are counter-clockwise and boundary
/// edges keep the domain on their left.
struct TriMesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<BoundaryEdge> boundary_edges;
  double h_max = 0.0;

  double triangle_area(std::size_t t) const {
    const auto& tr = triangles[t];
    return 0.5 * orient(vertices[tr[0]], vertices[tr[1]], vertices[tr[2]]);
  }
  double total_area() const {
    double s = 0.0;
    for (std::size_t t = 0; t < triangles.size(); ++t) s += triangle_area(t);
    return s;
  }
  double min_angle_degrees() const {
    double m = 180.0;
    for (const auto& tr : triangles)
      m = std::min(m, min_angle(vertices[tr[0]], vertices[tr[1]], vertices[tr[2]]) * 180.0 / std::numbers::pi);
    return m;
  }
  /// Per-vertex flag: lies on some boundary edge.
  std::vector<char> boundary_flags() const {
    std::vector<char> f(vertices.size(), 0);
    for (const auto& e : boundary_edges) f[e.v0] = f[e.v1] = 1;
    return f;
  }
  /// Per-vertex flag: lies on a boundary edge with the given marker.
  std::vector<char> marker_flags(BoundaryMarker m) const {
    std::vector<char> f(vertices.size(), 0);
    for (const auto& e : boundary_edges)
      if (e.marker == m) f[e.v0] = f[e.v1] = 1;
    return f;
  }
};

/// Bucket grid over triangle bounding boxes for point location.
class TriangleLocator {
 public:
  struct Hit {
    int tri = -1;
    std::array<double, 3> bary{};
  };

  explicit TriangleLocator(const TriMesh& mesh) : mesh_(&mesh) {
    const std::size_t nt = mesh.triangles.size();
    if (nt == 0) return;
    lo_ = hi_ = mesh.vertices[mesh.triangles[0][0]];
    for (const auto& v : mesh.vertices) {
      lo_ = {std::min(lo_.x, v.x), std::min(lo_.y, v.y)};
      hi_ = {std::max(hi_.x, v.x), std::max(hi_.y, v.y)};
    }
    const double area = std::max((hi_.x - lo_.x) * (hi_.y - lo_.y), 1e-300);
    cell_ = std::max(std::sqrt(area / static_cast<double>(nt)) * 2.0, 1e-300);
    nx_ = std::max<std::int64_t>(1, static_cast<std::int64_t>((hi_.x - lo_.x) / cell_) + 1);
    ny_ = std::max<std::int64_t>(1, static_cast<std::int64_t>((hi_.y - lo_.y) / cell_) + 1);
    start_.assign(static_cast<std::size_t>(nx_ * ny_) + 1, 0);
    auto range = [&](std::size_t t) {
      const auto& tr = mesh.triangles[t];
      Vec2 a = mesh.vertices[tr[0]], b = a;
      for (int k = 1; k < 3; ++k) {
        const Vec2& v = mesh.vertices[tr[k]];
        a = {std::min(a.x, v.x), std::min(a.y, v.y)};
        b = {std::max(b.x, v.x), std::max(b.y, v.y)};
      }
      return std::array<std::int64_t, 4>{cx(a.x), cy(a.y), cx(b.x), cy(b.y)};
    };
    for (std::size_t t = 0; t < nt; ++t) {
      const auto r = range(t);
      for (auto j = r[1]; j <= r[3]; ++j)
        for (auto i = r[0]; i <= r[2]; ++i) ++start_[static_cast<std::size_t>(j * nx_ + i) + 1];
    }
    for (std::size_t k = 1; k < start_.size(); ++k) start_[k] += start_[k - 1];
    items_.resize(start_.back());
    std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t t = 0; t < nt; ++t) {
      const auto r = range(t);
      for (auto j = r[1]; j <= r[3]; ++j)
        for (auto i = r[0]; i <= r[2]; ++i) items_[fill[static_cast<std::size_t>(j * nx_ + i)]++] = static_cast<int>(t);
    }
  }

  /// Triangle containing p (closed, with a relative tolerance) and its
  /// barycentric coordinates.
  std::optional<Hit> locate(const Vec2& p) const {
    if (items_.empty() || p.x < lo_.x - cell_ || p.x > hi_.x + cell_ || p.y < lo_.y - cell_ || p.y > hi_.y + cell_)
      return std::nullopt;
    const std::size_t cell = static_cast<std::size_t>(cy(p.y) * nx_ + cx(p.x));
    Hit best;
    double best_min = -std::numeric_limits<double>::infinity();
    for (std::size_t k = start_[cell]; k < start_[cell + 1]; ++k) {
      const int t = items_[k];
      const auto& tr = mesh_->triangles[t];
      const Vec2 &a = mesh_->vertices[tr[0]], &b = mesh_->vertices[tr[1]], &c = mesh_->vertices[tr[2]];
      const double area2 = orient(a, b, c);
      const std::array<double, 3> l{orient(p, b, c) / area2, orient(a, p, c) / area2, orient(a, b, p) / area2};
      const double m = std::min({l[0], l[1], l[2]});
      if (m > best_min) {
        best_min = m;
        best = {t, l};
      }
      if (m >= 0.0) return best;
    }
    if (best.tri >= 0 && best_min > -1e-10) return best;
    return std::nullopt;
  }

 private:
  std::int64_t cx(double x) const {
    return std::clamp<std::int64_t>(static_cast<std::int64_t>((x - lo_.x) / cell_), 0, nx_ - 1);
  }
  std::int64_t cy(double y) const {
    return std::clamp<std::int64_t>(static_cast<std::int64_t>((y - lo_.y) / cell_), 0, ny_ - 1);
  }

  const TriMesh* mesh_;
  Vec2 lo_{}, hi_{};
  double cell_ = 1.0;
  std::int64_t nx_ = 1, ny_ = 1;
  std::vector<std::size_t> start_;
  std::vector<int> items_;
};

/// Result of the structural checks a valid mesh must pass.
struct MeshCheck {
  bool positive_orientation = true;
  bool edge_manifold = true;
  bool boundary_consistent = true;
  std::string detail;
  bool ok() const { return positive_orientation && edge_manifold && boundary_consistent; }
};

/// Orientation, edge-manifoldness and agreement of the boundary edge list
/// with the edges used by exactly one triangle.
inline MeshCheck check_mesh(const TriMesh& m) {
  MeshCheck c;
  std::unordered_map<std::uint64_t, int> count;
  count.reserve(m.triangles.size() * 3);
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto& tr = m.triangles[t];
    if (!(m.triangle_area(t) > 0.0)) {
      c.positive_orientation = false;
      c.detail += "non-positive triangle " + std::to_string(t) + "; ";
    }
    for (int i = 0; i < 3; ++i) ++count[detail::edge_key(tr[i], tr[(i + 1) % 3])];
  }
  std::unordered_set<std::uint64_t> bset;
  for (const auto& e : m.boundary_edges) bset.insert(detail::edge_key(e.v0, e.v1));
  for (const auto& [k, n] : count) {
    if (n > 2) {
      c.edge_manifold = false;
      c.detail += "edge used " + std::to_string(n) + " times; ";
    }
    if (n == 1 && !bset.count(k)) {
      c.boundary_consistent = false;
      c.detail += "unmarked boundary edge; ";
    }
    if (n == 2 && bset.count(k)) {
      c.boundary_consistent = false;
      c.detail += "marked interior edge; ";
    }
  }
  for (const auto k : bset)
    if (!count.count(k)) {
      c.boundary_consistent = false;
      c.detail += "boundary edge missing from triangles; ";
    }
  return c;
}

struct MeshOptions {
  double min_angle_deg = 20.0;
  /// How fast the target size grows with distance from the graph boundary.
  double size_gradient = 0.25;
  std::size_t max_vertices = 4'000'000;
};

namespace detail {

class Mesher {
 public:
  Mesher(const PolygonDomain& dom, double h_max, double grading, const MeshOptions& opt)
      : dom_(dom), h_max_(h_max), h_graph_(h_max / grading), opt_(opt), dt_(bbox_lo(dom), bbox_hi(dom)) {
    std::vector<SegmentGrid::Segment> graph;
    for (std::size_t l = 0; l < dom.loops.size(); ++l) {
      const auto& L = dom.loops[l];
      for (std::size_t i = 0; i < L.size(); ++i)
        if (dom.markers[l][i] == BoundaryMarker::graph) graph.push_back({L[i], L[(i + 1) % L.size()]});
    }
    graph_grid_ = SegmentGrid(std::move(graph), std::max(h_graph_, 1e-9) * 4.0);
    sin_min_ = std::sin(opt_.min_angle_deg * std::numbers::pi / 180.0);
  }

  TriMesh run() {
    insert_boundary();
    recover_segments();
    flood_regions();
    refine_quality();
    return extract();
  }

 private:
  struct SubSeg {
    BoundaryMarker marker;
  };

  static Vec2 bbox_lo(const PolygonDomain& d) {
    Vec2 lo{1e300, 1e300};
    for (const auto& l : d.loops)
      for (const auto& p : l) lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    return lo;
  }
  static Vec2 bbox_hi(const PolygonDomain& d) {
    Vec2 hi{-1e300, -1e300};
    for (const auto& l : d.loops)
      for (const auto& p : l) hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    return hi;
  }

  double size_at(const Vec2& p) const {
    if (graph_grid_.empty()) return h_max_;
    const double cap = (h_max_ - h_graph_) / opt_.size_gradient;
    const double d = graph_grid_.distance(p, cap);
    return std::min(h_max_, h_graph_ + opt_.size_gradient * d);
  }

  int add_point(const Vec2& p, int hint) {
    dt_.cavity(p, hint, cav_, mark_, epoch_);
    if (cav_.duplicate) return cav_.duplicate_of;
    return commit(p);
  }

  /// Inserts p using the cavity already stored in cav_.
  int commit(const Vec2& p) {
    if (dt_.num_points() >= opt_.max_vertices)
      throw DegenerateInput("mesh vertex budget exhausted (" + std::to_string(opt_.max_vertices) + ")");
    // region inheritance, taken before the cavity triangles are recycled
    owner_region_.clear();
    for (const auto& e : cav_.boundary) owner_region_.push_back(dt_.tris()[e.owner].region);
    for (const auto& [a, b] : cav_.interior_edges) {
      if (subsegs_.count(edge_key(a, b))) {
        seg_queue_.emplace_back(a, b);
        lost_segment_ = true;
      }
    }
    const int v = dt_.insert(p, cav_, fan_);
    auto& tris = dt_.tris();
    for (std::size_t i = 0; i < fan_.size(); ++i) {
      tris[fan_[i]].region = owner_region_[i];
      const auto& e = cav_.boundary[i];
      if (subsegs_.count(edge_key(e.a, e.b))) seg_queue_.emplace_back(e.a, e.b);
      if (tris[fan_[i]].region > 0) tri_queue_.push_back({fan_[i], tris[fan_[i]].v});
    }
    is_input_.push_back(0);
    return v;
  }

  bool encroached(int a, int b) const {
    const auto [t, opp] = dt_.find_edge(a, b);
    if (t < 0) return true;
    const auto& pts = dt_.points();
    auto inside_diametral = [&](int v) {
      if (v < Delaunay::kSuper) return false;
      return dot(pts[a] - pts[v], pts[b] - pts[v]) < 0.0;
    };
    const auto& tr = dt_.tris()[t];
    if (inside_diametral(tr.v[opp])) return true;
    const int n = tr.nbr[opp];
    if (n >= 0) {
      const auto& tn = dt_.tris()[n];
      for (int k = 0; k < 3; ++k)
        if (tn.v[k] != a && tn.v[k] != b && inside_diametral(tn.v[k])) return true;
    }
    return false;
  }

  /// Split point for a subsegment; concentric shells around input vertices
  /// keep small input angles from cascading.
  Vec2 split_point(int a, int b) const {
    const auto& pts = dt_.points();
    const bool ia = is_input_[a] != 0;
    const bool ib = is_input_[b] != 0;
    if (ia == ib) return (pts[a] + pts[b]) * 0.5;
    const int o = ia ? a : b;
    const int f = ia ? b : a;
    const double len = distance(pts[a], pts[b]);
    const double shell = std::exp2(std::round(std::log2(0.5 * len)));
    double t = shell / len;
    if (t < 0.25 || t > 0.75) t = 0.5;
    return pts[o] + (pts[f] - pts[o]) * t;
  }

  void split_subsegment(int a, int b) {
    const auto it = subsegs_.find(edge_key(a, b));
    if (it == subsegs_.end()) return;
    const BoundaryMarker m = it->second.marker;
    const Vec2 p = split_point(a, b);
    const auto [t, opp] = dt_.find_edge(a, b);
    dt_.cavity(p, t >= 0 ? t : dt_.any_tri_of(a), cav_, mark_, epoch_);
    if (cav_.duplicate) return;
    subsegs_.erase(it);
    const int v = static_cast<int>(dt_.num_points());
    subsegs_[edge_key(a, v)] = {m};
    subsegs_[edge_key(v, b)] = {m};
    seg_queue_.emplace_back(a, v);
    seg_queue_.emplace_back(v, b);
    commit(p);
  }

  void insert_boundary() {
    const double hmin_guard = 1e-12;
    for (std::size_t l = 0; l < dom_.loops.size(); ++l) {
      const auto& L = dom_.loops[l];
      if (L.size() < 3) throw DegenerateInput("loop with fewer than 3 vertices");
      if (std::abs(signed_area(L)) <= 0.0) throw DegenerateInput("zero-area loop");
      for (std::size_t i = 0; i < L.size(); ++i)
        if (distance(L[i], L[(i + 1) % L.size()]) <= hmin_guard * (1.0 + norm(L[i])))
          throw DegenerateInput("repeated vertex in loop " + std::to_string(l));
    }
    // input vertices first, in a spatially coherent order
    struct Pending {
      Vec2 p;
      int loop;
      std::size_t idx;
    };
    std::vector<Pending> order;
    for (std::size_t l = 0; l < dom_.loops.size(); ++l)
      for (std::size_t i = 0; i < dom_.loops[l].size(); ++i) order.push_back({dom_.loops[l][i], int(l), i});
    std::vector<std::vector<int>> ids(dom_.loops.size());
    for (std::size_t l = 0; l < dom_.loops.size(); ++l) ids[l].assign(dom_.loops[l].size(), -1);
    is_input_.assign(Delaunay::kSuper, 0);
    int hint = 0;
    for (const auto& o : order) {
      const int v = add_point(o.p, hint);
      if (v < static_cast<int>(is_input_.size())) is_input_[v] = 1;
      ids[o.loop][o.idx] = v;
      hint = dt_.any_tri_of(v);
    }
    // loop edges, bisected until they meet the local size target
    for (std::size_t l = 0; l < dom_.loops.size(); ++l) {
      const auto& L = dom_.loops[l];
      for (std::size_t i = 0; i < L.size(); ++i) {
        const int a = ids[l][i];
        const int b = ids[l][(i + 1) % L.size()];
        if (a == b) throw DegenerateInput("repeated vertex in loop " + std::to_string(l));
        subdivide(a, b, dom_.markers[l][i]);
      }
    }
    tri_queue_.clear();
  }

  void subdivide(int a, int b, BoundaryMarker m) {
    std::vector<std::pair<int, int>> stack{{a, b}};
    while (!stack.empty()) {
      const auto [u, w] = stack.back();
      stack.pop_back();
      const Vec2 pu = dt_.points()[u];
      const Vec2 pw = dt_.points()[w];
      const Vec2 mid = (pu + pw) * 0.5;
      const double target = (m == BoundaryMarker::graph) ? h_graph_ : size_at(mid);
      if (distance(pu, pw) <= target) {
        subsegs_[edge_key(u, w)] = {m};
        seg_queue_.emplace_back(u, w);
        continue;
      }
      const int v = add_point(mid, dt_.any_tri_of(u));
      stack.push_back({v, w});
      stack.push_back({u, v});
    }
  }

  void recover_segments() {
    while (!seg_queue_.empty()) {
      const auto [a, b] = seg_queue_.front();
      seg_queue_.pop_front();
      if (!subsegs_.count(edge_key(a, b))) continue;
      if (encroached(a, b)) split_subsegment(a, b);
    }
    lost_segment_ = false;
  }

  void flood_regions() {
    auto& tris = dt_.tris();
    for (auto& t : tris) t.region = 0;
    std::vector<int> stack;
    for (std::size_t i = 0; i < tris.size(); ++i) {
      if (!tris[i].alive) continue;
      const auto& v = tris[i].v;
      if (v[0] < Delaunay::kSuper || v[1] < Delaunay::kSuper || v[2] < Delaunay::kSuper) {
        tris[i].region = -1;
        stack.push_back(static_cast<int>(i));
      }
    }
    while (!stack.empty()) {
      const int t = stack.back();
      stack.pop_back();
      for (int i = 0; i < 3; ++i) {
        const int n = tris[t].nbr[i];
        if (n < 0 || tris[n].region != 0) continue;
        const int a = tris[t].v[(i + 1) % 3];
        const int b = tris[t].v[(i + 2) % 3];
        const bool wall = subsegs_.count(edge_key(a, b)) > 0;
        tris[n].region = wall ? static_cast<signed char>(-tris[t].region) : tris[t].region;
        stack.push_back(n);
      }
    }
    tri_queue_.clear();
    for (std::size_t i = 0; i < tris.size(); ++i)
      if (tris[i].alive && tris[i].region > 0) tri_queue_.push_back({static_cast<int>(i), tris[i].v});
  }

  bool is_bad(const std::array<int, 3>& v) const {
    const auto& p = dt_.points();
    const Vec2 &a = p[v[0]], &b = p[v[1]], &c = p[v[2]];
    const double la = distance(b, c), lb = distance(c, a), lc = distance(a, b);
    const double area2 = std::abs(orient(a, b, c));
    const double R = la * lb * lc / (2.0 * area2);
    const double lmin = std::min({la, lb, lc});
    if (R > lmin / (2.0 * sin_min_) * (1.0 + 1e-12)) return true;
    return std::max({la, lb, lc}) > size_at((a + b + c) / 3.0);
  }

  void refine_quality() {
    while (!tri_queue_.empty()) {
      const auto item = tri_queue_.front();
      tri_queue_.pop_front();
      const auto& t = dt_.tris()[item.id];
      if (!t.alive || t.v != item.v || t.region <= 0) continue;
      if (!is_bad(t.v)) continue;
      const auto& p = dt_.points();
      const Vec2 cc = circumcenter(p[t.v[0]], p[t.v[1]], p[t.v[2]]);
      dt_.cavity(cc, item.id, cav_, mark_, epoch_);
      if (cav_.duplicate) continue;
      // reject circumcenters that would encroach a subsegment or leave the domain
      std::vector<std::pair<int, int>> hit;
      bool outside = false;
      for (int ct : cav_.tris) {
        const auto& tr = dt_.tris()[ct];
        if (tr.region <= 0) outside = true;
        for (int i = 0; i < 3; ++i) {
          const int a = tr.v[(i + 1) % 3], b = tr.v[(i + 2) % 3];
          if (!subsegs_.count(edge_key(a, b))) continue;
          if (dot(p[a] - cc, p[b] - cc) < 0.0) hit.emplace_back(a, b);
        }
      }
      if (hit.empty() && !outside) {
        commit(cc);
        continue;
      }
      if (hit.empty()) {
        // circumcenter beyond a wall without encroaching it: split the walls met
        for (int ct : cav_.tris) {
          const auto& tr = dt_.tris()[ct];
          for (int i = 0; i < 3; ++i) {
            const int a = tr.v[(i + 1) % 3], b = tr.v[(i + 2) % 3];
            if (subsegs_.count(edge_key(a, b))) hit.emplace_back(a, b);
          }
        }
        if (hit.empty()) continue;
      }
      for (const auto& [a, b] : hit) split_subsegment(a, b);
      while (!seg_queue_.empty()) {
        const auto [a, b] = seg_queue_.front();
        seg_queue_.pop_front();
        if (!subsegs_.count(edge_key(a, b))) continue;
        if (encroached(a, b)) split_subsegment(a, b);
      }
      if (lost_segment_) {
        lost_segment_ = false;
        flood_regions();
      }
      tri_queue_.push_back(item);
    }
  }

  TriMesh extract() const {
    TriMesh m;
    m.h_max = h_max_;
    const auto& tris = dt_.tris();
    const auto& pts = dt_.points();
    std::vector<int> remap(pts.size(), -1);
    for (const auto& t : tris) {
      if (!t.alive || t.region <= 0) continue;
      std::array<int, 3> out{};
      for (int k = 0; k < 3; ++k) {
        int& r = remap[t.v[k]];
        if (r < 0) {
          r = static_cast<int>(m.vertices.size());
          m.vertices.push_back(pts[t.v[k]]);
        }
        out[k] = r;
      }
      m.triangles.push_back(out);
    }
    for (const auto& [key, s] : subsegs_) {
      const int a = static_cast<int>(key >> 32);
      const int b = static_cast<int>(key & 0xffffffffULL);
      const auto [t, opp] = dt_.find_edge(a, b);
      if (t < 0) throw DegenerateInput("boundary subsegment lost during meshing");
      // choose the inside triangle and orient the edge counter-clockwise in it
      int tin = t;
      int oin = opp;
      if (tris[t].region <= 0) {
        const int n = tris[t].nbr[opp];
        if (n < 0) continue;
        tin = n;
        oin = 0;
        while (tris[n].v[oin] == a || tris[n].v[oin] == b) ++oin;
      }
      if (tris[tin].region <= 0) continue;
      const int u = tris[tin].v[(oin + 1) % 3];
      const int w = tris[tin].v[(oin + 2) % 3];
      m.boundary_edges.push_back({remap[u], remap[w], s.marker});
    }
    std::sort(m.boundary_edges.begin(), m.boundary_edges.end(), [](const auto& x, const auto& y) {
      return std::pair(x.v0, x.v1) < std::pair(y.v0, y.v1);
    });
    return m;
  }

  struct QueuedTri {
    int id;
    std::array<int, 3> v;
  };

  const PolygonDomain& dom_;
  double h_max_;
  double h_graph_;
  MeshOptions opt_;
  double sin_min_ = 0.0;
  Delaunay dt_;
  SegmentGrid graph_grid_;
  std::unordered_map<std::uint64_t, SubSeg> subsegs_;
  std::deque<std::pair<int, int>> seg_queue_;
  std::deque<QueuedTri> tri_queue_;
  std::vector<char> is_input_;
  bool lost_segment_ = false;
  Delaunay::Cavity cav_;
  std::vector<int> fan_;
  std::vector<signed char> owner_region_;
  std::vector<int> mark_;
  int epoch_ = 0;
};

}  // namespace detail

/// Conforming Delaunay triangulation with Ruppert-style quality refinement.
/// Graph-marked boundary edges end up no longer than h_max / grading; the
/// target size grows linearly with distance from the graph portion and is
/// capped at h_max.
inline TriMesh triangulate(const PolygonDomain& domain, double h_max, double grading = 1.0,
                           const MeshOptions& options = {}) {
  if (!(h_max > 0.0)) throw DegenerateInput("h_max must be positive");
  if (!(grading >= 1.0)) throw DegenerateInput("grading must be >= 1");
  if (domain.loops.empty()) throw DegenerateInput("empty domain");
  for (std::size_t l = 0; l < domain.loops.size(); ++l)
    if (domain.markers.size() <= l || domain.markers[l].size() != domain.loops[l].size())
      throw DegenerateInput("marker count does not match loop size");
  detail::Mesher mesher(domain, h_max, grading, options);
  return mesher.run();
}

/// Red refinement of the marked triangles, closed by red/green refinement of
/// their neighbours so the result stays conforming. Existing vertices keep
/// their indices.
inline TriMesh refine(const TriMesh& mesh, const std::vector<int>& marked) {
  TriMesh out = mesh;
  if (marked.empty()) return out;
  const std::size_t nt = mesh.triangles.size();
  std::unordered_set<std::uint64_t> split_edges;
  std::vector<char> red(nt, 0);
  for (int t : marked) {
    if (t < 0 || static_cast<std::size_t>(t) >= nt) throw DegenerateInput("marked triangle out of range");
    red[t] = 1;
  }
  auto edges_of = [&](std::size_t t) {
    const auto& tr = mesh.triangles[t];
    return std::array<std::uint64_t, 3>{detail::edge_key(tr[1], tr[2]), detail::edge_key(tr[2], tr[0]),
                                        detail::edge_key(tr[0], tr[1])};
  };
  // closure: a triangle with two or more split edges becomes red
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t t = 0; t < nt; ++t) {
      const auto e = edges_of(t);
      if (red[t]) {
        for (auto k : e) changed |= split_edges.insert(k).second;
        continue;
      }
      int n = 0;
      for (auto k : e) n += split_edges.count(k) ? 1 : 0;
      if (n >= 2) {
        red[t] = 1;
        changed = true;
      }
    }
  }
  std::unordered_map<std::uint64_t, int> mid;
  auto midpoint = [&](int a, int b) {
    const auto k = detail::edge_key(a, b);
    auto it = mid.find(k);
    if (it != mid.end()) return it->second;
    const int v = static_cast<int>(out.vertices.size());
    out.vertices.push_back((mesh.vertices[a] + mesh.vertices[b]) * 0.5);
    mid[k] = v;
    return v;
  };
  out.triangles.clear();
  for (std::size_t t = 0; t < nt; ++t) {
    const auto& tr = mesh.triangles[t];
    if (red[t]) {
      const int m0 = midpoint(tr[1], tr[2]);
      const int m1 = midpoint(tr[2], tr[0]);
      const int m2 = midpoint(tr[0], tr[1]);
      out.triangles.push_back({tr[0], m2, m1});
      out.triangles.push_back({m2, tr[1], m0});
      out.triangles.push_back({m1, m0, tr[2]});
      out.triangles.push_back({m0, m1, m2});
      continue;
    }
    const auto e = edges_of(t);
    int k = -1;
    for (int i = 0; i < 3; ++i)
      if (split_edges.count(e[i])) k = i;
    if (k < 0) {
      out.triangles.push_back(tr);
      continue;
    }
    // green: bisect from the vertex opposite the split edge
    const int a = tr[k], b = tr[(k + 1) % 3], c = tr[(k + 2) % 3];
    const int m = midpoint(b, c);
    out.triangles.push_back({a, b, m});
    out.triangles.push_back({a, m, c});
  }
  out.boundary_edges.clear();
  for (const auto& e : mesh.boundary_edges) {
    const auto k = detail::edge_key(e.v0, e.v1);
    if (split_edges.count(k)) {
      const int m = mid.at(k);
      out.boundary_edges.push_back({e.v0, m, e.marker});
      out.boundary_edges.push_back({m, e.v1, e.marker});
    } else {
      out.boundary_edges.push_back(e);
    }
  }
  return out;
}

/// Uniform red refinement of every triangle.
inline TriMesh refine_uniform(const TriMesh& mesh) {
  std::vector<int> all(mesh.triangles.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return refine(mesh, all);
}

}  // namespace wolff_lab

#endif  // WOLFF_LAB_MESH_HPP
