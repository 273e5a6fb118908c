#ifndef WOLFF_LAB_MEASURE_HPP
#define WOLFF_LAB_MEASURE_HPP

// Boundary measures of P1 solutions: nodal Riesz weights, edge densities,
// ball masses with exact clipping, and the comparability ratios between the
// measure and the solution at corkscrew points.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "wolff_lab/errors.hpp"
#include "wolff_lab/geometry.hpp"
#include "wolff_lab/mesh.hpp"
#include "wolff_lab/planar.hpp"
#include "wolff_lab/plaplace.hpp"

namespace wolff_lab {

struct Box {
  Vec2 lo, hi;
  bool contains(const Vec2& p) const { return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y; }
};

/// Nonnegative weights on boundary nodes. Each node's weight is spread
/// uniformly over the halves of its incident support edges; a node with no
/// incident edge is an atom.
struct BoundaryMeasure {
  std::vector<Vec2> nodes;
  std::vector<double> weights;
  std::vector<std::array<int, 2>> edges;
  /// Mesh vertex behind each node, or −1.
  std::vector<int> mesh_vertex;
  std::optional<Box> window;
  int clamped = 0;
  double most_negative = 0.0;

  double total_mass() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
};

/// Mass m spread uniformly on the segment ab (an atom when a == b).
struct MassPiece {
  Vec2 a, b;
  double mass = 0.0;
};

inline std::vector<MassPiece> mass_pieces(const BoundaryMeasure& mu) {
  std::vector<double> star(mu.nodes.size(), 0.0);
  for (const auto& e : mu.edges) {
    const double half = 0.5 * distance(mu.nodes[e[0]], mu.nodes[e[1]]);
    star[e[0]] += half;
    star[e[1]] += half;
  }
  std::vector<MassPiece> out;
  out.reserve(2 * mu.edges.size() + mu.nodes.size());
  for (const auto& e : mu.edges) {
    const Vec2 mid = (mu.nodes[e[0]] + mu.nodes[e[1]]) * 0.5;
    const double half = 0.5 * distance(mu.nodes[e[0]], mu.nodes[e[1]]);
    for (int k = 0; k < 2; ++k) {
      const int v = e[k];
      if (star[v] > 0.0 && mu.weights[v] != 0.0) out.push_back({mu.nodes[v], mid, mu.weights[v] * half / star[v]});
    }
  }
  for (std::size_t v = 0; v < mu.nodes.size(); ++v)
    if (star[v] == 0.0 && mu.weights[v] != 0.0) out.push_back({mu.nodes[v], mu.nodes[v], mu.weights[v]});
  return out;
}

/// Ball-mass queries over a bounding-box tree of mass pieces.
class MeasureIndex {
 public:
  explicit MeasureIndex(const BoundaryMeasure& mu) : pieces_(mass_pieces(mu)), total_(mu.total_mass()) {
    if (!pieces_.empty()) build(0, static_cast<int>(pieces_.size()));
  }

  double total_mass() const { return total_; }
  std::span<const MassPiece> pieces() const { return pieces_; }

  /// μ(B(x, r)) with the pieces clipped exactly against the closed disc.
  double mass_in_ball(const Vec2& x, double r) const {
    if (nodes_.empty()) return 0.0;
    double mass = 0.0;
    std::vector<int> stack{0};
    while (!stack.empty()) {
      const Node& n = nodes_[stack.back()];
      stack.pop_back();
      const double dx = std::max({n.lo.x - x.x, 0.0, x.x - n.hi.x});
      const double dy = std::max({n.lo.y - x.y, 0.0, x.y - n.hi.y});
      if (dx * dx + dy * dy > r * r) continue;
      const double fx = std::max(std::abs(n.lo.x - x.x), std::abs(n.hi.x - x.x));
      const double fy = std::max(std::abs(n.lo.y - x.y), std::abs(n.hi.y - x.y));
      if (fx * fx + fy * fy <= r * r) {
        mass += n.mass;
        continue;
      }
      if (n.left < 0) {
        for (int i = n.begin; i < n.end; ++i) mass += clipped_mass(pieces_[i], x, r);
        continue;
      }
      stack.push_back(n.right);
      stack.push_back(n.left);
    }
    return mass;
  }

 private:
  struct Node {
    Vec2 lo, hi;
    double mass = 0.0;
    int begin = 0, end = 0, left = -1, right = -1;
  };
  static constexpr int kLeaf = 8;

  static double clipped_mass(const MassPiece& piece, const Vec2& x, double r) {
    if (piece.a == piece.b) return distance(piece.a, x) <= r ? piece.mass : 0.0;
    const auto iv = clip_segment_to_disc(piece.a, piece.b, x, r);
    return iv ? piece.mass * (iv->second - iv->first) : 0.0;
  }

  int build(int begin, int end) {
    Node n;
    n.begin = begin;
    n.end = end;
    n.lo = {1e300, 1e300};
    n.hi = {-1e300, -1e300};
    for (int i = begin; i < end; ++i) {
      for (const Vec2& p : {pieces_[i].a, pieces_[i].b}) {
        n.lo = {std::min(n.lo.x, p.x), std::min(n.lo.y, p.y)};
        n.hi = {std::max(n.hi.x, p.x), std::max(n.hi.y, p.y)};
      }
      n.mass += pieces_[i].mass;
    }
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(n);
    if (end - begin > kLeaf) {
      const bool split_x = n.hi.x - n.lo.x >= n.hi.y - n.lo.y;
      const int mid = begin + (end - begin) / 2;
      std::nth_element(pieces_.begin() + begin, pieces_.begin() + mid, pieces_.begin() + end,
                       [split_x](const MassPiece& p, const MassPiece& q) {
                         const Vec2 mp = p.a + p.b, mq = q.a + q.b;
                         return split_x ? (mp.x < mq.x || (mp.x == mq.x && mp.y < mq.y))
                                        : (mp.y < mq.y || (mp.y == mq.y && mp.x < mq.x));
                       });
      const int l = build(begin, mid);
      const int r = build(mid, end);
      nodes_[id].left = l;
      nodes_[id].right = r;
    }
    return id;
  }

  std::vector<MassPiece> pieces_;
  std::vector<Node> nodes_;
  double total_ = 0.0;
};

namespace detail {

/// Vertices on graph-marked edges in ascending order, with the node index of
/// every mesh vertex (−1 off the zero set).
inline std::pair<std::vector<int>, std::vector<int>> zero_set_nodes(const TriMesh& mesh) {
  const auto on_graph = mesh.marker_flags(BoundaryMarker::graph);
  std::vector<int> verts, node_of(mesh.vertices.size(), -1);
  for (std::size_t v = 0; v < on_graph.size(); ++v)
    if (on_graph[v]) {
      node_of[v] = static_cast<int>(verts.size());
      verts.push_back(static_cast<int>(v));
    }
  return {verts, node_of};
}

inline BoundaryMeasure measure_skeleton(const TriMesh& mesh) {
  const auto [verts, node_of] = zero_set_nodes(mesh);
  BoundaryMeasure mu;
  mu.mesh_vertex = verts;
  for (int v : verts) mu.nodes.push_back(mesh.vertices[v]);
  mu.weights.assign(verts.size(), 0.0);
  for (const auto& e : mesh.boundary_edges)
    if (e.marker == BoundaryMarker::graph) mu.edges.push_back({node_of[e.v0], node_of[e.v1]});
  return mu;
}

inline void clamp_negative(BoundaryMeasure& mu) {
  for (double& w : mu.weights)
    if (w < 0.0) {
      mu.most_negative = std::min(mu.most_negative, w);
      w = 0.0;
      ++mu.clamped;
    }
}

}  // namespace detail

/// Nodal Riesz weights μ_i = −∫ a(∇u)⟨∇u, ∇φ_i⟩ over the hat functions of the
/// graph-marked vertices, where u must vanish.
inline BoundaryMeasure riesz_weights(const PSolution& sol, const TriMesh& mesh) {
  auto mu = detail::measure_skeleton(mesh);
  double scale = 0.0;
  for (double v : sol.nodal_values) scale = std::max(scale, std::abs(v));
  for (int v : mu.mesh_vertex)
    if (std::abs(sol.nodal_values[v]) > 1e-12 * std::max(scale, 1.0))
      throw NotZeroBoundary("solution is nonzero at graph vertex " + std::to_string(v));
  const auto r = nodal_residual(mesh, sol.nodal_values, sol.p, sol.reg_delta);
  for (std::size_t i = 0; i < mu.nodes.size(); ++i) mu.weights[i] = -r[mu.mesh_vertex[i]];
  detail::clamp_negative(mu);
  return mu;
}

struct EdgeDensity {
  int v0 = 0, v1 = 0;
  double density = 0.0;
};

/// |∇u|^{p−1} on the triangle adjacent to each graph-marked edge.
inline std::vector<EdgeDensity> density_estimate(const PSolution& sol, const TriMesh& mesh) {
  std::map<std::pair<int, int>, int> owner;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
    for (int k = 0; k < 3; ++k) {
      const int a = mesh.triangles[t][k], b = mesh.triangles[t][(k + 1) % 3];
      owner[{std::min(a, b), std::max(a, b)}] = static_cast<int>(t);
    }
  std::vector<EdgeDensity> out;
  for (const auto& e : mesh.boundary_edges) {
    if (e.marker != BoundaryMarker::graph) continue;
    const int t = owner.at({std::min(e.v0, e.v1), std::max(e.v0, e.v1)});
    Vec2 g;
    if (sol.tri_gradients.empty()) {
      const auto& tr = mesh.triangles[t];
      const Vec2 &a = mesh.vertices[tr[0]], &b = mesh.vertices[tr[1]], &c = mesh.vertices[tr[2]];
      const auto& u = sol.nodal_values;
      g = (perp(c - b) * u[tr[0]] + perp(a - c) * u[tr[1]] + perp(b - a) * u[tr[2]]) / orient(a, b, c);
    } else {
      g = sol.tri_gradients[t];
    }
    out.push_back({e.v0, e.v1, std::pow(norm(g), sol.p - 1.0)});
  }
  return out;
}

/// Node weights from edge densities: each node receives density·length/2 from
/// every incident edge.
inline BoundaryMeasure lump_density(const TriMesh& mesh, std::span<const EdgeDensity> density) {
  auto mu = detail::measure_skeleton(mesh);
  std::vector<int> node_of(mesh.vertices.size(), -1);
  for (std::size_t i = 0; i < mu.mesh_vertex.size(); ++i) node_of[mu.mesh_vertex[i]] = static_cast<int>(i);
  for (const auto& d : density) {
    const double half = 0.5 * d.density * distance(mesh.vertices[d.v0], mesh.vertices[d.v1]);
    mu.weights[node_of[d.v0]] += half;
    mu.weights[node_of[d.v1]] += half;
  }
  return mu;
}

/// The measure restricted to nodes inside the box; support edges leaving the
/// box are dropped.
inline BoundaryMeasure restrict_to_window(const BoundaryMeasure& mu, const Box& window) {
  BoundaryMeasure out;
  out.window = window;
  out.clamped = mu.clamped;
  out.most_negative = mu.most_negative;
  std::vector<int> remap(mu.nodes.size(), -1);
  for (std::size_t i = 0; i < mu.nodes.size(); ++i)
    if (window.contains(mu.nodes[i])) {
      remap[i] = static_cast<int>(out.nodes.size());
      out.nodes.push_back(mu.nodes[i]);
      out.weights.push_back(mu.weights[i]);
      out.mesh_vertex.push_back(mu.mesh_vertex.empty() ? -1 : mu.mesh_vertex[i]);
    }
  for (const auto& e : mu.edges)
    if (remap[e[0]] >= 0 && remap[e[1]] >= 0) out.edges.push_back({remap[e[0]], remap[e[1]]});
  return out;
}

inline double mu_ball(const BoundaryMeasure& mu, const Vec2& x, double r) { return MeasureIndex(mu).mass_in_ball(x, r); }

/// μ(B(x, 2r)) / μ(B(x, r)) for every center and radius, center-major.
inline std::vector<double> doubling_profile(const MeasureIndex& mu, std::span<const Vec2> centers,
                                            std::span<const double> radii) {
  std::vector<double> out;
  out.reserve(centers.size() * radii.size());
  for (const auto& x : centers)
    for (double r : radii) {
      const double inner = mu.mass_in_ball(x, r);
      if (!(inner > 0.0)) throw ZeroMass("no mass in the inner ball");
      out.push_back(mu.mass_in_ball(x, 2 * r) / inner);
    }
  return out;
}

struct Lemma36Row {
  double r = 0.0;
  double r_tilde = 0.0;
  Vec2 corkscrew;
  double u_corkscrew = 0.0;
  /// u(a)^{p−1} / (r^{p−2} μ(Δ(w, r̃))).
  double lower_ratio = 0.0;
  /// u(a)^{p−1} / (r^{p−2} μ(Δ(w, r̃/2))).
  double upper_ratio = 0.0;
};

struct Lemma36Options {
  double c0 = 4.0;
  double M = 4.0;
  /// Corkscrew search radius as a fraction of r̃.
  double reach = 0.5;
};

/// Measure-solution comparability ratios at w for each scale r, with
/// r̃ = r/c0 and the corkscrew point of B(w, r̃).
inline std::vector<Lemma36Row> lemma36_check(const PSolution& sol, const TriMesh& mesh, const TriangleLocator& loc,
                                             const MeasureIndex& mu, const ChainIndex& chain, const Vec2& w,
                                             std::span<const double> scales, const Lemma36Options& opt = {}) {
  std::vector<Lemma36Row> rows;
  for (double r : scales) {
    Lemma36Row row;
    row.r = r;
    row.r_tilde = r / opt.c0;
    row.corkscrew = corkscrew_point(chain, w, row.r_tilde, opt.M, opt.reach);
    const auto ua = evaluate(mesh, loc, sol.nodal_values, row.corkscrew);
    if (!ua) throw BallOutsideDomain("corkscrew point lies outside the mesh");
    row.u_corkscrew = *ua;
    const double lhs = std::pow(row.u_corkscrew, sol.p - 1.0);
    const double scale = std::pow(r, sol.p - 2.0);
    const double outer = mu.mass_in_ball(w, row.r_tilde);
    const double inner = mu.mass_in_ball(w, row.r_tilde / 2);
    if (!(inner > 0.0)) throw ZeroMass("no mass near the boundary point");
    row.lower_ratio = lhs / (scale * outer);
    row.upper_ratio = lhs / (scale * inner);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace wolff_lab

#endif  // WOLFF_LAB_MEASURE_HPP
