#ifndef WOLFF_LAB_DELAUNAY_HPP
#define WOLFF_LAB_DELAUNAY_HPP

// Incremental Bowyer-Watson Delaunay triangulation with neighbour links.
// Used internally by the mesher; not part of the public surface.

#include <array>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "wolff_lab/planar.hpp"

namespace wolff_lab::detail {

inline long double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const long double adx = (long double)a.x - d.x, ady = (long double)a.y - d.y;
  const long double bdx = (long double)b.x - d.x, bdy = (long double)b.y - d.y;
  const long double cdx = (long double)c.x - d.x, cdy = (long double)c.y - d.y;
  return (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy) +
         (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy) +
         (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady);
}

inline long double orient_ld(const Vec2& a, const Vec2& b, const Vec2& c) {
  return ((long double)b.x - a.x) * ((long double)c.y - a.y) -
         ((long double)b.y - a.y) * ((long double)c.x - a.x);
}

inline std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

class Delaunay {
 public:
  struct Tri {
    std::array<int, 3> v{};
    std::array<int, 3> nbr{-1, -1, -1};  // nbr[i] lies across the edge opposite v[i]
    bool alive = false;
    signed char region = 0;  // +1 inside the domain, -1 outside, 0 unknown
  };

  struct Cavity {
    std::vector<int> tris;
    // boundary edges (a, b) in counter-clockwise order with the outside neighbour
    // and the cavity triangle that owned the edge
    struct Edge {
      int a, b, outside, owner;
    };
    std::vector<Edge> boundary;
    std::vector<std::pair<int, int>> interior_edges;
    bool duplicate = false;
    int duplicate_of = -1;
  };

  Delaunay(const Vec2& lo, const Vec2& hi) {
    const Vec2 c = (lo + hi) * 0.5;
    const double span = std::max({hi.x - lo.x, hi.y - lo.y, 1e-12});
    const double s = 64.0 * span;
    pts_.push_back(c + Vec2{-s, -s});
    pts_.push_back(c + Vec2{s, -s});
    pts_.push_back(c + Vec2{0.0, s});
    vtri_.assign(3, 0);
    Tri t;
    t.v = {0, 1, 2};
    t.alive = true;
    t.region = -1;
    tris_.push_back(t);
  }

  static constexpr int kSuper = 3;

  const std::vector<Vec2>& points() const { return pts_; }
  const std::vector<Tri>& tris() const { return tris_; }
  std::vector<Tri>& tris() { return tris_; }
  std::size_t num_points() const { return pts_.size(); }
  int any_tri_of(int v) const { return vtri_[v]; }
  bool is_super(int v) const { return v < kSuper; }

  int locate(const Vec2& p, int start = -1) const {
    int t = (start >= 0 && start < static_cast<int>(tris_.size()) && tris_[start].alive) ? start : last_;
    if (!tris_[t].alive) {
      for (t = static_cast<int>(tris_.size()) - 1; t >= 0 && !tris_[t].alive; --t) {
      }
    }
    std::uint32_t rng = 0x9e3779b9u ^ static_cast<std::uint32_t>(t);
    for (std::size_t steps = 0; steps < 4 * tris_.size() + 100; ++steps) {
      const Tri& tr = tris_[t];
      rng ^= rng << 13;
      rng ^= rng >> 17;
      rng ^= rng << 5;
      const int off = static_cast<int>(rng % 3);
      bool moved = false;
      for (int k = 0; k < 3; ++k) {
        const int i = (k + off) % 3;
        const Vec2& a = pts_[tr.v[(i + 1) % 3]];
        const Vec2& b = pts_[tr.v[(i + 2) % 3]];
        if (orient_ld(a, b, p) < 0) {
          if (tr.nbr[i] < 0) throw std::runtime_error("point outside the triangulation");
          t = tr.nbr[i];
          moved = true;
          break;
        }
      }
      if (!moved) return t;
    }
    throw std::runtime_error("point location did not terminate");
  }

  /// Computes the Bowyer-Watson cavity of p without modifying anything.
  void cavity(const Vec2& p, int start, Cavity& c, std::vector<int>& mark, int& epoch) const {
    c.tris.clear();
    c.boundary.clear();
    c.interior_edges.clear();
    c.duplicate = false;
    const int t0 = locate(p, start);
    for (int k = 0; k < 3; ++k) {
      const int vi = tris_[t0].v[k];
      const Vec2 d = pts_[vi] - p;
      if (norm2(d) <= 1e-28 * std::max(1.0, norm2(p))) {
        c.duplicate = true;
        c.duplicate_of = vi;
        return;
      }
    }
    if (mark.size() < tris_.size()) mark.resize(tris_.size() * 2, 0);
    ++epoch;
    std::vector<int> stack{t0};
    mark[t0] = epoch;
    while (!stack.empty()) {
      const int t = stack.back();
      stack.pop_back();
      c.tris.push_back(t);
      for (int i = 0; i < 3; ++i) {
        const int n = tris_[t].nbr[i];
        if (n < 0 || mark[n] == epoch) continue;
        const Tri& tn = tris_[n];
        if (incircle(pts_[tn.v[0]], pts_[tn.v[1]], pts_[tn.v[2]], p) > 0) {
          mark[n] = epoch;
          stack.push_back(n);
        }
      }
    }
    for (int t : c.tris) {
      const Tri& tr = tris_[t];
      for (int i = 0; i < 3; ++i) {
        const int n = tr.nbr[i];
        const int a = tr.v[(i + 1) % 3];
        const int b = tr.v[(i + 2) % 3];
        if (n >= 0 && mark[n] == epoch) {
          if (a < b) c.interior_edges.emplace_back(a, b);
        } else {
          c.boundary.push_back({a, b, n, t});
        }
      }
    }
  }

  /// Inserts p, replacing the cavity triangles by a fan. Returns the new
  /// vertex id; the ids of the fan triangles are written to `fan` in the
  /// same order as `c.boundary`.
  int insert(const Vec2& p, const Cavity& c, std::vector<int>& fan) {
    const int pv = static_cast<int>(pts_.size());
    pts_.push_back(p);
    vtri_.push_back(-1);
    for (int t : c.tris) {
      tris_[t].alive = false;
      free_.push_back(t);
    }
    fan.clear();
    for (const auto& e : c.boundary) {
      int id;
      if (!free_.empty()) {
        id = free_.back();
        free_.pop_back();
      } else {
        id = static_cast<int>(tris_.size());
        tris_.emplace_back();
      }
      Tri& t = tris_[id];
      t.v = {e.a, e.b, pv};
      t.nbr = {-1, -1, e.outside};
      t.alive = true;
      t.region = 0;
      fan.push_back(id);
      if (e.outside >= 0) {
        Tri& o = tris_[e.outside];
        for (int i = 0; i < 3; ++i) {
          if (o.v[(i + 1) % 3] == e.b && o.v[(i + 2) % 3] == e.a) o.nbr[i] = id;
        }
      }
      vtri_[e.a] = id;
      vtri_[e.b] = id;
      vtri_[pv] = id;
    }
    // link consecutive fan triangles: (a, b, p) meets (b, c, p) across (b, p)
    const std::size_t k = fan.size();
    if (k <= 24) {
      for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
          if (tris_[fan[j]].v[0] == tris_[fan[i]].v[1]) {
            tris_[fan[i]].nbr[0] = fan[j];
            tris_[fan[j]].nbr[1] = fan[i];
            break;
          }
        }
      }
    } else {
      std::unordered_map<int, int> by_start;
      by_start.reserve(2 * k);
      for (int id : fan) by_start[tris_[id].v[0]] = id;
      for (int id : fan) {
        const int nxt = by_start.at(tris_[id].v[1]);
        tris_[id].nbr[0] = nxt;
        tris_[nxt].nbr[1] = id;
      }
    }
    last_ = fan.empty() ? last_ : fan.front();
    return pv;
  }

  /// Finds the triangle holding the directed or undirected edge (a, b).
  /// Returns {tri, local index of the opposite vertex} or {-1, -1}.
  std::pair<int, int> find_edge(int a, int b) const {
    const int start = vtri_[a];
    if (start < 0) return {-1, -1};
    for (int dir = 0; dir < 2; ++dir) {
      int t = start;
      for (std::size_t guard = 0; guard < 4096; ++guard) {
        const Tri& tr = tris_[t];
        int i = 0;
        while (tr.v[i] != a) ++i;
        if (tr.v[(i + 1) % 3] == b) return {t, (i + 2) % 3};
        if (tr.v[(i + 2) % 3] == b) return {t, (i + 1) % 3};
        const int next = (dir == 0) ? tr.nbr[(i + 2) % 3] : tr.nbr[(i + 1) % 3];
        if (next < 0) break;
        t = next;
        if (t == start) return {-1, -1};
      }
    }
    return {-1, -1};
  }

 private:
  std::vector<Vec2> pts_;
  std::vector<Tri> tris_;
  std::vector<int> vtri_;
  std::vector<int> free_;
  int last_ = 0;
};

}  // namespace wolff_lab::detail

#endif  // WOLFF_LAB_DELAUNAY_HPP
