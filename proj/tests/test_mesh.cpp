#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "wolff_lab/mesh.hpp"

using namespace wolff_lab;

namespace {

PolygonDomain unit_square() {
  PolygonDomain d;
  d.add_loop({{0, 0}, {1, 0}, {1, 1}, {0, 1}},
             {BoundaryMarker::graph, BoundaryMarker::artificial_side, BoundaryMarker::artificial_top,
              BoundaryMarker::artificial_side});
  return d;
}

PolygonDomain l_shape() {
  PolygonDomain d;
  d.add_loop({{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}}, BoundaryMarker::graph);
  return d;
}

// Independent angle scan: law of cosines on every corner.
double angle_scan_min_degrees(const TriMesh& m) {
  double best = 180.0;
  for (const auto& t : m.triangles) {
    for (int k = 0; k < 3; ++k) {
      const Vec2 a = m.vertices[t[k]], b = m.vertices[t[(k + 1) % 3]], c = m.vertices[t[(k + 2) % 3]];
      const double ab = distance(a, b), ac = distance(a, c), bc = distance(b, c);
      const double cosang = std::clamp((ab * ab + ac * ac - bc * bc) / (2 * ab * ac), -1.0, 1.0);
      best = std::min(best, std::acos(cosang) * 180.0 / M_PI);
    }
  }
  return best;
}

// Independent manifold check: count undirected edge uses and compare with boundary list.
bool manifold_oracle(const TriMesh& m) {
  std::map<std::pair<int, int>, int> uses;
  for (const auto& t : m.triangles)
    for (int k = 0; k < 3; ++k) {
      int a = t[k], b = t[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      ++uses[{a, b}];
    }
  std::set<std::pair<int, int>> bnd;
  for (const auto& e : m.boundary_edges) bnd.insert({std::min(e.v0, e.v1), std::max(e.v0, e.v1)});
  for (const auto& [e, n] : uses) {
    if (n > 2) return false;
    if ((n == 1) != (bnd.count(e) == 1)) return false;
  }
  // no hanging vertex in the middle of an edge
  for (const auto& [e, n] : uses) {
    const Vec2 a = m.vertices[e.first], b = m.vertices[e.second];
    for (std::size_t v = 0; v < m.vertices.size(); ++v) {
      if (static_cast<int>(v) == e.first || static_cast<int>(v) == e.second) continue;
      const Vec2 p = m.vertices[v];
      if (distance_to_segment(p, a, b) < 1e-12 * distance(a, b)) return false;
    }
  }
  return true;
}

}  // namespace

TEST(Triangulate, CoarseSquareIsTwoTriangles) {
  const auto m = triangulate(unit_square(), 2.0);
  EXPECT_EQ(m.triangles.size(), 2u);
  EXPECT_EQ(m.vertices.size(), 4u);
  EXPECT_TRUE(check_mesh(m).ok());
}

TEST(Triangulate, AreaPartition) {
  for (double h : {0.3, 0.1, 0.05}) {
    const auto sq = triangulate(unit_square(), h);
    EXPECT_NEAR(sq.total_area(), 1.0, 1e-10);
    const auto l = triangulate(l_shape(), h);
    EXPECT_NEAR(l.total_area(), 3.0, 3e-10);
    EXPECT_TRUE(check_mesh(sq).ok()) << check_mesh(sq).detail;
    EXPECT_TRUE(check_mesh(l).ok()) << check_mesh(l).detail;
  }
}

TEST(Triangulate, LShapeMinAngle) {
  const auto m = triangulate(l_shape(), 0.1);
  EXPECT_GE(angle_scan_min_degrees(m), 20.0 - 1e-9);
  for (const auto& t : m.triangles) {
    const Vec2 a = m.vertices[t[0]], b = m.vertices[t[1]], c = m.vertices[t[2]];
    EXPECT_LE(std::max({distance(a, b), distance(b, c), distance(c, a)}), 0.1 * 1.01);
  }
}

TEST(Triangulate, GradedGraphEdges) {
  const auto m = triangulate(unit_square(), 0.2, 8.0);
  EXPECT_TRUE(check_mesh(m).ok());
  for (const auto& e : m.boundary_edges)
    if (e.marker == BoundaryMarker::graph) {
      EXPECT_LE(distance(m.vertices[e.v0], m.vertices[e.v1]), 0.2 / 8.0 + 1e-12);
    }
  EXPECT_GE(m.min_angle_degrees(), 20.0 - 1e-9);
}

TEST(Triangulate, BoundaryCoversPolygon) {
  const auto m = triangulate(l_shape(), 0.25);
  double len = 0.0;
  for (const auto& e : m.boundary_edges) {
    const Vec2 a = m.vertices[e.v0], b = m.vertices[e.v1];
    len += distance(a, b);
    // domain lies to the left of every boundary edge
    const auto mid = (a + b) * 0.5 + perp(b - a) * 1e-6;
    EXPECT_TRUE(l_shape().contains(mid));
  }
  EXPECT_NEAR(len, 8.0, 1e-12);
}

TEST(Triangulate, HoleIsRespected) {
  PolygonDomain d = unit_square();
  d.add_loop({{0.4, 0.4}, {0.4, 0.6}, {0.6, 0.6}, {0.6, 0.4}}, BoundaryMarker::graph);
  const auto m = triangulate(d, 0.1);
  EXPECT_NEAR(m.total_area(), 1.0 - 0.04, 1e-10);
  EXPECT_TRUE(check_mesh(m).ok());
}

TEST(Triangulate, RejectsDegenerateInput) {
  PolygonDomain flat;
  flat.add_loop({{0, 0}, {1, 0}, {2, 0}}, BoundaryMarker::graph);
  EXPECT_THROW(triangulate(flat, 0.1), DegenerateInput);
  PolygonDomain rep;
  rep.add_loop({{0, 0}, {1, 0}, {1, 0}, {0, 1}}, BoundaryMarker::graph);
  EXPECT_THROW(triangulate(rep, 0.1), DegenerateInput);
  EXPECT_THROW(triangulate(unit_square(), 0.0), DegenerateInput);
}

TEST(Refine, MarkAllQuadruples) {
  const auto m = triangulate(l_shape(), 0.3);
  const auto r = refine_uniform(m);
  EXPECT_EQ(r.triangles.size(), 4 * m.triangles.size());
  EXPECT_EQ(r.boundary_edges.size(), 2 * m.boundary_edges.size());
  EXPECT_NEAR(r.total_area(), 3.0, 1e-10);
  EXPECT_TRUE(manifold_oracle(r));
}

TEST(Refine, MarkNoneIsIdentity) {
  const auto m = triangulate(l_shape(), 0.3);
  const auto r = refine(m, {});
  EXPECT_EQ(r.vertices, m.vertices);
  EXPECT_EQ(r.triangles, m.triangles);
  ASSERT_EQ(r.boundary_edges.size(), m.boundary_edges.size());
}

TEST(Refine, SingleInteriorTriangleStaysConforming) {
  const auto m = triangulate(unit_square(), 0.2);
  const auto flags = m.boundary_flags();
  int pick = -1;
  for (std::size_t t = 0; t < m.triangles.size() && pick < 0; ++t) {
    const auto& tr = m.triangles[t];
    if (!flags[tr[0]] && !flags[tr[1]] && !flags[tr[2]]) pick = static_cast<int>(t);
  }
  ASSERT_GE(pick, 0);
  const auto r = refine(m, {pick});
  EXPECT_TRUE(manifold_oracle(r));
  EXPECT_TRUE(check_mesh(r).ok());
  EXPECT_NEAR(r.total_area(), 1.0, 1e-12);
  // nestedness: old vertices keep their indices
  for (std::size_t v = 0; v < m.vertices.size(); ++v) EXPECT_EQ(r.vertices[v], m.vertices[v]);
}
