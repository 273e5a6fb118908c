#ifndef WOLFF_LAB_TESTS_SUPPORT_HPP
#define WOLFF_LAB_TESTS_SUPPORT_HPP

// Shared fixtures and independent oracles for the test suite.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <cmath>
#include <numbers>
#include <vector>

#include "wolff_lab/mesh.hpp"

namespace wolff_lab::testing {

inline PolygonDomain rectangle(double x0, double y0, double x1, double y1, BoundaryMarker bottom = BoundaryMarker::graph,
                               BoundaryMarker rest = BoundaryMarker::artificial_side) {
  PolygonDomain d;
  d.add_loop({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}, {bottom, rest, rest, rest});
  return d;
}

inline PolygonDomain l_shape() {
  PolygonDomain d;
  d.add_loop({{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}}, BoundaryMarker::artificial_side);
  return d;
}

inline std::vector<Vec2> circle(double r, int n, bool clockwise = false) {
  std::vector<Vec2> pts;
  for (int k = 0; k < n; ++k) {
    const double th = 2.0 * std::numbers::pi * k / n * (clockwise ? -1.0 : 1.0);
    pts.push_back({r * std::cos(th), r * std::sin(th)});
  }
  return pts;
}

/// Annulus r_in < |x| < r_out with the inner circle marked as graph.
inline PolygonDomain annulus(double r_in, double r_out, double h) {
  PolygonDomain d;
  const int n_out = static_cast<int>(std::ceil(2 * std::numbers::pi * r_out / h));
  const int n_in = static_cast<int>(std::ceil(2 * std::numbers::pi * r_in / h));
  d.add_loop(circle(r_out, n_out), BoundaryMarker::artificial_top);
  d.add_loop(circle(r_in, n_in, true), BoundaryMarker::graph);
  return d;
}

/// P1 stiffness matrix assembled with the cotangent formula.
inline Eigen::SparseMatrix<double> cotangent_stiffness(const TriMesh& m) {
  std::vector<Eigen::Triplet<double>> trip;
  for (const auto& t : m.triangles) {
    for (int k = 0; k < 3; ++k) {
      const int i = t[(k + 1) % 3], j = t[(k + 2) % 3];
      const Vec2 u = m.vertices[i] - m.vertices[t[k]];
      const Vec2 v = m.vertices[j] - m.vertices[t[k]];
      const double cot = dot(u, v) / std::abs(cross(u, v));
      const double w = 0.5 * cot;
      trip.emplace_back(i, j, -w);
      trip.emplace_back(j, i, -w);
      trip.emplace_back(i, i, w);
      trip.emplace_back(j, j, w);
    }
  }
  Eigen::SparseMatrix<double> K(m.vertices.size(), m.vertices.size());
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

/// Harmonic P1 solution with the given Dirichlet data, solved directly.
inline std::vector<double> linear_dirichlet_solve(const TriMesh& m, const std::vector<double>& data) {
  const auto K = cotangent_stiffness(m);
  const auto bnd = m.boundary_flags();
  const int n = static_cast<int>(m.vertices.size());
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < K.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(K, k); it; ++it) {
      const int i = static_cast<int>(it.row()), j = static_cast<int>(it.col());
      if (bnd[i]) continue;
      if (bnd[j])
        rhs[i] -= it.value() * data[j];
      else
        trip.emplace_back(i, j, it.value());
    }
  for (int i = 0; i < n; ++i)
    if (bnd[i]) {
      trip.emplace_back(i, i, 1.0);
      rhs[i] = data[i];
    }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(A);
  const Eigen::VectorXd x = lu.solve(rhs);
  return std::vector<double>(x.data(), x.data() + n);
}

}  // namespace wolff_lab::testing

#endif  // WOLFF_LAB_TESTS_SUPPORT_HPP
