#ifndef WOLFF_LAB_PLAPLACE_HPP
#define WOLFF_LAB_PLAPLACE_HPP

// Regularized p-Dirichlet energy on P1 elements and its minimization by
// continuation in the regularization parameter plus damped Newton.

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "wolff_lab/errors.hpp"
#include "wolff_lab/mesh.hpp"

namespace wolff_lab {

/// Per-triangle area and hat-function gradients.
struct P1Geometry {
  std::vector<double> area;
  std::vector<std::array<Vec2, 3>> grad;

  explicit P1Geometry(const TriMesh& mesh) {
    const std::size_t nt = mesh.triangles.size();
    area.resize(nt);
    grad.resize(nt);
    for (std::size_t t = 0; t < nt; ++t) {
      const auto& tr = mesh.triangles[t];
      const Vec2 &a = mesh.vertices[tr[0]], &b = mesh.vertices[tr[1]], &c = mesh.vertices[tr[2]];
      const double d = orient(a, b, c);
      area[t] = 0.5 * d;
      grad[t] = {perp(c - b) / d, perp(a - c) / d, perp(b - a) / d};
    }
  }

  Vec2 gradient(const TriMesh& mesh, std::span<const double> u, std::size_t t) const {
    const auto& tr = mesh.triangles[t];
    return grad[t][0] * u[tr[0]] + grad[t][1] * u[tr[1]] + grad[t][2] * u[tr[2]];
  }
};

/// Dirichlet problem for the regularized p-Laplacian. boundary_data holds a
/// value per mesh vertex; only entries at boundary vertices are read.
struct DirichletProblem {
  double p = 2.0;
  std::vector<double> boundary_data;
  double reg_delta = 0.0;
};

/// Samples f at every vertex (interior entries are harmless and ignored by
/// the solver).
inline std::vector<double> sample_vertices(const TriMesh& mesh, const std::function<double(const Vec2&)>& f) {
  std::vector<double> out(mesh.vertices.size());
  for (std::size_t v = 0; v < out.size(); ++v) out[v] = f(mesh.vertices[v]);
  return out;
}

struct PSolution {
  std::vector<double> nodal_values;
  std::vector<Vec2> tri_gradients;
  double residual_norm = 0.0;
  double energy = 0.0;
  double p = 2.0;
  double reg_delta = 0.0;
  int iterations = 0;
  int stages = 0;
  /// Energy after every accepted Newton step, per continuation stage.
  std::vector<std::vector<double>> energy_history;
  double min_value = 0.0;
};

struct SolverOptions {
  /// Absolute sup-norm tolerance on the interior weak residual; 0 selects
  /// 1e-9 times the flux scale of the initial harmonic iterate.
  double tol = 0.0;
  int max_iter = 400;
  /// Lower end of the continuation, relative to the gradient scale.
  double reg_floor = 1e-8;
  double continuation_factor = 4.0;
  double armijo = 1e-4;
  double backtrack = 0.5;
};

namespace detail {

inline double flux_coefficient(double s, double p) {
  if (s <= 0.0) return p >= 2.0 ? (p == 2.0 ? 1.0 : 0.0) : 0.0;
  return std::pow(s, 0.5 * (p - 2.0));
}

}  // namespace detail

/// Σ_T |T| (reg_delta² + |∇u_T|²)^{p/2} / p.
inline double energy(const TriMesh& mesh, std::span<const double> u, double p, double reg_delta) {
  const P1Geometry geo(mesh);
  long double e = 0.0L;
  const double d2 = reg_delta * reg_delta;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const Vec2 g = geo.gradient(mesh, u, t);
    e += geo.area[t] * std::pow(d2 + norm2(g), 0.5 * p) / p;
  }
  return static_cast<double>(e);
}

/// ∫(reg² + |∇u|²)^{(p−2)/2}⟨∇u, ∇φ_i⟩ for every vertex i; this is also the
/// gradient of the energy with respect to the nodal values.
inline std::vector<double> nodal_residual(const TriMesh& mesh, std::span<const double> u, double p, double reg_delta) {
  const P1Geometry geo(mesh);
  std::vector<double> r(mesh.vertices.size(), 0.0);
  const double d2 = reg_delta * reg_delta;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const Vec2 g = geo.gradient(mesh, u, t);
    const double a = detail::flux_coefficient(d2 + norm2(g), p) * geo.area[t];
    const auto& tr = mesh.triangles[t];
    for (int k = 0; k < 3; ++k) r[tr[k]] += a * dot(g, geo.grad[t][k]);
  }
  return r;
}

/// Interior weak residual; entries at boundary vertices are zero.
inline std::vector<double> weak_residual(const PSolution& sol, const TriMesh& mesh) {
  auto r = nodal_residual(mesh, sol.nodal_values, sol.p, sol.reg_delta);
  const auto bnd = mesh.boundary_flags();
  for (std::size_t v = 0; v < r.size(); ++v)
    if (bnd[v]) r[v] = 0.0;
  return r;
}

namespace detail {

class NewtonSolver {
 public:
  NewtonSolver(const TriMesh& mesh, const DirichletProblem& prob, const SolverOptions& opt)
      : mesh_(mesh), prob_(prob), opt_(opt), geo_(mesh) {
    if (!(prob.p > 1.0) || !std::isfinite(prob.p)) throw DegenerateInput("p must lie in (1, inf)");
    if (prob.boundary_data.size() != mesh.vertices.size())
      throw DegenerateInput("boundary data must hold one value per vertex");
    const auto bnd = mesh.boundary_flags();
    dof_.assign(mesh.vertices.size(), -1);
    u_.assign(mesh.vertices.size(), 0.0);
    for (std::size_t v = 0; v < dof_.size(); ++v) {
      if (bnd[v]) {
        if (!std::isfinite(prob.boundary_data[v])) throw DegenerateInput("non-finite boundary data");
        u_[v] = prob.boundary_data[v];
      } else {
        dof_[v] = n_++;
      }
    }
    build_pattern();
  }

  PSolution run() {
    PSolution sol;
    sol.p = prob_.p;
    // stage 0: harmonic iterate
    if (n_ > 0) harmonic();
    double gscale = 0.0;
    double total_area = 0.0;
    for (std::size_t t = 0; t < mesh_.triangles.size(); ++t) {
      gscale += geo_.area[t] * norm2(geo_.gradient(mesh_, u_, t));
      total_area += geo_.area[t];
    }
    gscale = std::sqrt(gscale / std::max(total_area, 1e-300));
    if (!(gscale > 0.0)) gscale = 1.0;
    const double reg_final = std::max(prob_.reg_delta, opt_.reg_floor * gscale);
    double tol = opt_.tol;
    if (!(tol > 0.0)) tol = 1e-9 * flux_scale(std::pow(gscale, prob_.p - 1.0));

    std::vector<double> stages;
    if (prob_.p != 2.0) {
      for (double d = gscale; d > reg_final; d /= opt_.continuation_factor) stages.push_back(d);
    }
    stages.push_back(reg_final);

    int iters = 0;
    for (std::size_t s = 0; s < stages.size(); ++s) {
      const bool last = s + 1 == stages.size();
      const double stage_tol = last ? tol : std::max(tol, 1e-4 * flux_scale(std::pow(gscale, prob_.p - 1.0)));
      const int budget = last ? opt_.max_iter - iters : std::min(12, opt_.max_iter - iters);
      sol.energy_history.emplace_back();
      const auto [used, res] = newton(stages[s], stage_tol, budget, sol.energy_history.back());
      iters += used;
      if (last && res > tol) throw NonConvergence(iters, res);
    }
    sol.iterations = iters;
    sol.stages = static_cast<int>(stages.size());
    sol.reg_delta = reg_final;
    sol.nodal_values = u_;
    sol.tri_gradients.resize(mesh_.triangles.size());
    for (std::size_t t = 0; t < mesh_.triangles.size(); ++t) sol.tri_gradients[t] = geo_.gradient(mesh_, u_, t);
    sol.energy = energy_at(u_, reg_final);
    sol.residual_norm = residual_sup(reg_final);
    sol.min_value = u_.empty() ? 0.0 : *std::min_element(u_.begin(), u_.end());
    return sol;
  }

 private:
  using SpMat = Eigen::SparseMatrix<double>;

  void build_pattern() {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(mesh_.triangles.size() * 9);
    for (const auto& tr : mesh_.triangles)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          const int a = dof_[tr[i]], b = dof_[tr[j]];
          if (a >= 0 && b >= 0) trip.emplace_back(a, b, 1.0);
        }
    H_.resize(n_, n_);
    H_.setFromTriplets(trip.begin(), trip.end());
    H_.makeCompressed();
    slot_.assign(mesh_.triangles.size() * 9, -1);
    for (std::size_t t = 0; t < mesh_.triangles.size(); ++t) {
      const auto& tr = mesh_.triangles[t];
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          const int a = dof_[tr[i]], b = dof_[tr[j]];
          if (a < 0 || b < 0) continue;
          slot_[t * 9 + i * 3 + j] = static_cast<int>(&H_.coeffRef(a, b) - H_.valuePtr());
        }
    }
    if (n_ > 0) solver_.analyzePattern(H_);
  }

  /// Largest Σ_{T∋i} |T|·scale·|∇φ_i| over interior vertices.
  double flux_scale(double scale) const {
    std::vector<double> acc(mesh_.vertices.size(), 0.0);
    for (std::size_t t = 0; t < mesh_.triangles.size(); ++t)
      for (int k = 0; k < 3; ++k) acc[mesh_.triangles[t][k]] += geo_.area[t] * scale * norm(geo_.grad[t][k]);
    double m = 0.0;
    for (std::size_t v = 0; v < acc.size(); ++v)
      if (dof_[v] >= 0) m = std::max(m, acc[v]);
    return m > 0.0 ? m : 1.0;
  }

  double energy_at(const std::vector<double>& u, double reg) const {
    long double e = 0.0L;
    const double d2 = reg * reg;
    for (std::size_t t = 0; t < mesh_.triangles.size(); ++t) {
      const Vec2 g = geo_.gradient(mesh_, u, t);
      e += geo_.area[t] * std::pow(d2 + norm2(g), 0.5 * prob_.p) / prob_.p;
    }
    return static_cast<double>(e);
  }

  /// Assembles the interior gradient and, if requested, the Hessian.
  void assemble(double reg, Eigen::VectorXd& grad, bool hessian) {
    grad.setZero(n_);
    if (hessian) std::fill(H_.valuePtr(), H_.valuePtr() + H_.nonZeros(), 0.0);
    const double d2 = reg * reg;
    const double p = prob_.p;
    for (std::size_t t = 0; t < mesh_.triangles.size(); ++t) {
      const auto& tr = mesh_.triangles[t];
      const Vec2 g = geo_.gradient(mesh_, u_, t);
      const double s = d2 + norm2(g);
      const double a = std::pow(s, 0.5 * (p - 2.0)) * geo_.area[t];
      const double b = (p - 2.0) * a / s;
      std::array<double, 3> gd{};
      for (int k = 0; k < 3; ++k) gd[k] = dot(g, geo_.grad[t][k]);
      for (int i = 0; i < 3; ++i) {
        const int di = dof_[tr[i]];
        if (di < 0) continue;
        grad[di] += a * gd[i];
        if (!hessian) continue;
        for (int j = 0; j < 3; ++j) {
          const int sl = slot_[t * 9 + i * 3 + j];
          if (sl < 0) continue;
          H_.valuePtr()[sl] += a * dot(geo_.grad[t][i], geo_.grad[t][j]) + b * gd[i] * gd[j];
        }
      }
    }
  }

  double residual_sup(double reg) {
    Eigen::VectorXd g;
    assemble(reg, g, false);
    return n_ > 0 ? g.lpNorm<Eigen::Infinity>() : 0.0;
  }

  void harmonic() {
    std::fill(H_.valuePtr(), H_.valuePtr() + H_.nonZeros(), 0.0);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_);
    for (std::size_t t = 0; t < mesh_.triangles.size(); ++t) {
      const auto& tr = mesh_.triangles[t];
      for (int i = 0; i < 3; ++i) {
        const int di = dof_[tr[i]];
        if (di < 0) continue;
        for (int j = 0; j < 3; ++j) {
          const double k = geo_.area[t] * dot(geo_.grad[t][i], geo_.grad[t][j]);
          const int sl = slot_[t * 9 + i * 3 + j];
          if (sl >= 0)
            H_.valuePtr()[sl] += k;
          else
            rhs[di] -= k * u_[tr[j]];
        }
      }
    }
    factorize();
    const Eigen::VectorXd x = solver_.solve(rhs);
    for (std::size_t v = 0; v < dof_.size(); ++v)
      if (dof_[v] >= 0) u_[v] = x[dof_[v]];
  }

  void factorize() {
    solver_.factorize(H_);
    if (solver_.info() != Eigen::Success) throw NonConvergence(0, std::numeric_limits<double>::infinity());
  }

  std::pair<int, double> newton(double reg, double tol, int budget, std::vector<double>& history) {
    Eigen::VectorXd grad;
    assemble(reg, grad, true);
    double res = n_ > 0 ? grad.lpNorm<Eigen::Infinity>() : 0.0;
    double e = energy_at(u_, reg);
    history.push_back(e);
    int it = 0;
    std::vector<double> trial(u_.size());
    while (res > tol && it < budget) {
      ++it;
      factorize();
      const Eigen::VectorXd step = -solver_.solve(grad);
      const double slope = grad.dot(step);
      double alpha = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 60; ++ls) {
        trial = u_;
        for (std::size_t v = 0; v < dof_.size(); ++v)
          if (dof_[v] >= 0) trial[v] += alpha * step[dof_[v]];
        const double et = energy_at(trial, reg);
        const double slack = 16.0 * std::numeric_limits<double>::epsilon() * std::abs(e);
        if (et <= e + opt_.armijo * alpha * slope + slack) {
          accepted = true;
          e = std::min(et, e);
          break;
        }
        alpha *= opt_.backtrack;
      }
      if (!accepted) throw NonConvergence(it, res);
      u_.swap(trial);
      history.push_back(e);
      assemble(reg, grad, true);
      res = grad.lpNorm<Eigen::Infinity>();
    }
    return {it, res};
  }

  const TriMesh& mesh_;
  const DirichletProblem& prob_;
  SolverOptions opt_;
  P1Geometry geo_;
  std::vector<int> dof_;
  int n_ = 0;
  std::vector<double> u_;
  SpMat H_;
  std::vector<int> slot_;
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> solver_;
};

}  // namespace detail

/// Minimizes the regularized p-Dirichlet energy over P1 fields matching the
/// boundary data. Continuation runs from the gradient scale of the harmonic
/// iterate down to max(reg_delta, reg_floor·scale) by the continuation factor.
inline PSolution solve(const TriMesh& mesh, const DirichletProblem& problem, const SolverOptions& options = {}) {
  detail::NewtonSolver s(mesh, problem, options);
  return s.run();
}

/// Value of the P1 field at x, or nullopt outside the mesh.
inline std::optional<double> evaluate(const TriMesh& mesh, const TriangleLocator& loc, std::span<const double> u,
                                      const Vec2& x) {
  const auto hit = loc.locate(x);
  if (!hit) return std::nullopt;
  const auto& tr = mesh.triangles[hit->tri];
  return hit->bary[0] * u[tr[0]] + hit->bary[1] * u[tr[1]] + hit->bary[2] * u[tr[2]];
}

struct Ball {
  Vec2 center;
  double radius = 0.0;
};

struct RegularityReport {
  double caccioppoli_ratio = 0.0;
  double harnack_ratio = 0.0;
  double holder_fit_beta = 0.0;
  double holder_fit_sigma = 0.0;
  /// Per-ball values, in input order.
  std::vector<double> caccioppoli;
  std::vector<double> harnack;
};

namespace detail {

struct BallStats {
  double max_u = -std::numeric_limits<double>::infinity();
  double min_u = std::numeric_limits<double>::infinity();
  double max_g = -std::numeric_limits<double>::infinity();
  double min_g = std::numeric_limits<double>::infinity();
  Vec2 gmin{1e300, 1e300}, gmax{-1e300, -1e300};
};

inline double slope_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace detail

/// Caccioppoli and Harnack ratios per ball (the report keeps the largest),
/// plus Hölder exponents of u and ∇u fitted over nested balls.
inline RegularityReport regularity_report(const PSolution& sol, const TriMesh& mesh, std::span<const Ball> balls) {
  RegularityReport rep;
  const TriangleLocator loc(mesh);
  std::vector<SegmentGrid::Segment> bsegs;
  for (const auto& e : mesh.boundary_edges) bsegs.push_back({mesh.vertices[e.v0], mesh.vertices[e.v1]});
  const SegmentGrid bgrid(std::move(bsegs), 0.0);
  const double p = sol.p;

  // max/min of u over a closed disc: vertices inside plus dense circle samples
  auto u_range = [&](const Ball& b) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
      if (distance(mesh.vertices[v], b.center) <= b.radius) {
        lo = std::min(lo, sol.nodal_values[v]);
        hi = std::max(hi, sol.nodal_values[v]);
      }
    constexpr int kCircle = 256;
    for (int k = 0; k < kCircle; ++k) {
      const double th = 2.0 * std::numbers::pi * k / kCircle;
      const auto val = evaluate(mesh, loc, sol.nodal_values, b.center + Vec2{std::cos(th), std::sin(th)} * b.radius);
      if (!val) throw BallOutsideDomain("ball leaves the mesh");
      lo = std::min(lo, *val);
      hi = std::max(hi, *val);
    }
    return std::pair{lo, hi};
  };
  // oscillation of ∇u over triangles meeting the disc
  auto grad_osc = [&](const Ball& b) {
    Vec2 lo{1e300, 1e300}, hi{-1e300, -1e300};
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
      const auto& tr = mesh.triangles[t];
      const double a = triangle_disc_area(mesh.vertices[tr[0]], mesh.vertices[tr[1]], mesh.vertices[tr[2]], b.center,
                                          b.radius);
      if (a <= 0.0) continue;
      const Vec2 g = sol.tri_gradients[t];
      lo = {std::min(lo.x, g.x), std::min(lo.y, g.y)};
      hi = {std::max(hi.x, g.x), std::max(hi.y, g.y)};
    }
    return norm(hi - lo);
  };

  std::vector<double> log_r, log_osc_u, log_osc_g;
  std::vector<double> beta_fits, sigma_fits;
  for (const auto& b : balls) {
    if (!(b.radius > 0.0)) throw BallOutsideDomain("non-positive radius");
    if (!loc.locate(b.center)) throw BallOutsideDomain("center outside the mesh");
    if (bgrid.distance(b.center, b.radius) <= b.radius)
      throw BallOutsideDomain("ball meets the boundary");
    const auto [lo, hi] = u_range(b);
    if (!(lo > 0.0)) throw BallOutsideDomain("u is not positive on the ball");
    rep.harnack.push_back(hi / lo);

    double integral = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
      const auto& tr = mesh.triangles[t];
      const double a = triangle_disc_area(mesh.vertices[tr[0]], mesh.vertices[tr[1]], mesh.vertices[tr[2]], b.center,
                                          0.5 * b.radius);
      if (a > 0.0) integral += a * std::pow(norm(sol.tri_gradients[t]), p);
    }
    rep.caccioppoli.push_back(std::pow(b.radius, p - 2.0) * integral / std::pow(hi, p));

    // nested balls for the Hölder fits
    std::vector<double> lr, lu, lg;
    bool flat_gradient = true;
    for (int k = 0; k < 5; ++k) {
      const Ball sub{b.center, b.radius * std::ldexp(1.0, -k)};
      const auto [l, h] = u_range(sub);
      const double og = grad_osc(sub);
      flat_gradient = flat_gradient && og <= 1e-10 * (h - l) / sub.radius;
      lr.push_back(std::log(sub.radius));
      lu.push_back(std::log(std::max(h - l, 1e-300)));
      lg.push_back(std::log(std::max(og, 1e-300)));
    }
    beta_fits.push_back(detail::slope_fit(lr, lu));
    // a constant gradient is as regular as the fit can report
    sigma_fits.push_back(flat_gradient ? std::numeric_limits<double>::infinity() : detail::slope_fit(lr, lg));
  }
  auto clamp_exp = [](double s) {
    if (!std::isfinite(s)) return 1.5;
    return std::clamp(s, 1e-6, 1.5);
  };
  for (double v : rep.caccioppoli) rep.caccioppoli_ratio = std::max(rep.caccioppoli_ratio, v);
  for (double v : rep.harnack) rep.harnack_ratio = std::max(rep.harnack_ratio, v);
  if (!beta_fits.empty()) {
    rep.holder_fit_beta = clamp_exp(*std::min_element(beta_fits.begin(), beta_fits.end()));
    rep.holder_fit_sigma = clamp_exp(*std::min_element(sigma_fits.begin(), sigma_fits.end()));
  }
  return rep;
}

}  // namespace wolff_lab

#endif  // WOLFF_LAB_PLAPLACE_HPP
