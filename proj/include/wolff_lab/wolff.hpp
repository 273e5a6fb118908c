#ifndef WOLFF_LAB_WOLFF_HPP
#define WOLFF_LAB_WOLFF_HPP

// The Wolff integral I(ε) = ∫ |∇u|^{p−1} log|∇u| over the boundary of a
// perturbed half-plane, its Taylor coefficients, sign scans in p, and the
// snowflake experiment relating the sign to the dimension of the measure.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wolff_lab/dimension.hpp"
#include "wolff_lab/errors.hpp"
#include "wolff_lab/geometry.hpp"
#include "wolff_lab/measure.hpp"
#include "wolff_lab/mesh.hpp"
#include "wolff_lab/plaplace.hpp"

namespace wolff_lab {

/// Continuous piecewise-linear function through the breakpoints, zero outside.
struct PiecewiseLinear {
  std::vector<Vec2> knots;

  double operator()(double x) const {
    if (knots.empty() || x <= knots.front().x || x >= knots.back().x) return 0.0;
    const auto it = std::upper_bound(knots.begin(), knots.end(), x, [](double v, const Vec2& k) { return v < k.x; });
    const Vec2 a = *(it - 1), b = *it;
    return a.y + (b.y - a.y) * (x - a.x) / (b.x - a.x);
  }
  double sup_abs() const {
    double m = 0.0;
    for (const auto& k : knots) m = std::max(m, std::abs(k.y));
    return m;
  }
  /// ∫ |θ'|².
  double dirichlet_integral() const {
    double s = 0.0;
    for (std::size_t i = 1; i < knots.size(); ++i) {
      const double dx = knots[i].x - knots[i - 1].x;
      const double dy = knots[i].y - knots[i - 1].y;
      s += dy * dy / dx;
    }
    return s;
  }
  PiecewiseLinear negated() const {
    PiecewiseLinear out = *this;
    for (auto& k : out.knots) k.y = -k.y;
    return out;
  }
};

/// Tent of the given height on [−half_width, half_width].
inline PiecewiseLinear tent(double height = 1.0, double half_width = 1.0) {
  return {{{-half_width, 0.0}, {0.0, height}, {half_width, 0.0}}};
}

struct GraphDomainSpec {
  PiecewiseLinear theta_hat;
  double epsilon = 0.0;
  double R = 16.0;
  double H = 16.0;
  double p = 3.0;
};

inline void validate(const GraphDomainSpec& s) {
  if (!(s.R > 0.0 && s.H > 0.0)) throw SpecViolation("R and H must be positive");
  if (!(s.p > 1.0)) throw SpecViolation("p must exceed 1");
  const auto& k = s.theta_hat.knots;
  for (std::size_t i = 1; i < k.size(); ++i)
    if (!(k[i].x > k[i - 1].x)) throw SpecViolation("theta_hat breakpoints must increase");
  if (!k.empty()) {
    if (k.front().y != 0.0 || k.back().y != 0.0) throw SpecViolation("theta_hat must vanish at its end breakpoints");
    if (!(k.front().x > -s.R / 4 && k.back().x < s.R / 4)) throw SpecViolation("support of theta_hat must lie in (-R/4, R/4)");
  }
  if (!(std::abs(s.epsilon) * s.theta_hat.sup_abs() < s.H / 10)) throw SpecViolation("epsilon * max|theta_hat| must stay below H/10");
}

/// {|x₁| ≤ R, εθ̂(x₁) ≤ x₂ ≤ H} with the graph on the bottom.
inline PolygonDomain graph_domain(const GraphDomainSpec& s) {
  validate(s);
  std::vector<Vec2> pts{{-s.R, 0.0}};
  std::vector<BoundaryMarker> marks{BoundaryMarker::graph};
  for (const auto& k : s.theta_hat.knots) {
    const Vec2 v{k.x, s.epsilon * k.y};
    if (v == pts.back()) continue;
    pts.push_back(v);
    marks.push_back(BoundaryMarker::graph);
  }
  pts.push_back({s.R, 0.0});
  marks.push_back(BoundaryMarker::artificial_side);
  pts.push_back({s.R, s.H});
  marks.push_back(BoundaryMarker::artificial_top);
  pts.push_back({-s.R, s.H});
  marks.push_back(BoundaryMarker::artificial_side);
  // drop collinear graph vertices (ε = 0 gives the plain rectangle)
  std::vector<Vec2> kept;
  std::vector<BoundaryMarker> kept_marks;
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 prev = pts[(i + n - 1) % n], next = pts[(i + 1) % n];
    if (orient(prev, pts[i], next) == 0.0 && marks[i] == marks[(i + n - 1) % n]) continue;
    kept.push_back(pts[i]);
    kept_marks.push_back(marks[i]);
  }
  PolygonDomain d;
  d.add_loop(kept, kept_marks);
  return d;
}

enum class FarField { linear, poisson };

/// First-order far field of the perturbation: the solution of the
/// linearization v_11 + (p − 1) v_22 = 0 in the upper half plane with
/// v = −θ̂ on the axis, i.e. a Poisson integral in stretched coordinates.
inline double far_field_correction(const PiecewiseLinear& theta, double p, const Vec2& x) {
  const auto& k = theta.knots;
  if (k.size() < 2) return 0.0;
  const double Y = x.y / std::sqrt(p - 1.0);
  if (Y <= 0.0) return -theta(x.x);
  double v = 0.0;
  for (std::size_t i = 1; i < k.size(); ++i) {
    const double beta = (k[i].y - k[i - 1].y) / (k[i].x - k[i - 1].x);
    const double alpha = k[i - 1].y - beta * k[i - 1].x;
    const double s0 = k[i - 1].x - x.x, s1 = k[i].x - x.x;
    v += (alpha + beta * x.x) * (std::atan(s1 / Y) - std::atan(s0 / Y)) +
         beta * 0.5 * Y * std::log((s1 * s1 + Y * Y) / (s0 * s0 + Y * Y));
  }
  return -v / std::numbers::pi;
}

/// First-order contribution of the graph outside |x₁| ≤ R to I:
/// ε ∫_{|x₁|>R} ∂₂v(x₁, 0) dx₁ for the far-field correction v.
inline double far_field_tail(const PiecewiseLinear& theta, double p, double R, double epsilon) {
  const auto& k = theta.knots;
  double T = 0.0;
  constexpr int kSub = 64;
  for (std::size_t i = 1; i < k.size(); ++i) {
    // composite Simpson on each linear piece
    const double a = k[i - 1].x, b = k[i].x, h = (b - a) / kSub;
    for (int j = 0; j <= kSub; ++j) {
      const double t = a + j * h;
      const double w = (j == 0 || j == kSub) ? 1.0 : (j % 2 ? 4.0 : 2.0);
      T += w * h / 3.0 * theta(t) * (1.0 / (R - t) + 1.0 / (R + t));
    }
  }
  return -epsilon * T / (std::numbers::pi * std::sqrt(p - 1.0));
}

struct WolffOptions {
  double h_max = 0.5;
  /// Graph edges are refined to h_max / grading.
  double grading = 128.0;
  FarField far_field = FarField::poisson;
  double grad_floor = 1e-12;
  SolverOptions solver{};
};

/// Dirichlet data: zero on the graph, x₂ (plus ε times the far-field
/// correction) on the artificial boundary.
inline std::vector<double> graph_boundary_data(const TriMesh& mesh, const GraphDomainSpec& s, FarField far) {
  const auto graph = mesh.marker_flags(BoundaryMarker::graph);
  std::vector<double> data(mesh.vertices.size(), 0.0);
  for (std::size_t v = 0; v < data.size(); ++v) {
    if (graph[v]) continue;
    const Vec2 x = mesh.vertices[v];
    data[v] = x.y + (far == FarField::poisson ? s.epsilon * far_field_correction(s.theta_hat, s.p, x) : 0.0);
  }
  return data;
}

struct WolffIntegral {
  double value = 0.0;
  double clipped_fraction = 0.0;
};

/// Σ over graph edges of len(e)·g^{p−1}·log g, g = max(|∇u| on the adjacent
/// triangle, grad_floor). The clipped fraction is by edge length.
inline WolffIntegral wolff_integral(const PSolution& sol, const TriMesh& mesh, double grad_floor = 1e-12) {
  WolffIntegral out;
  double length = 0.0, clipped = 0.0;
  for (const auto& d : density_estimate(sol, mesh)) {
    const double len = distance(mesh.vertices[d.v0], mesh.vertices[d.v1]);
    double g = std::pow(d.density, 1.0 / (sol.p - 1.0));
    if (g < grad_floor) {
      g = grad_floor;
      clipped += len;
    }
    out.value += len * std::pow(g, sol.p - 1.0) * std::log(g);
    length += len;
  }
  out.clipped_fraction = length > 0.0 ? clipped / length : 0.0;
  return out;
}

struct WolffSample {
  double epsilon = 0.0;
  double p = 0.0;
  /// I_box plus I_tail.
  double I = 0.0;
  double I_box = 0.0;
  double I_tail = 0.0;
  double clipped_fraction = 0.0;
  std::size_t triangles = 0;
};

/// Meshes the graph domain, solves and integrates. With the Poisson far
/// field the analytic tail outside the box is added.
inline WolffSample compute_wolff_sample(const GraphDomainSpec& s, const WolffOptions& opt = {}) {
  const auto mesh = triangulate(graph_domain(s), opt.h_max, opt.grading);
  const auto sol = solve(mesh, {s.p, graph_boundary_data(mesh, s, opt.far_field), 0.0}, opt.solver);
  const auto box = wolff_integral(sol, mesh, opt.grad_floor);
  WolffSample out;
  out.epsilon = s.epsilon;
  out.p = s.p;
  out.I_box = box.value;
  out.I_tail = opt.far_field == FarField::poisson ? far_field_tail(s.theta_hat, s.p, s.R, s.epsilon) : 0.0;
  out.I = out.I_box + out.I_tail;
  out.clipped_fraction = box.clipped_fraction;
  out.triangles = mesh.triangles.size();
  return out;
}

/// ½ I''(0) = ((p − 2)/(p − 1))·∫|θ̂'|²/2.
inline double analytic_a2(const PiecewiseLinear& theta, double p) {
  return (p - 2.0) / (p - 1.0) * theta.dirichlet_integral() / 2.0;
}

struct TaylorFit {
  double a2 = 0.0, a3 = 0.0;
  double a2_stderr = 0.0, a3_stderr = 0.0;
  double r_squared = 0.0;
  double ddI0() const { return 2.0 * a2; }
  double ddI0_stderr() const { return 2.0 * a2_stderr; }
};

/// Least squares I ≈ a₂ε² + a₃ε³ with no constant or linear term. R² is
/// taken about zero since the model has no intercept.
inline TaylorFit fit_taylor(std::span<const double> eps, std::span<const double> I) {
  const auto n = static_cast<Eigen::Index>(eps.size());
  if (n < 3) throw DegenerateInput("Taylor fit needs at least 3 samples");
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    A(i, 0) = eps[i] * eps[i];
    A(i, 1) = eps[i] * eps[i] * eps[i];
    b[i] = I[i];
  }
  const Eigen::Vector2d c = A.colPivHouseholderQr().solve(b);
  const Eigen::VectorXd res = b - A * c;
  const double ss_res = res.squaredNorm();
  const double ss_tot = b.squaredNorm();
  TaylorFit f;
  f.a2 = c[0];
  f.a3 = c[1];
  f.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  const double sigma2 = n > 2 ? ss_res / static_cast<double>(n - 2) : 0.0;
  const Eigen::Matrix2d cov = (A.transpose() * A).inverse() * sigma2;
  f.a2_stderr = std::sqrt(std::max(cov(0, 0), 0.0));
  f.a3_stderr = std::sqrt(std::max(cov(1, 1), 0.0));
  return f;
}

struct DdIResult {
  TaylorFit fit;
  std::vector<WolffSample> samples;
  /// |I(2R, 2H) − I(R, H)| / max|I| at the largest |ε| of the grid.
  double truncation_change = 0.0;
};

/// I(ε) over the grid, then the Taylor fit. Throws PoorFit below R² = 0.99
/// or when a sample clips more than 1e-3 of the graph length.
inline DdIResult ddI_fd(const GraphDomainSpec& spec, std::span<const double> eps_grid, const WolffOptions& opt = {},
                        bool require_good_fit = true) {
  if (eps_grid.size() < 5) throw DegenerateInput("ddI_fd needs at least 5 epsilon values");
  DdIResult out;
  std::vector<double> e, v;
  std::size_t widest = 0;
  for (double eps : eps_grid) {
    GraphDomainSpec s = spec;
    s.epsilon = eps;
    out.samples.push_back(compute_wolff_sample(s, opt));
    if (out.samples.back().clipped_fraction > 1e-3)
      throw PoorFit("clipped fraction " + std::to_string(out.samples.back().clipped_fraction) + " at epsilon " +
                    std::to_string(eps));
    if (std::abs(eps) > std::abs(e.empty() ? 0.0 : e[widest])) widest = e.size();
    e.push_back(eps);
    v.push_back(out.samples.back().I);
  }
  out.fit = fit_taylor(e, v);
  if (require_good_fit && out.fit.r_squared < 0.99)
    throw PoorFit("R^2 = " + std::to_string(out.fit.r_squared) + " below 0.99");
  GraphDomainSpec big = spec;
  big.epsilon = e[widest];
  big.R *= 2;
  big.H *= 2;
  double scale = 0.0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  const double diff = std::abs(compute_wolff_sample(big, opt).I - v[widest]);
  out.truncation_change = scale > 0.0 ? diff / scale : diff;
  return out;
}

struct SignRow {
  double p = 0.0;
  double epsilon = 0.0;
  double I = 0.0;
  double truncation_error = 0.0;
  double resolution_error = 0.0;
  bool conclusive = false;
  int sign = 0;
  std::string prediction;

  double error_estimate() const { return truncation_error + resolution_error; }
};

/// I at one (p, ε) with error estimates from doubling (R, H) and halving the
/// graph mesh size. Conclusive when |I| ≥ 3 × the summed estimate.
inline SignRow sign_at(const GraphDomainSpec& spec, const WolffOptions& opt = {}) {
  SignRow row;
  row.p = spec.p;
  row.epsilon = spec.epsilon;
  row.I = compute_wolff_sample(spec, opt).I;
  GraphDomainSpec big = spec;
  big.R *= 2;
  big.H *= 2;
  row.truncation_error = std::abs(compute_wolff_sample(big, opt).I - row.I);
  WolffOptions fine = opt;
  fine.grading *= 2;
  row.resolution_error = std::abs(compute_wolff_sample(spec, fine).I - row.I);
  row.conclusive = std::abs(row.I) >= 3.0 * row.error_estimate();
  if (row.conclusive) {
    row.sign = row.I > 0.0 ? 1 : -1;
    row.prediction = row.sign > 0 ? "dim < n-1" : "dim > n-1";
  } else {
    row.prediction = "ambiguous";
  }
  return row;
}

inline std::vector<SignRow> sign_scan(const GraphDomainSpec& spec, std::span<const double> p_list, double epsilon,
                                      const WolffOptions& opt = {}) {
  std::vector<SignRow> rows;
  for (double p : p_list) {
    GraphDomainSpec s = spec;
    s.p = p;
    s.epsilon = epsilon;
    rows.push_back(sign_at(s, opt));
  }
  return rows;
}

/// The sign of I at this (p, ε); throws AmbiguousSign when inconclusive.
inline int conclusive_sign(const SignRow& row) {
  if (!row.conclusive)
    throw AmbiguousSign("|I| = " + std::to_string(std::abs(row.I)) + " is below 3x its error estimate " +
                        std::to_string(row.error_estimate()) + " at p = " + std::to_string(row.p));
  return row.sign;
}

struct RatioRow {
  double p = 0.0;
  double I_tilde = 0.0;
  double error = 0.0;
  double ratio = 0.0;
  bool conclusive = false;
};

/// Ratio rows against the p = 2 row. Rows are inconclusive when either I is
/// within 3 error estimates of zero.
inline std::vector<RatioRow> ratio_rows(const SignRow& base, std::span<const SignRow> rows) {
  std::vector<RatioRow> out;
  for (const auto& r : rows) {
    RatioRow row;
    row.p = r.p;
    row.I_tilde = r.I;
    row.error = r.error_estimate();
    row.ratio = r.p == 2.0 ? 1.0 : r.I / base.I;
    row.conclusive = r.conclusive && base.conclusive;
    out.push_back(row);
  }
  return out;
}

/// Ĩ(φ, p) / Ĩ(φ, 2) for the graph of the piecewise-linear φ = ε·θ̂.
inline std::vector<RatioRow> ratio_in_p(const GraphDomainSpec& spec, std::span<const double> p_grid,
                                        const WolffOptions& opt = {}) {
  GraphDomainSpec s2 = spec;
  s2.p = 2.0;
  const auto base = sign_at(s2, opt);
  std::vector<SignRow> rows;
  for (double p : p_grid) {
    if (p == 2.0) {
      rows.push_back(base);
      continue;
    }
    GraphDomainSpec s = spec;
    s.p = p;
    rows.push_back(sign_at(s, opt));
  }
  return ratio_rows(base, rows);
}

struct WolffFitRow {
  double p = 0.0;
  double analytic_a2 = 0.0;
  DdIResult result;
};

struct WolffReport {
  std::vector<WolffFitRow> fits;
  double sign_epsilon = 0.0;
  std::vector<SignRow> sign_table;
  double eta = 0.2;
  std::vector<RatioRow> ratio_table;
};

/// Taylor fits over the ε-grid and sign rows at sign_epsilon for every p;
/// the ratio table covers the p with |p − 2| < η.
inline WolffReport wolff_report(const GraphDomainSpec& spec, std::span<const double> p_grid,
                                std::span<const double> eps_grid, double sign_epsilon, double eta = 0.2,
                                const WolffOptions& opt = {}) {
  WolffReport rep;
  rep.sign_epsilon = sign_epsilon;
  rep.eta = eta;
  for (double p : p_grid) {
    GraphDomainSpec s = spec;
    s.p = p;
    rep.fits.push_back({p, analytic_a2(spec.theta_hat, p), ddI_fd(s, eps_grid, opt, false)});
  }
  rep.sign_table = sign_scan(spec, p_grid, sign_epsilon, opt);
  std::vector<SignRow> window;
  std::optional<SignRow> base;
  for (const auto& r : rep.sign_table) {
    if (std::abs(r.p - 2.0) < eta) window.push_back(r);
    if (r.p == 2.0) base = r;
  }
  if (!window.empty()) {
    if (!base) {
      GraphDomainSpec s = spec;
      s.p = 2.0;
      s.epsilon = sign_epsilon;
      base = sign_at(s, opt);
    }
    rep.ratio_table = ratio_rows(*base, window);
  }
  return rep;
}

/// Relative change of I when (R, H) doubles.
inline double truncation_study(const GraphDomainSpec& spec, const WolffOptions& opt = {}) {
  const double a = compute_wolff_sample(spec, opt).I;
  GraphDomainSpec big = spec;
  big.R *= 2;
  big.H *= 2;
  const double b = compute_wolff_sample(big, opt).I;
  return std::abs(b - a) / std::abs(b);
}

// ---------------------------------------------------------------------------
// Snowflake experiment

struct SnowflakeDomainOptions {
  /// Flat extension of the chain beyond each end.
  double margin = 0.5;
  double height = 1.0;
};

/// The region above the chain, closed by flat extensions and a box of the
/// given height. The chain and its extensions are graph-marked. A zero
/// margin closes the box directly at the chain ends.
inline PolygonDomain snowflake_domain(const BoundaryChain& chain, const SnowflakeDomainOptions& opt = {}) {
  if (opt.margin < 0.0) throw DegenerateInput("margin must be nonnegative");
  const Vec2 first = chain.vertices.front(), last = chain.vertices.back();
  const double xl = first.x - opt.margin, xr = last.x + opt.margin;
  std::vector<Vec2> pts;
  std::vector<BoundaryMarker> marks;
  if (opt.margin > 0.0) {
    pts.push_back({xl, first.y});
    marks.push_back(BoundaryMarker::graph);
  }
  for (const auto& v : chain.vertices) {
    pts.push_back(v);
    marks.push_back(BoundaryMarker::graph);
  }
  if (opt.margin > 0.0) {
    pts.push_back({xr, last.y});
    marks.push_back(BoundaryMarker::artificial_side);
  } else {
    marks.back() = BoundaryMarker::artificial_side;
  }
  pts.push_back({xr, opt.height});
  marks.push_back(BoundaryMarker::artificial_top);
  pts.push_back({xl, opt.height});
  marks.push_back(BoundaryMarker::artificial_side);
  PolygonDomain d;
  d.add_loop(pts, marks);
  return d;
}

struct SnowflakeSolve {
  BoundaryChain chain;
  TriMesh mesh;
  PSolution solution;
  BoundaryMeasure measure;  // restricted to the window
  double seconds = 0.0;
};

struct DichotomyOptions {
  double p = 3.0;
  SnowflakeDomainOptions domain{};
  double h_max = 0.1;
  /// Graph edges are at most h_max / grading.
  double grading = 64.0;
  int samples = 1024;
  std::uint64_t seed = 1;
  double r_min = 2e-4;
  double r_max = 0.1;
  int whitney_depth = 1;
  SolverOptions solver{};
};

/// Window |x₁| ≤ 1/2, |x₂| ≤ 1 over which the measure is analysed.
inline Box snowflake_window() { return {{-0.5, -1.0}, {0.5, 1.0}}; }

inline SnowflakeSolve solve_snowflake(const BoundaryChain& chain, const DichotomyOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  SnowflakeSolve out;
  out.chain = chain;
  out.mesh = triangulate(snowflake_domain(chain, opt.domain), opt.h_max, opt.grading);
  const auto graph = out.mesh.marker_flags(BoundaryMarker::graph);
  std::vector<double> data(out.mesh.vertices.size(), 0.0);
  for (std::size_t v = 0; v < data.size(); ++v)
    if (!graph[v]) data[v] = out.mesh.vertices[v].y;
  out.solution = solve(out.mesh, {opt.p, data, 0.0}, opt.solver);
  out.measure = restrict_to_window(riesz_weights(out.solution, out.mesh), snowflake_window());
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

struct GenerationResult {
  int generation = 0;
  std::size_t chain_segments = 0;
  std::size_t triangles = 0;
  double total_mass = 0.0;
  int clamped = 0;
  DimensionEstimate dimension;
  double seconds = 0.0;
};

struct DichotomyReport {
  double p = 0.0;
  std::vector<GenerationResult> generations;
};

/// Builds the snowflake generation by generation, solves on each, and
/// estimates the μ-weighted mean local dimension of the window measure.
inline DichotomyReport dichotomy_experiment(const BlipTemplate& tpl, std::span<const int> generations,
                                            const DichotomyOptions& opt = {}) {
  DichotomyReport rep;
  rep.p = opt.p;
  for (int m : generations) {
    const auto chain = generate_snowflake(tpl, m, opt.whitney_depth);
    const auto s = solve_snowflake(chain, opt);
    GenerationResult g;
    g.generation = m;
    g.chain_segments = chain.num_segments();
    g.triangles = s.mesh.triangles.size();
    g.total_mass = s.measure.total_mass();
    g.clamped = s.measure.clamped;
    const MeasureIndex idx(s.measure);
    g.dimension = dimension_spectrum(s.measure, idx, opt.samples, opt.seed, opt.r_min, opt.r_max);
    g.seconds = s.seconds;
    rep.generations.push_back(std::move(g));
  }
  return rep;
}

}  // namespace wolff_lab

#endif  // WOLFF_LAB_WOLFF_HPP
