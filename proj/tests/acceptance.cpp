// Acceptance suite: one PASS/FAIL line per criterion with pinned tolerances
// and runtime budgets. Exit status is 0 only when every selected criterion
// passes.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "support.hpp"
#include "whitney_oracle.hpp"
#include "wolff_lab/dimension.hpp"
#include "wolff_lab/enlarge.hpp"
#include "wolff_lab/measure.hpp"
#include "wolff_lab/plaplace.hpp"
#include "wolff_lab/wolff.hpp"

using namespace wolff_lab;
using namespace wolff_lab::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double x2(const Vec2& x) { return x.y; }

GraphDomainSpec tent_spec(double p) { return {tent(), 0.0, 16.0, 16.0, p}; }

const std::vector<double> kEpsGrid{-0.08, -0.04, -0.02, -0.01, 0.01, 0.02, 0.04, 0.08};

BlipTemplate dichotomy_template() { return build_template({{-0.45, 0.0}, {0.0, 0.1}, {0.45, 0.0}}, 1, 0.25, 0.25); }

// Results shared between criteria.
struct Shared {
  std::optional<double> flat_std;
  std::optional<int> sign_p3;
};

Outcome affine_exactness() {
  double worst = 0.0;
  for (const auto& dom : {rectangle(0, 0, 1, 1), l_shape(), annulus(0.5, 1.0, 0.2)}) {
    const auto m = triangulate(dom, 0.1);
    for (double p : {1.5, 2.0, 3.0, 5.0}) {
      const auto data = sample_vertices(m, x2);
      worst = std::max(worst, max_abs_diff(solve(m, {p, data, 0.0}).nodal_values, data));
    }
  }
  return {worst <= 1e-10, fmt("max error %.2e over 3 polygons x p in {1.5,2,3,5} (tol 1e-10)", worst)};
}

Outcome radial_convergence() {
  const double p = 3.0, expo = (p - 2.0) / (p - 1.0);
  auto exact = [&](const Vec2& x) { return std::pow(norm(x), expo); };
  std::vector<double> errs;
  for (double h : {0.1, 0.05, 0.025, 0.0125}) {
    const auto m = triangulate(annulus(0.5, 1.0, h), h);
    const auto data = sample_vertices(m, exact);
    errs.push_back(max_abs_diff(solve(m, {p, data, 0.0}).nodal_values, data));
  }
  double worst = 0.0;
  std::string ratios;
  for (std::size_t k = 1; k < errs.size(); ++k) {
    worst = std::max(worst, errs[k] / errs[k - 1]);
    ratios += fmt("%s%.3f", k > 1 ? ", " : "", errs[k] / errs[k - 1]);
  }
  return {worst <= 0.7, "error ratios " + ratios + " (tol 0.7)"};
}

Outcome second_derivative() {
  const auto r3 = ddI_fd(tent_spec(3.0), kEpsGrid);
  const auto r15 = ddI_fd(tent_spec(1.5), kEpsGrid);
  const auto r2 = ddI_fd(tent_spec(2.0), kEpsGrid, {}, false);
  const double d = tent().dirichlet_integral();
  const double e3 = 0.5 * d, e15 = -1.0 * d;
  const double rel3 = std::abs(r3.fit.ddI0() - e3) / std::abs(e3);
  const double rel15 = std::abs(r15.fit.ddI0() - e15) / std::abs(e15);
  const double frac2 = std::abs(r2.fit.a2) / std::abs(r3.fit.a2);
  const bool pass = rel3 <= 0.2 && rel15 <= 0.2 && frac2 <= 0.1;
  return {pass, fmt("I''(0): p=3 %.4f vs %.4f (rel %.3f), p=1.5 %.4f vs %.4f (rel %.3f), tol 0.2; "
                    "|a2(p=2)|/|a2(p=3)| = %.4f (tol 0.1)",
                    r3.fit.ddI0(), e3, rel3, r15.fit.ddI0(), e15, rel15, frac2)};
}

Outcome sign_dichotomy(Shared& shared) {
  const std::vector<double> ps{3.0, 1.5, 2.0};
  const auto rows = sign_scan(tent_spec(3.0), ps, 0.08);
  auto sign_of = [](const SignRow& r) -> int {
    try {
      return conclusive_sign(r);
    } catch (const AmbiguousSign&) {
      return 0;
    }
  };
  const int s3 = sign_of(rows[0]), s15 = sign_of(rows[1]), s2 = sign_of(rows[2]);
  shared.sign_p3 = s3;
  return {s3 == 1 && s15 == -1 && s2 == 0,
          fmt("signs at eps 0.08: p=3 %+d (I=%.3e), p=1.5 %+d (I=%.3e), p=2 %s (I=%.3e)", s3, rows[0].I, s15,
              rows[1].I, s2 == 0 ? "ambiguous" : "conclusive", rows[2].I)};
}

Outcome calibration(Shared& shared) {
  const std::vector<int> gens{0};
  const auto flat = dichotomy_experiment(build_template({}, 1, 0.25, 0.25), gens, DichotomyOptions{});
  const auto& fd = flat.generations.front().dimension;
  shared.flat_std = fd.mu_weighted_std;
  const auto mu = cantor_measure(8);
  const MeasureIndex idx(mu);
  const auto est = dimension_spectrum(mu, idx, 128, 3, 1e-3, 0.1);
  const double cantor = std::log(2.0) / std::log(3.0);
  const bool pass = std::abs(fd.mu_weighted_mean - 1.0) <= 0.03 && std::abs(est.mu_weighted_mean - cantor) <= 0.05;
  return {pass, fmt("flat mean %.4f (std %.2e, tol 0.03); Cantor mean %.4f vs %.4f (tol 0.05)", fd.mu_weighted_mean,
                    fd.mu_weighted_std, est.mu_weighted_mean, cantor)};
}

Outcome dichotomy(const Shared& shared) {
  if (!shared.flat_std || !shared.sign_p3) return {false, "needs criteria 4 and 5 in the same run"};
  const std::vector<int> gens{4};
  const auto rep = dichotomy_experiment(dichotomy_template(), gens, DichotomyOptions{});
  const auto& d = rep.generations.front().dimension;
  const double bar = 1.0 - 2.0 * *shared.flat_std;
  const double se = d.mu_weighted_std / std::sqrt(static_cast<double>(d.samples.size()));
  const double z = (1.0 - d.mu_weighted_mean) / se;
  const bool pass = *shared.sign_p3 == 1 && d.mu_weighted_mean < bar;
  return {pass, fmt("generation 4, p=3: mean %.4f vs bar %.4f (1 - 2 x flat std); std %.4f, SE %.4f, z %.2f; "
                    "sign of I at p=3 %+d",
                    d.mu_weighted_mean, bar, d.mu_weighted_std, se, z, *shared.sign_p3)};
}

Outcome comparability() {
  double worst_rel = 0.0;
  {
    const auto m = triangulate(rectangle(-1, 0, 1, 1), 0.05, 2.0);
    const TriangleLocator loc(m);
    BoundaryChain chain;
    chain.vertices = {{-1, 0}, {1, 0}};
    chain.faces = {{0, 1, 1}};
    const ChainIndex cidx(chain);
    const std::vector<double> scales{0.2, 0.4, 0.8};
    for (double p : {1.5, 2.0, 3.0}) {
      const auto sol = solve(m, {p, sample_vertices(m, x2), 0.0});
      const MeasureIndex mu(riesz_weights(sol, m));
      for (const auto& row : lemma36_check(sol, m, loc, mu, cidx, {0.1, 0.0}, scales)) {
        const double rt = row.r / 4;
        const double lhs = std::pow(rt / 2, p - 1);
        const double first = lhs / (std::pow(row.r, p - 2) * 2 * rt);
        const double second = lhs / (std::pow(row.r, p - 2) * rt);
        worst_rel = std::max({worst_rel, std::abs(row.lower_ratio - first) / first,
                              std::abs(row.upper_ratio - second) / second});
      }
    }
  }
  const auto chain = generate_snowflake(dichotomy_template(), 3);
  const auto s = solve_snowflake(chain, DichotomyOptions{});
  const TriangleLocator loc(s.mesh);
  const MeasureIndex mu(s.measure);
  const ChainIndex cidx(chain);
  const std::vector<double> scales{0.025, 0.05, 0.1, 0.2};
  double lo[2] = {1e300, 1e300}, hi[2] = {0.0, 0.0};
  for (int i = 0; i < 16; ++i) {
    const double target = -0.4 + 0.8 * i / 15.0;
    const Vec2 w = *std::ranges::min_element(chain.vertices, {}, [&](const Vec2& v) { return std::abs(v.x - target); });
    for (const auto& row : lemma36_check(s.solution, s.mesh, loc, mu, cidx, w, scales)) {
      lo[0] = std::min(lo[0], row.lower_ratio);
      hi[0] = std::max(hi[0], row.lower_ratio);
      lo[1] = std::min(lo[1], row.upper_ratio);
      hi[1] = std::max(hi[1], row.upper_ratio);
    }
  }
  const double spread = std::max(hi[0] / lo[0], hi[1] / lo[1]);
  return {worst_rel <= 0.02 && spread <= 100.0,
          fmt("half-plane max relative error %.4f (tol 0.02); generation-3 spread %.2f over 16 points x 4 scales "
              "(tol 100)",
              worst_rel, spread)};
}

Outcome whitney_oracle() {
  std::mt19937_64 rng(20260415);
  std::uniform_real_distribution<double> coord(-1.2, 1.2);
  std::uniform_real_distribution<double> tdist(4.0, 12.0);
  std::uniform_int_distribution<int> count(1, 5);
  int matches = 0;
  std::size_t cubes_total = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Vec2> K(count(rng));
    for (auto& x : K) x = {coord(rng), coord(rng)};
    const double t = tdist(rng);
    const Box w = trial % 2 ? Box{{-1.0, -1.0}, {1.0, 1.0}} : Box{{-0.5, -1.0}, {0.5, 1.0}};
    const auto cubes = whitney_cubes(K, w, t);
    cubes_total += cubes.size();
    matches += as_raw(cubes) == brute_whitney(K, w, t, 8);
  }
  return {matches == 100, fmt("%d/100 instances identical to brute force up to level 8 (%zu cubes)", matches,
                              cubes_total)};
}

Outcome flatness_scaling() {
  const auto chain = flat_chain();
  const std::vector<Vec2> K{{0.0, 0.0}};
  const Box window{{-0.5, -1.0}, {0.5, 1.0}};
  std::vector<double> worst;
  for (double eps : {0.01 - 1e-9, 0.0025}) {
    const auto d = enlarge_domain(chain, K, eps, window);
    const ChainIndex boundary(d.boundary);
    double m = 0.0;
    for (double x : {-0.25, 0.0, 0.125, 0.25})
      for (double r : {0.05, 0.1, 0.2}) {
        const Vec2 w{x, -eps * std::abs(x) / std::sqrt(1.0 - eps * eps)};
        m = std::max(m, reifenberg_delta(boundary, w, r).delta);
      }
    worst.push_back(m);
  }
  const double ratio = worst[1] / worst[0];
  return {worst[0] > 0.0 && ratio <= 0.6,
          fmt("max delta %.5f at eps 0.01, %.5f at eps 0.0025, ratio %.3f (tol 0.6)", worst[0], worst[1], ratio)};
}

// Dirichlet data vanishing on the graph and positive elsewhere.
std::vector<double> positive_data(const TriMesh& m) {
  const auto graph = m.marker_flags(BoundaryMarker::graph);
  auto d = sample_vertices(m, [](const Vec2& x) { return 1.0 + 0.2 * std::sin(3.0 * x.x) + 0.1 * x.y; });
  for (std::size_t v = 0; v < d.size(); ++v)
    if (graph[v]) d[v] = 0.0;
  return d;
}

Outcome riesz_and_gradient() {
  std::vector<std::pair<std::string, TriMesh>> meshes;
  meshes.emplace_back("square", triangulate(rectangle(0, 0, 1, 1), 0.06, 2.0));
  {
    PolygonDomain d;
    const auto s = BoundaryMarker::artificial_side;
    d.add_loop({{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}}, {BoundaryMarker::graph, s, s, s, s, s});
    meshes.emplace_back("L-shape", triangulate(d, 0.15));
  }
  meshes.emplace_back("annulus", triangulate(annulus(0.5, 1.0, 0.1), 0.1));
  meshes.emplace_back("snowflake g2", triangulate(snowflake_domain(generate_snowflake(dichotomy_template(), 2)), 0.1, 16.0));
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> U(-1, 1);
  double worst_closure = 0.0, worst_fd = 0.0;
  for (const auto& [name, m] : meshes) {
    std::vector<char> fixed(m.vertices.size(), 0);
    for (const auto& e : m.boundary_edges)
      if (e.marker != BoundaryMarker::graph) fixed[e.v0] = fixed[e.v1] = 1;
    for (double p : {1.5, 2.0, 3.0}) {
      SolverOptions opt;
      opt.tol = 1e-12;
      const auto sol = solve(m, {p, positive_data(m), 0.0}, opt);
      const auto mu = riesz_weights(sol, m);
      for (int trial = 0; trial < 3; ++trial) {
        std::vector<double> phi(m.vertices.size());
        for (std::size_t v = 0; v < phi.size(); ++v) phi[v] = fixed[v] ? 0.0 : U(rng);
        double bulk = 0.0, scale = 0.0;
        for (const auto& t : m.triangles) {
          const Vec2 &a = m.vertices[t[0]], &b = m.vertices[t[1]], &c = m.vertices[t[2]];
          const double d = orient(a, b, c);
          const std::array<Vec2, 3> g{perp(c - b) / d, perp(a - c) / d, perp(b - a) / d};
          Vec2 gu{}, gp{};
          for (int k = 0; k < 3; ++k) {
            gu = gu + g[k] * sol.nodal_values[t[k]];
            gp = gp + g[k] * phi[t[k]];
          }
          const double coef = std::pow(sol.reg_delta * sol.reg_delta + norm2(gu), (p - 2) / 2);
          bulk += 0.5 * d * coef * dot(gu, gp);
          scale += 0.5 * d * coef * norm(gu) * norm(gp);
        }
        double boundary = 0.0;
        for (std::size_t i = 0; i < mu.nodes.size(); ++i) boundary += phi[mu.mesh_vertex[i]] * mu.weights[i];
        worst_closure = std::max(worst_closure, std::abs(bulk + boundary) / scale);
      }
      std::vector<double> u = sol.nodal_values;
      for (auto& v : u) v += 1e-3 * U(rng);
      const double reg = 1e-3;
      const auto grad = nodal_residual(m, u, p, reg);
      for (int k = 0; k < 5; ++k) {
        std::vector<double> dir(u.size());
        for (auto& v : dir) v = U(rng);
        const double h = 1e-5;
        auto shifted = [&](double s) {
          std::vector<double> w = u;
          for (std::size_t i = 0; i < u.size(); ++i) w[i] += s * dir[i];
          return energy(m, w, p, reg);
        };
        const double fd = (8 * (shifted(h) - shifted(-h)) - (shifted(2 * h) - shifted(-2 * h))) / (12 * h);
        double an = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) an += grad[i] * dir[i];
        worst_fd = std::max(worst_fd, std::abs(fd - an) / std::abs(an));
      }
    }
  }
  return {worst_closure <= 1e-6 && worst_fd <= 1e-6,
          fmt("4 meshes x p in {1.5,2,3}: identity closure %.2e, gradient vs finite difference %.2e (tol 1e-6)",
              worst_closure, worst_fd)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only;
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  Shared shared;
  struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "affine exactness", 5, affine_exactness},
      {2, "radial oracle convergence", 120, radial_convergence},
      {3, "second derivative of the Wolff integral", 600, second_derivative},
      {4, "sign dichotomy", 600, [&] { return sign_dichotomy(shared); }},
      {5, "dimension estimator calibration", 60, [&] { return calibration(shared); }},
      {6, "dichotomy experiment", 900, [&] { return dichotomy(shared); }},
      {7, "measure-solution comparability", 300, comparability},
      {8, "Whitney oracle equivalence", 30, whitney_oracle},
      {9, "enlargement flatness scaling", 120, flatness_scaling},
      {10, "Riesz identity and gradient agreement", 60, riesz_and_gradient},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::ranges::find(only, c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_budget = secs <= c.budget_seconds;
    const bool pass = o.pass && in_budget;
    failed += !pass;
    std::printf("%s %2d %s: %s; %.1f s (budget %.0f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                secs, c.budget_seconds, in_budget ? "" : ", exceeded");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
