#ifndef WOLFF_LAB_PIPELINE_HPP
#define WOLFF_LAB_PIPELINE_HPP

// snowflake → mesh → solve → measure → dim (→ enlarge), and the Wolff
// integral study, driven by an ExperimentConfig.

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "wolff_lab/config.hpp"
#include "wolff_lab/enlarge.hpp"
#include "wolff_lab/io.hpp"
#include "wolff_lab/svg.hpp"
#include "wolff_lab/wolff.hpp"

namespace wolff_lab {

/// An error raised inside a named pipeline stage.
class StageError : public Error {
 public:
  StageError(const std::string& stage, const std::string& what) : Error("stage '" + stage + "': " + what) {}
};

struct RunResult {
  Json report;
  /// 0 success, 1 failed check, 2 inconclusive.
  int exit_code = 0;
  std::vector<std::string> files;
};

namespace plots {

inline svg::Plot make_plot(std::string title, std::string x_label, std::string y_label) {
  svg::Plot plot;
  plot.title = std::move(title);
  plot.x_label = std::move(x_label);
  plot.y_label = std::move(y_label);
  return plot;
}

inline svg::Series make_series(std::string label, bool line = true, bool markers = true,
                               std::string color = svg::palette().front()) {
  svg::Series s;
  s.label = std::move(label);
  s.line = line;
  s.markers = markers;
  s.color = std::move(color);
  return s;
}

inline svg::Plot dimension_vs_generation(std::span<const GenerationResult> gens, double p) {
  auto plot = make_plot("Mean local dimension, p = " + svg::detail::num(p), "generation", "mu-weighted mean local dimension");
  auto s = make_series("mean +/- std");
  for (const auto& g : gens) {
    s.points.push_back({static_cast<double>(g.generation), g.dimension.mu_weighted_mean});
    s.errors.push_back(g.dimension.mu_weighted_std);
  }
  plot.series.push_back(std::move(s));
  plot.y_refs.push_back(1.0);
  return plot;
}

inline svg::Plot integral_vs_epsilon(const WolffReport& rep) {
  auto plot = make_plot("Wolff integral I(eps)", "eps", "I");
  for (std::size_t k = 0; k < rep.fits.size(); ++k) {
    const auto& f = rep.fits[k];
    const auto& color = svg::palette()[k % svg::palette().size()];
    auto pts = make_series("p = " + svg::detail::num(f.p), false, true, color);
    double lo = 0.0, hi = 0.0;
    for (const auto& s : f.result.samples) {
      pts.points.push_back({s.epsilon, s.I});
      lo = std::min(lo, s.epsilon);
      hi = std::max(hi, s.epsilon);
    }
    auto fit = make_series("fit", true, false, color);
    for (int i = 0; i <= 64; ++i) {
      const double e = lo + (hi - lo) * i / 64.0;
      fit.points.push_back({e, f.result.fit.a2 * e * e + f.result.fit.a3 * e * e * e});
    }
    plot.series.push_back(std::move(pts));
    plot.series.push_back(std::move(fit));
  }
  return plot;
}

inline svg::Plot second_derivative_vs_p(const WolffReport& rep, const PiecewiseLinear& theta) {
  auto plot = make_plot("I''(0) against p", "p", "I''(0)");
  std::vector<const WolffFitRow*> rows;
  for (const auto& f : rep.fits) rows.push_back(&f);
  std::ranges::sort(rows, {}, &WolffFitRow::p);
  auto fitted = make_series("fitted", false);
  for (const auto* f : rows) {
    fitted.points.push_back({f->p, f->result.fit.ddI0()});
    fitted.errors.push_back(f->result.fit.ddI0_stderr());
  }
  plot.series.push_back(std::move(fitted));
  if (!rows.empty()) {
    auto exact = make_series("analytic", true, false, "#d62728");
    const double lo = std::min(rows.front()->p, 1.5), hi = std::max(rows.back()->p, 3.0);
    for (int i = 0; i <= 64; ++i) {
      const double p = lo + (hi - lo) * i / 64.0;
      exact.points.push_back({p, 2.0 * analytic_a2(theta, p)});
    }
    plot.series.push_back(std::move(exact));
  }
  plot.y_refs.push_back(0.0);
  return plot;
}

inline svg::Plot enlarged_boundary(const EnlargedDomain& d) {
  auto plot = make_plot("Enlarged boundary, eps = " + svg::detail::num(d.epsilon), "x", "y");
  auto base = make_series("base chain", true, false, "#7f7f7f");
  for (const auto& v : d.base.vertices) base.points.push_back(v);
  auto plus = make_series("enlarged", true, false);
  for (const auto& v : d.boundary)
    if (d.window.contains(v)) plus.points.push_back(v);
  auto K = make_series("K", false, true, "#d62728");
  K.points = d.K;
  plot.series = {std::move(base), std::move(plus), std::move(K)};
  return plot;
}

}  // namespace plots

namespace detail {

class StageClock {
 public:
  template <class F>
  auto run(const std::string& name, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    struct Record {
      StageClock* self;
      std::string name;
      std::chrono::steady_clock::time_point t0;
      ~Record() { self->seconds_[name] += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); }
    } rec{this, name, t0};
    try {
      return f();
    } catch (const Inconclusive&) {
      throw;
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(name, e.what());
    }
  }
  const std::map<std::string, double>& seconds() const { return seconds_; }

 private:
  std::map<std::string, double> seconds_;
};

inline std::string dimension_csv(const DimensionEstimate& d) {
  std::ostringstream os;
  os << "x,y,slope,r_squared,weight\n" << std::setprecision(17);
  for (const auto& s : d.samples) os << s.center.x << ',' << s.center.y << ',' << s.slope << ',' << s.r_squared << ',' << s.weight << '\n';
  return os.str();
}

inline std::string wolff_csv(const WolffReport& rep) {
  std::ostringstream os;
  os << "p,epsilon,I,I_box,I_tail,clipped_fraction\n" << std::setprecision(17);
  for (const auto& f : rep.fits)
    for (const auto& s : f.result.samples)
      os << f.p << ',' << s.epsilon << ',' << s.I << ',' << s.I_box << ',' << s.I_tail << ',' << s.clipped_fraction << '\n';
  return os.str();
}

}  // namespace detail

inline WolffOptions wolff_options(const ExperimentConfig& c) {
  WolffOptions opt;
  opt.h_max = c.wolff_h;
  opt.grading = c.wolff_grading;
  opt.solver.tol = c.solve_tol;
  return opt;
}

inline GraphDomainSpec wolff_spec(const ExperimentConfig& c) {
  GraphDomainSpec s;
  s.theta_hat.knots = c.wolff_theta;
  s.R = c.wolff_R;
  s.H = c.wolff_H;
  s.p = c.p;
  return s;
}

inline DichotomyOptions dichotomy_options(const ExperimentConfig& c) {
  DichotomyOptions opt;
  opt.p = c.p;
  opt.domain.margin = c.domain_margin;
  opt.domain.height = c.domain_height;
  opt.h_max = c.mesh_h;
  opt.grading = c.mesh_grading;
  opt.samples = c.dim_samples;
  opt.seed = c.dim_seed;
  opt.r_min = c.dim_r_min;
  opt.r_max = c.dim_r_max;
  opt.whitney_depth = c.whitney_depth;
  opt.solver.tol = c.solve_tol;
  return opt;
}

/// Runs the configured stages and writes report.json, CSV tables and SVG
/// plots into out_dir.
inline RunResult run_pipeline(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  RunResult res;
  detail::StageClock clock;
  Json rep = io::document("run_report");
  rep["tool_version"] = kToolVersion;
  rep["config_hash"] = config_hash(cfg);
  Json config = Json::object();
  for (const auto& [k, v] : config_entries(cfg)) config[k] = v;
  rep["config"] = std::move(config);
  Json checks = Json::array();
  Json notes = Json::array();
  bool inconclusive = false;
  auto write = [&](const std::string& name, const std::string& text) {
    io::write_text((out_dir / name).string(), text);
    res.files.push_back(name);
  };
  auto check = [&](const std::string& name, double value, double target, double tol) {
    const bool ok = std::abs(value - target) <= tol;
    checks.push_back({{"name", name}, {"value", value}, {"target", target}, {"tolerance", tol}, {"passed", ok}});
  };

  // Geometry chain of stages, as far as the last requested one.
  const std::vector<std::string> chain_stages{"snowflake", "mesh", "solve", "measure", "dim", "enlarge"};
  int depth = -1;
  for (int k = 0; k < static_cast<int>(chain_stages.size()); ++k)
    if (cfg.has_stage(chain_stages[k])) depth = k;
  auto wants = [&](const char* s) { return std::ranges::find(chain_stages, s) - chain_stages.begin() <= depth; };

  if (depth >= 0) {
    if (cfg.generations.empty()) throw ConfigError("generations must not be empty");
    const auto opt = dichotomy_options(cfg);
    const auto tpl = clock.run("snowflake", [&] {
      return build_template(cfg.template_phi, cfg.template_N, cfg.template_b, cfg.template_theta0);
    });
    Json gens = Json::array();
    std::vector<GenerationResult> dims;
    std::optional<SnowflakeSolve> last;
    for (int m : cfg.generations) {
      Json g;
      g["generation"] = m;
      const auto chain = clock.run("snowflake", [&] { return generate_snowflake(tpl, m, cfg.whitney_depth); });
      g["chain_segments"] = chain.num_segments();
      g["chain_length"] = chain.length();
      write("chain_g" + std::to_string(m) + ".json", io::to_json(chain).dump(2) + "\n");
      if (wants("mesh")) {
        SnowflakeSolve s;
        s.chain = chain;
        s.mesh = clock.run("mesh", [&] { return triangulate(snowflake_domain(chain, opt.domain), opt.h_max, opt.grading); });
        g["triangles"] = s.mesh.triangles.size();
        g["mesh_vertices"] = s.mesh.vertices.size();
        g["min_angle_degrees"] = s.mesh.min_angle_degrees();
        if (wants("solve")) {
          s.solution = clock.run("solve", [&] {
            const auto graph = s.mesh.marker_flags(BoundaryMarker::graph);
            std::vector<double> data(s.mesh.vertices.size(), 0.0);
            for (std::size_t v = 0; v < data.size(); ++v)
              if (!graph[v]) data[v] = s.mesh.vertices[v].y;
            return solve(s.mesh, {cfg.p, data, 0.0}, opt.solver);
          });
          g["solver"] = {{"iterations", s.solution.iterations},
                         {"stages", s.solution.stages},
                         {"residual_norm", s.solution.residual_norm},
                         {"energy", s.solution.energy}};
        }
        if (wants("measure")) {
          s.measure = clock.run("measure", [&] {
            return restrict_to_window(riesz_weights(s.solution, s.mesh), snowflake_window());
          });
          g["measure"] = {{"nodes", s.measure.nodes.size()},
                          {"total_mass", s.measure.total_mass()},
                          {"clamped", s.measure.clamped},
                          {"most_negative", s.measure.most_negative}};
          write("measure_g" + std::to_string(m) + ".csv", io::measure_csv(s.measure));
        }
        if (wants("dim")) {
          GenerationResult r;
          r.generation = m;
          r.dimension = clock.run("dim", [&] {
            const MeasureIndex idx(s.measure);
            return dimension_spectrum(s.measure, idx, opt.samples, opt.seed, opt.r_min, opt.r_max);
          });
          g["dimension"] = {{"mu_weighted_mean", r.dimension.mu_weighted_mean},
                            {"mu_weighted_std", r.dimension.mu_weighted_std},
                            {"standard_error", r.dimension.mu_weighted_std / std::sqrt(double(r.dimension.samples.size()))},
                            {"samples", r.dimension.samples.size()},
                            {"sampled_mass", r.dimension.sampled_mass},
                            {"r_min", r.dimension.r_min},
                            {"r_max", r.dimension.r_max}};
          write("dimension_g" + std::to_string(m) + ".csv", detail::dimension_csv(r.dimension));
          if (!std::isnan(cfg.expect_dim_mean))
            check("dimension mean, generation " + std::to_string(m), r.dimension.mu_weighted_mean, cfg.expect_dim_mean,
                  cfg.expect_dim_tol);
          dims.push_back(std::move(r));
        }
        last = std::move(s);
      }
      gens.push_back(std::move(g));
    }
    rep["generations"] = std::move(gens);
    if (!dims.empty()) write("dimension_vs_generation.svg", svg::render(plots::dimension_vs_generation(dims, cfg.p)));

    if (wants("enlarge")) {
      Json e;
      try {
        clock.run("enlarge", [&] {
          double alpha = cfg.enlarge_alpha;
          if (alpha == 0.0) {
            const double deficit = 1.0 - dims.back().dimension.mu_weighted_mean;
            if (!(deficit > 0.0))
              throw EmptyCandidate("no dimension deficit at generation " + std::to_string(cfg.generations.back()));
            alpha = std::min(deficit / 2.0, 0.99);
          }
          e["alpha"] = alpha;
          const MeasureIndex idx(last->measure);
          const auto K = extract_singular_candidate(last->measure, idx, alpha, cfg.enlarge_rho, cfg.enlarge_scales);
          e["K_points"] = K.points.size();
          e["K_mass"] = K.mass;
          e["K_mass_fraction"] = K.mass / last->measure.total_mass();
          e["passing_nodes"] = K.passing;
          EnlargeOptions eo;
          eo.pitch = cfg.enlarge_pitch;
          eo.segments_per_circle = cfg.enlarge_segments;
          const auto d = enlarge_domain(last->chain, K.points, cfg.enlarge_eps, snowflake_window(), eo);
          e["epsilon"] = d.epsilon;
          e["cube_count"] = d.cube_count;
          e["balls"] = d.balls.size();
          e["boundary_length"] = boundary_length_estimate(d, snowflake_window());
          EnlargedDomain bare = d;
          bare.balls.clear();
          bare.boundary = enlarged_boundary(d.base, {}, eo);
          e["base_length"] = boundary_length_estimate(bare, snowflake_window());
          write("enlarged.json", io::to_json(d).dump(2) + "\n");
          write("enlarged.svg", svg::render(plots::enlarged_boundary(d)));
        });
      } catch (const Inconclusive& ex) {
        inconclusive = true;
        e["inconclusive"] = ex.what();
        notes.push_back(std::string("enlarge: ") + ex.what());
      }
      rep["enlarge"] = std::move(e);
    }
  }

  if (cfg.has_stage("wolff")) {
    const auto spec = wolff_spec(cfg);
    const auto w = clock.run("wolff", [&] {
      validate(spec);
      return wolff_report(spec, cfg.wolff_p_grid, cfg.wolff_eps_grid, cfg.wolff_sign_eps, cfg.wolff_eta, wolff_options(cfg));
    });
    Json wj = io::to_json(w);
    wj.erase("format_version");
    wj.erase("kind");
    rep["wolff"] = std::move(wj);
    for (const auto& row : w.sign_table)
      if (!row.conclusive) {
        inconclusive = true;
        notes.push_back("wolff: sign at p = " + config_detail::format_double(row.p) + " is ambiguous");
      }
    if (!std::isnan(cfg.expect_a2_rel_tol))
      for (const auto& f : w.fits)
        if (f.analytic_a2 != 0.0)
          check("a2 at p = " + config_detail::format_double(f.p), f.result.fit.a2, f.analytic_a2,
                cfg.expect_a2_rel_tol * std::abs(f.analytic_a2));
    write("wolff_samples.csv", detail::wolff_csv(w));
    write("wolff_I_vs_eps.svg", svg::render(plots::integral_vs_epsilon(w)));
    write("wolff_ddI_vs_p.svg", svg::render(plots::second_derivative_vs_p(w, spec.theta_hat)));
  }

  bool failed = false;
  for (const auto& c : checks) failed = failed || !c["passed"].get<bool>();
  rep["checks"] = std::move(checks);
  rep["notes"] = std::move(notes);
  res.exit_code = failed ? 1 : inconclusive ? 2 : 0;
  rep["status"] = failed ? "failed" : inconclusive ? "inconclusive" : "ok";
  Json files = Json::array();
  for (const auto& f : res.files) files.push_back(f);
  files.push_back("report.json");
  rep["files"] = std::move(files);
  if (cfg.report_timings) {
    Json t = Json::object();
    for (const auto& [k, v] : clock.seconds()) t[k] = v;
    rep["timings_seconds"] = std::move(t);
  }
  io::write_json((out_dir / "report.json").string(), rep);
  res.files.push_back("report.json");
  res.report = std::move(rep);
  return res;
}

/// Human-readable summary of a run report.
inline std::string summarize_report(const Json& rep) {
  io::expect_kind(rep, "run_report");
  std::ostringstream os;
  os << "wolff-lab " << rep.value("tool_version", "?") << "  config " << rep.value("config_hash", "?") << "  status "
     << rep.value("status", "?") << "\n";
  if (rep.contains("generations"))
    for (const auto& g : rep["generations"]) {
      os << "generation " << g["generation"] << ": " << g["chain_segments"] << " segments";
      if (g.contains("triangles")) os << ", " << g["triangles"] << " triangles";
      if (g.contains("measure")) os << ", mass " << g["measure"]["total_mass"];
      if (g.contains("dimension"))
        os << ", dimension " << g["dimension"]["mu_weighted_mean"] << " +/- " << g["dimension"]["mu_weighted_std"];
      os << "\n";
    }
  if (rep.contains("wolff")) {
    for (const auto& f : rep["wolff"]["fits"])
      os << "p = " << f["p"] << ": a2 = " << f["a2"] << " +/- " << f["a2_stderr"] << " (analytic " << f["analytic_a2"]
         << "), R^2 = " << f["r_squared"] << "\n";
    for (const auto& r : rep["wolff"]["sign_table"])
      os << "sign at p = " << r["p"] << ", eps = " << r["epsilon"] << ": I = " << r["I"] << " -> "
         << r["prediction"].get<std::string>() << "\n";
  }
  if (rep.contains("enlarge")) os << "enlarge: " << rep["enlarge"].dump() << "\n";
  for (const auto& c : rep.value("checks", Json::array()))
    os << "check " << c["name"].get<std::string>() << ": " << c["value"] << " vs " << c["target"] << " +/- "
       << c["tolerance"] << " " << (c["passed"].get<bool>() ? "PASS" : "FAIL") << "\n";
  for (const auto& n : rep.value("notes", Json::array())) os << "note: " << n.get<std::string>() << "\n";
  if (rep.contains("timings_seconds"))
    for (const auto& [k, v] : rep["timings_seconds"].items()) os << "time " << k << ": " << v << " s\n";
  return os.str();
}

}  // namespace wolff_lab

#endif  // WOLFF_LAB_PIPELINE_HPP
