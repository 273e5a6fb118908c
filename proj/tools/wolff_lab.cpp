#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "wolff_lab/pipeline.hpp"

using namespace wolff_lab;

namespace {

std::optional<Box> parse_window(const std::vector<double>& w) {
  if (w.empty()) return std::nullopt;
  if (w.size() != 4) throw ConfigError("--window expects x0,y0,x1,y1");
  return Box{{w[0], w[1]}, {w[2], w[3]}};
}

std::string sibling(const std::string& out, const std::string& suffix) {
  std::filesystem::path p(out);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical laboratory for p-harmonic measure on Wolff snowflakes"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);

  // snowflake
  auto* snow = app.add_subcommand("snowflake", "Generate a snowflake approximant");
  std::string phi_file, snow_out;
  int N = 1, gens = 1, depth = 1;
  double b = 0.25, theta0 = 0.25;
  snow->add_option("--phi", phi_file, "Profile JSON with the template knots (flat when omitted)");
  snow->add_option("--N", N, "Template frequency")->capture_default_str();
  snow->add_option("--b", b, "Template half-width parameter")->capture_default_str();
  snow->add_option("--theta0", theta0, "Template slope bound")->capture_default_str();
  snow->add_option("--gens", gens, "Generation")->capture_default_str();
  snow->add_option("--depth", depth, "Whitney subdivision depth of new faces")->capture_default_str();
  snow->add_option("--out", snow_out, "Chain JSON")->required();

  // mesh
  auto* mesh_cmd = app.add_subcommand("mesh", "Triangulate a chain domain or polygon");
  std::string domain_file, mesh_out;
  double h = 0.1, grading = 64.0, margin = 0.5, height = 1.0;
  mesh_cmd->add_option("--domain", domain_file, "Chain or polygon JSON")->required();
  mesh_cmd->add_option("--h,--h-max", h, "Maximum edge length")->capture_default_str();
  mesh_cmd->add_option("--grading", grading, "Boundary edges are at most h / grading")->capture_default_str();
  mesh_cmd->add_option("--margin", margin, "Flat extension of a chain")->capture_default_str();
  mesh_cmd->add_option("--height", height, "Top of a chain domain")->capture_default_str();
  mesh_cmd->add_option("--out", mesh_out, "Mesh JSON")->required();

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "Solve the p-Laplace Dirichlet problem");
  std::string solve_mesh, bc = "graph-zero-linear-top", solve_out;
  double p = 3.0, tol = 0.0;
  solve_cmd->add_option("--mesh", solve_mesh, "Mesh JSON")->required();
  solve_cmd->add_option("--p", p, "Exponent")->capture_default_str();
  solve_cmd->add_option("--bc", bc, "Boundary condition")->check(CLI::IsMember({"graph-zero-linear-top"}))->capture_default_str();
  solve_cmd->add_option("--tol", tol, "Residual tolerance (0 = automatic)")->capture_default_str();
  solve_cmd->add_option("--out", solve_out, "Solution JSON")->required();

  // measure
  auto* measure_cmd = app.add_subcommand("measure", "Extract the boundary Riesz measure");
  std::string m_solution, m_mesh, m_out;
  std::vector<double> m_window;
  measure_cmd->add_option("--solution", m_solution, "Solution JSON")->required();
  measure_cmd->add_option("--mesh", m_mesh, "Mesh JSON")->required();
  measure_cmd->add_option("--window", m_window, "Restrict to x0,y0,x1,y1")->delimiter(',');
  measure_cmd->add_option("--out", m_out, "Measure CSV")->required();

  // dim
  auto* dim_cmd = app.add_subcommand("dim", "Estimate local dimensions of a boundary measure");
  std::string d_measure, d_chain, d_out;
  int samples = 1024;
  std::uint64_t seed = 1;
  double r_min = 2e-4, r_max = 0.1;
  std::vector<double> d_window{-0.5, -1.0, 0.5, 1.0};
  dim_cmd->add_option("--measure", d_measure, "Measure CSV")->required();
  dim_cmd->add_option("--chain", d_chain, "Chain JSON carrying the measure")->required();
  dim_cmd->add_option("--samples", samples, "Number of centers")->capture_default_str();
  dim_cmd->add_option("--seed", seed, "Sampling seed")->capture_default_str();
  dim_cmd->add_option("--r-min", r_min, "Smallest radius")->capture_default_str();
  dim_cmd->add_option("--r-max", r_max, "Largest radius")->capture_default_str();
  dim_cmd->add_option("--window", d_window, "Analysis window x0,y0,x1,y1")->delimiter(',')->capture_default_str();
  dim_cmd->add_option("--out", d_out, "Dimension report JSON")->required();

  // wolff
  auto* wolff_cmd = app.add_subcommand("wolff", "Wolff integral study on a graph domain");
  std::string theta_file, w_out;
  std::vector<double> p_grid{3.0, 1.5, 2.0};
  std::vector<double> eps_grid{-0.08, -0.04, -0.02, -0.01, 0.01, 0.02, 0.04, 0.08};
  double R = 16.0, H = 16.0, sign_eps = 0.08, eta = 0.2, w_h = 0.5, w_grading = 128.0;
  wolff_cmd->add_option("--theta", theta_file, "Profile JSON for the bump (unit tent when omitted)");
  wolff_cmd->add_option("--p-grid", p_grid, "Exponents")->delimiter(',')->capture_default_str();
  wolff_cmd->add_option("--eps-grid", eps_grid, "Amplitudes for the Taylor fit")->delimiter(',')->capture_default_str();
  wolff_cmd->add_option("--R", R, "Truncation half-width")->capture_default_str();
  wolff_cmd->add_option("--H", H, "Truncation height")->capture_default_str();
  wolff_cmd->add_option("--sign-eps", sign_eps, "Amplitude of the sign table")->capture_default_str();
  wolff_cmd->add_option("--eta", eta, "Half-width of the p-window for ratios")->capture_default_str();
  wolff_cmd->add_option("--h,--h-max", w_h, "Maximum edge length")->capture_default_str();
  wolff_cmd->add_option("--grading", w_grading, "Graph edges are at most h / grading")->capture_default_str();
  wolff_cmd->add_option("--out", w_out, "Wolff report JSON")->required();

  // enlarge
  auto* enlarge_cmd = app.add_subcommand("enlarge", "Enlarge a chain domain by Whitney balls around K");
  std::string e_chain, e_K, e_out;
  double e_eps = 0.005, pitch = 1e-4;
  int segments = 64;
  std::vector<double> e_window{-0.5, -1.0, 0.5, 1.0};
  enlarge_cmd->add_option("--chain", e_chain, "Chain JSON")->required();
  enlarge_cmd->add_option("--K", e_K, "Points JSON")->required();
  enlarge_cmd->add_option("--eps", e_eps, "Ball factor in (0, 0.01)")->capture_default_str();
  enlarge_cmd->add_option("--pitch", pitch, "Polygonization pitch")->capture_default_str();
  enlarge_cmd->add_option("--segments", segments, "Segments per full circle")->capture_default_str();
  enlarge_cmd->add_option("--window", e_window, "Window x0,y0,x1,y1")->delimiter(',')->capture_default_str();
  enlarge_cmd->add_option("--out", e_out, "Enlarged domain JSON")->required();

  // run
  auto* run_cmd = app.add_subcommand("run", "Run the configured pipeline");
  std::string config_file, preset_name, run_out;
  std::vector<std::string> overrides;
  auto* cfg_opt = run_cmd->add_option("--config", config_file, "Configuration file");
  run_cmd->add_option("--preset", preset_name, "Named preset")->check(CLI::IsMember(preset_names()))->excludes(cfg_opt);
  run_cmd->add_option("--set", overrides, "Extra 'key=value' settings applied last");
  run_cmd->add_option("--out", run_out, "Output directory")->required();

  // report
  auto* report_cmd = app.add_subcommand("report", "Summarize a run report");
  std::string report_in, report_out;
  report_cmd->add_option("--in", report_in, "report.json")->required();
  report_cmd->add_option("--out", report_out, "Write the summary here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*snow) {
      std::vector<Vec2> phi;
      if (!phi_file.empty()) phi = io::profile_from_json(io::read_json(phi_file));
      const auto chain = generate_snowflake(build_template(phi, N, b, theta0), gens, depth);
      io::write_json(snow_out, io::to_json(chain));
    } else if (*mesh_cmd) {
      const auto j = io::read_json(domain_file);
      PolygonDomain domain;
      if (j.value("kind", "") == "chain")
        domain = snowflake_domain(io::chain_from_json(j), {margin, height});
      else
        domain = io::polygon_from_json(j);
      io::write_json(mesh_out, io::to_json(triangulate(domain, h, grading)));
    } else if (*solve_cmd) {
      const auto mesh = io::mesh_from_json(io::read_json(solve_mesh));
      const auto graph = mesh.marker_flags(BoundaryMarker::graph);
      std::vector<double> data(mesh.vertices.size(), 0.0);
      for (std::size_t v = 0; v < data.size(); ++v)
        if (!graph[v]) data[v] = mesh.vertices[v].y;
      SolverOptions so;
      so.tol = tol;
      io::write_json(solve_out, io::to_json(solve(mesh, {p, data, 0.0}, so)));
    } else if (*measure_cmd) {
      const auto mesh = io::mesh_from_json(io::read_json(m_mesh));
      const auto sol = io::solution_from_json(io::read_json(m_solution), mesh);
      auto mu = riesz_weights(sol, mesh);
      if (const auto w = parse_window(m_window)) mu = restrict_to_window(mu, *w);
      io::write_text(m_out, io::measure_csv(mu));
    } else if (*dim_cmd) {
      auto mu = io::read_measure_csv(d_measure);
      const auto chain = io::chain_from_json(io::read_json(d_chain));
      double gap = 0.0;
      for (std::size_t k = 1; k < chain.vertices.size(); ++k)
        gap = std::max(gap, distance(chain.vertices[k - 1], chain.vertices[k]));
      io::attach_chain_support(mu, chain, gap * (1 + 1e-9));
      mu.window = parse_window(d_window);
      const MeasureIndex idx(mu);
      Json j = io::document("dimension_report");
      j["seed"] = seed;
      auto est = io::to_json(dimension_spectrum(mu, idx, samples, seed, r_min, r_max));
      for (auto& [k, v] : est.items()) j[k] = v;
      io::write_json(d_out, j);
    } else if (*wolff_cmd) {
      GraphDomainSpec spec;
      spec.theta_hat = theta_file.empty() ? tent() : PiecewiseLinear{io::profile_from_json(io::read_json(theta_file))};
      spec.R = R;
      spec.H = H;
      validate(spec);
      WolffOptions opt;
      opt.h_max = w_h;
      opt.grading = w_grading;
      const auto rep = wolff_report(spec, p_grid, eps_grid, sign_eps, eta, opt);
      io::write_json(w_out, io::to_json(rep));
      io::write_text(sibling(w_out, "_I_vs_eps.svg"), svg::render(plots::integral_vs_epsilon(rep)));
      io::write_text(sibling(w_out, "_ddI_vs_p.svg"), svg::render(plots::second_derivative_vs_p(rep, spec.theta_hat)));
      for (const auto& row : rep.sign_table) conclusive_sign(row);
    } else if (*enlarge_cmd) {
      const auto chain = io::chain_from_json(io::read_json(e_chain));
      const auto K = io::points_from_document(io::read_json(e_K));
      EnlargeOptions eo;
      eo.pitch = pitch;
      eo.segments_per_circle = segments;
      const auto d = enlarge_domain(chain, K, e_eps, *parse_window(e_window), eo);
      io::write_json(e_out, io::to_json(d));
    } else if (*run_cmd) {
      ExperimentConfig cfg;
      if (!preset_name.empty()) cfg = preset(preset_name);
      if (!config_file.empty()) cfg = parse_config(read_file(config_file), cfg, config_file);
      std::string extra;
      for (const auto& s : overrides) extra += s + "\n";
      cfg = parse_config(extra, cfg, "--set");
      const auto res = run_pipeline(cfg, run_out);
      std::cout << summarize_report(res.report);
      return res.exit_code;
    } else if (*report_cmd) {
      const auto text = summarize_report(io::read_json(report_in));
      if (report_out.empty())
        std::cout << text;
      else
        io::write_text(report_out, text);
    }
  } catch (const Inconclusive& e) {
    std::cerr << "inconclusive: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
