#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "wolff_lab/pipeline.hpp"

using namespace wolff_lab;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("wolff_lab_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string config_error(std::string_view text) {
  try {
    parse_config(text, {}, "cfg");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

struct SmallProblem {
  BoundaryChain chain = flat_chain();
  TriMesh mesh = triangulate(snowflake_domain(chain), 0.2, 8.0);
  PSolution sol = [this] {
    const auto graph = mesh.marker_flags(BoundaryMarker::graph);
    std::vector<double> data(mesh.vertices.size(), 0.0);
    for (std::size_t v = 0; v < data.size(); ++v)
      if (!graph[v]) data[v] = mesh.vertices[v].y;
    return solve(mesh, {3.0, data, 0.0});
  }();
};

}  // namespace

TEST(Config, DefaultsSurviveCanonicalRoundTrip) {
  const ExperimentConfig d;
  const auto back = parse_config(canonical_text(d));
  EXPECT_EQ(canonical_text(back), canonical_text(d));
  EXPECT_EQ(config_hash(back), config_hash(d));
  EXPECT_EQ(config_hash(d).size(), 16u);
}

TEST(Config, PresetsSurviveCanonicalRoundTrip) {
  for (const auto& name : preset_names()) {
    const auto c = preset(name);
    EXPECT_EQ(config_hash(parse_config(canonical_text(c))), config_hash(c)) << name;
  }
  EXPECT_THROW(preset("no-such-preset"), ConfigError);
}

TEST(Config, ParsesListsPointsAndComments) {
  const auto c = parse_config(
      "# comment\n"
      "\n"
      "  p = 2.5\n"
      "generations = 1, 2,3\n"
      "template.phi = -0.4:0, 0:0.05, 0.4:0\n"
      "wolff.p_grid = 1.5,2\n"
      "stages = snowflake, dim\n"
      "report.timings = false\n");
  EXPECT_DOUBLE_EQ(c.p, 2.5);
  EXPECT_EQ(c.generations, (std::vector<int>{1, 2, 3}));
  ASSERT_EQ(c.template_phi.size(), 3u);
  EXPECT_DOUBLE_EQ(c.template_phi[1].y, 0.05);
  EXPECT_EQ(c.wolff_p_grid, (std::vector<double>{1.5, 2.0}));
  EXPECT_TRUE(c.has_stage("dim"));
  EXPECT_FALSE(c.has_stage("solve"));
  EXPECT_FALSE(c.report_timings);
}

TEST(Config, HashTracksEveryChange) {
  const ExperimentConfig d;
  const auto base = config_hash(d);
  for (const auto& [key, value] : config_entries(d)) {
    if (value.empty()) continue;
    std::string alt = key == "stages" ? "dim" : key == "report.timings" ? (d.report_timings ? "false" : "true") : "";
    if (alt.empty()) {
      const auto c = value.find_first_of("0123456789");
      if (c == std::string::npos) continue;
      alt = value;
      alt[c] = alt[c] == '7' ? '6' : '7';
    }
    ExperimentConfig c;
    try {
      c = parse_config(key + " = " + alt);
    } catch (const ConfigError&) {
      continue;
    }
    EXPECT_NE(config_hash(c), base) << key << " = " << alt;
  }
}

TEST(Config, UnknownKeyReportsLineAndColumn) {
  const auto msg = config_error("p = 3\n\n   mesh.hh = 0.1\n");
  EXPECT_NE(msg.find("cfg:3:4:"), std::string::npos) << msg;
  EXPECT_NE(msg.find("mesh.hh"), std::string::npos) << msg;
}

TEST(Config, MalformedValueReportsColumn) {
  const auto msg = config_error("p = 3x\n");
  EXPECT_NE(msg.find("cfg:1:5:"), std::string::npos) << msg;
  EXPECT_NE(config_error("generations = 1, two\n").find("cfg:1:"), std::string::npos);
  EXPECT_NE(config_error("template.phi = 0:0, 1\n").find("cfg:1:"), std::string::npos);
  EXPECT_NE(config_error("report.timings = maybe\n").find("cfg:1:"), std::string::npos);
  EXPECT_NE(config_error("just some words\n").find("cfg:1:1:"), std::string::npos);
}

TEST(Io, ChainRoundTrip) {
  const auto chain = generate_snowflake(build_template({{-0.45, 0.0}, {0.0, 0.1}, {0.45, 0.0}}, 1, 0.25, 0.25), 2);
  const auto back = io::chain_from_json(io::to_json(chain));
  ASSERT_EQ(back.vertices.size(), chain.vertices.size());
  for (std::size_t k = 0; k < chain.vertices.size(); ++k) EXPECT_EQ(back.vertices[k], chain.vertices[k]);
  ASSERT_EQ(back.faces.size(), chain.faces.size());
  for (std::size_t k = 0; k < chain.faces.size(); ++k) {
    EXPECT_EQ(back.faces[k].i0, chain.faces[k].i0);
    EXPECT_EQ(back.faces[k].dist_end, chain.faces[k].dist_end);
  }
  EXPECT_EQ(back.generation, chain.generation);
  EXPECT_DOUBLE_EQ(back.edge_set_measure, chain.edge_set_measure);
}

TEST(Io, RejectsWrongKindAndVersion) {
  auto j = io::to_json(flat_chain());
  EXPECT_THROW(io::mesh_from_json(j), FormatError);
  j["format_version"] = 99;
  EXPECT_THROW(io::chain_from_json(j), FormatError);
}

TEST(Io, PolygonAndProfileRoundTrip) {
  const auto dom = snowflake_domain(flat_chain());
  const auto back = io::polygon_from_json(io::to_json(dom));
  EXPECT_EQ(back.loops, dom.loops);
  EXPECT_EQ(back.markers, dom.markers);
  const std::vector<Vec2> knots{{-1, 0}, {0, 2}, {1, 0}};
  EXPECT_EQ(io::profile_from_json(io::profile_to_json(knots)), knots);
  EXPECT_EQ(io::points_from_document(io::points_document(knots)), knots);
}

TEST(Io, MeshAndSolutionRoundTrip) {
  const SmallProblem sp;
  const auto mesh = io::mesh_from_json(io::to_json(sp.mesh));
  EXPECT_EQ(mesh.vertices, sp.mesh.vertices);
  EXPECT_EQ(mesh.triangles, sp.mesh.triangles);
  ASSERT_EQ(mesh.boundary_edges.size(), sp.mesh.boundary_edges.size());
  for (std::size_t k = 0; k < mesh.boundary_edges.size(); ++k) {
    EXPECT_EQ(mesh.boundary_edges[k].v0, sp.mesh.boundary_edges[k].v0);
    EXPECT_EQ(mesh.boundary_edges[k].marker, sp.mesh.boundary_edges[k].marker);
  }
  const auto sol = io::solution_from_json(io::to_json(sp.sol), mesh);
  EXPECT_EQ(sol.nodal_values, sp.sol.nodal_values);
  EXPECT_DOUBLE_EQ(sol.p, sp.sol.p);
  ASSERT_EQ(sol.tri_gradients.size(), sp.sol.tri_gradients.size());
  for (std::size_t t = 0; t < sol.tri_gradients.size(); ++t)
    EXPECT_NEAR(distance(sol.tri_gradients[t], sp.sol.tri_gradients[t]), 0.0, 1e-12);
}

TEST(Io, MeasureCsvIsExact) {
  const SmallProblem sp;
  const auto mu = riesz_weights(sp.sol, sp.mesh);
  std::istringstream in(io::measure_csv(mu));
  const auto back = io::measure_from_csv(in);
  EXPECT_EQ(back.nodes, mu.nodes);
  EXPECT_EQ(back.weights, mu.weights);
}

TEST(Io, MeasureCsvRejectsGarbage) {
  std::istringstream no_header("0,0,0,1\n");
  EXPECT_THROW(io::measure_from_csv(no_header), FormatError);
  std::istringstream bad("node_index,x,y,weight\n0,0,0,abc\n");
  EXPECT_THROW(io::measure_from_csv(bad), FormatError);
  std::istringstream gap("node_index,x,y,weight\n1,0,0,1\n");
  EXPECT_THROW(io::measure_from_csv(gap), FormatError);
}

TEST(Io, ChainSupportReproducesBallMasses) {
  const SmallProblem sp;
  const auto mu = restrict_to_window(riesz_weights(sp.sol, sp.mesh), snowflake_window());
  std::istringstream in(io::measure_csv(mu));
  auto back = io::measure_from_csv(in);
  io::attach_chain_support(back, sp.chain, 1.0);
  back.window = mu.window;
  EXPECT_EQ(back.edges.size(), mu.edges.size());
  const MeasureIndex a(mu), b(back);
  for (double x : {-0.45, -0.2, 0.0, 0.13, 0.4})
    for (double r : {0.01, 0.05, 0.2}) EXPECT_NEAR(a.mass_in_ball({x, 0.0}, r), b.mass_in_ball({x, 0.0}, r), 1e-12);
}

TEST(Io, ChainSupportOrdersExtensionNodes) {
  BoundaryMeasure mu;
  mu.nodes = {{0.7, 0.0}, {-0.7, 0.0}, {0.0, 0.0}, {-0.6, 0.0}, {0.6, 0.0}};
  mu.weights.assign(mu.nodes.size(), 1.0);
  io::attach_chain_support(mu, flat_chain(), 0.65);
  std::vector<std::array<int, 2>> expected{{1, 3}, {3, 2}, {2, 4}, {4, 0}};
  EXPECT_EQ(mu.edges, expected);
}

TEST(Svg, RenderIsWellFormed) {
  svg::Plot plot;
  plot.title = "a < b & c";
  auto s = plots::make_series("s1");
  s.points = {{0, 1}, {1, 2}, {2, 0.5}};
  s.errors = {0.1, 0.2, 0.1};
  plot.series.push_back(s);
  plot.y_refs = {1.0};
  const auto text = svg::render(plot);
  EXPECT_EQ(text.rfind("<svg", 0), 0u);
  EXPECT_NE(text.find("</svg>"), std::string::npos);
  EXPECT_NE(text.find("a &lt; b &amp; c"), std::string::npos);
  EXPECT_EQ(text.find("nan"), std::string::npos);
  EXPECT_EQ(text.find("inf"), std::string::npos);
  EXPECT_NE(svg::render(svg::Plot{}).find("</svg>"), std::string::npos);
}

TEST(Pipeline, FlatControlPassesAndIsReproducible) {
  auto cfg = preset("flat-control");
  cfg.report_timings = false;
  const auto d1 = scratch_dir("run1"), d2 = scratch_dir("run2");
  const auto r1 = run_pipeline(cfg, d1);
  const auto r2 = run_pipeline(cfg, d2);
  EXPECT_EQ(r1.exit_code, 0);
  EXPECT_EQ(r1.report.at("status"), "ok");
  EXPECT_FALSE(r1.report.contains("timings_seconds"));
  EXPECT_EQ(r1.report.at("config_hash"), config_hash(cfg));
  EXPECT_EQ(slurp(d1 / "report.json"), slurp(d2 / "report.json"));
  for (const auto& f : r1.files) EXPECT_TRUE(std::filesystem::exists(d1 / f)) << f;
  EXPECT_NE(summarize_report(r1.report).find("PASS"), std::string::npos);
}

TEST(Pipeline, FailedCheckGivesExitOne) {
  auto cfg = preset("flat-control");
  cfg.expect_dim_mean = 0.5;
  const auto r = run_pipeline(cfg, scratch_dir("fail"));
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(summarize_report(r.report).find("FAIL"), std::string::npos);
}

TEST(Pipeline, StageFailureNamesTheStage) {
  auto cfg = preset("flat-control");
  cfg.mesh_h = -1.0;
  try {
    run_pipeline(cfg, scratch_dir("stage"));
    FAIL() << "expected a stage error";
  } catch (const StageError& e) {
    EXPECT_NE(std::string(e.what()).find("mesh"), std::string::npos) << e.what();
  }
}
