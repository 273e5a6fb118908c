#ifndef WOLFF_LAB_IO_HPP
#define WOLFF_LAB_IO_HPP

// JSON and CSV serialization. Every JSON document carries "format_version"
// and a "kind" tag naming the payload.

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "wolff_lab/enlarge.hpp"
#include "wolff_lab/wolff.hpp"

namespace wolff_lab {

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kToolVersion = "1.0.0";

using Json = nlohmann::ordered_json;

namespace io {

inline Json points_to_json(std::span<const Vec2> pts) {
  Json a = Json::array();
  for (const auto& p : pts) a.push_back({p.x, p.y});
  return a;
}

inline std::vector<Vec2> points_from_json(const Json& a) {
  if (!a.is_array()) throw FormatError("expected an array of [x, y] pairs");
  std::vector<Vec2> out;
  for (const auto& p : a) {
    if (!p.is_array() || p.size() != 2) throw FormatError("expected an [x, y] pair");
    out.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  return out;
}

inline Json document(const char* kind) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = kind;
  return j;
}

/// Checks format_version and, when given, the kind tag.
inline void expect_kind(const Json& j, const std::string& kind) {
  if (!j.is_object() || !j.contains("format_version")) throw FormatError("missing format_version");
  if (j["format_version"].get<int>() != kFormatVersion)
    throw FormatError("unsupported format_version " + j["format_version"].dump());
  if (!j.contains("kind") || j["kind"].get<std::string>() != kind)
    throw FormatError("expected a '" + kind + "' document");
}

inline Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path + "'");
  out << text;
}

inline void write_json(const std::string& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

// --- geometry -------------------------------------------------------------

inline Json to_json(const BoundaryChain& c) {
  Json j = document("chain");
  j["generation"] = c.generation;
  j["edge_set_measure"] = c.edge_set_measure;
  j["vertices"] = points_to_json(c.vertices);
  Json faces = Json::array();
  for (const auto& f : c.faces) faces.push_back({{"i0", f.i0}, {"i1", f.i1}, {"dist_end", f.dist_end}});
  j["faces"] = std::move(faces);
  return j;
}

inline BoundaryChain chain_from_json(const Json& j) {
  expect_kind(j, "chain");
  BoundaryChain c;
  c.generation = j.value("generation", 0);
  c.edge_set_measure = j.value("edge_set_measure", 0.0);
  c.vertices = points_from_json(j.at("vertices"));
  for (const auto& f : j.value("faces", Json::array()))
    c.faces.push_back({f.at("i0").get<int>(), f.at("i1").get<int>(), f.at("dist_end").get<int>()});
  if (c.vertices.size() < 2) throw FormatError("chain needs at least two vertices");
  return c;
}

/// Knots of a piecewise-linear profile: {"knots": [[x, y], ...]}.
inline Json profile_to_json(std::span<const Vec2> knots) {
  Json j = document("profile");
  j["knots"] = points_to_json(knots);
  return j;
}

inline std::vector<Vec2> profile_from_json(const Json& j) {
  expect_kind(j, "profile");
  auto k = points_from_json(j.at("knots"));
  if (!std::ranges::is_sorted(k, {}, &Vec2::x)) throw FormatError("profile knots must have increasing x");
  return k;
}

inline Json points_document(std::span<const Vec2> pts) {
  Json j = document("points");
  j["points"] = points_to_json(pts);
  return j;
}

inline std::vector<Vec2> points_from_document(const Json& j) {
  expect_kind(j, "points");
  return points_from_json(j.at("points"));
}

inline Json to_json(const PolygonDomain& d) {
  Json j = document("polygon");
  Json loops = Json::array();
  for (std::size_t l = 0; l < d.loops.size(); ++l) {
    Json marks = Json::array();
    for (auto m : d.markers[l]) marks.push_back(to_string(m));
    loops.push_back({{"vertices", points_to_json(d.loops[l])}, {"markers", std::move(marks)}});
  }
  j["loops"] = std::move(loops);
  return j;
}

inline PolygonDomain polygon_from_json(const Json& j) {
  expect_kind(j, "polygon");
  PolygonDomain d;
  for (const auto& l : j.at("loops")) {
    auto pts = points_from_json(l.at("vertices"));
    std::vector<BoundaryMarker> marks;
    for (const auto& m : l.at("markers")) marks.push_back(marker_from_string(m.get<std::string>()));
    if (marks.size() != pts.size()) throw FormatError("one marker per loop edge is required");
    d.add_loop(std::move(pts), std::move(marks));
  }
  return d;
}

// --- mesh and solution ------------------------------------------------------

inline Json to_json(const TriMesh& m) {
  Json j = document("mesh");
  j["h_max"] = m.h_max;
  j["vertices"] = points_to_json(m.vertices);
  Json tris = Json::array();
  for (const auto& t : m.triangles) tris.push_back({t[0], t[1], t[2]});
  j["triangles"] = std::move(tris);
  Json edges = Json::array();
  for (const auto& e : m.boundary_edges) edges.push_back({e.v0, e.v1, to_string(e.marker)});
  j["boundary_edges"] = std::move(edges);
  return j;
}

inline TriMesh mesh_from_json(const Json& j) {
  expect_kind(j, "mesh");
  TriMesh m;
  m.h_max = j.value("h_max", 0.0);
  m.vertices = points_from_json(j.at("vertices"));
  const int n = static_cast<int>(m.vertices.size());
  auto vertex = [n](const Json& v) {
    const int k = v.get<int>();
    if (k < 0 || k >= n) throw FormatError("vertex index out of range");
    return k;
  };
  for (const auto& t : j.at("triangles")) m.triangles.push_back({vertex(t.at(0)), vertex(t.at(1)), vertex(t.at(2))});
  for (const auto& e : j.at("boundary_edges"))
    m.boundary_edges.push_back({vertex(e.at(0)), vertex(e.at(1)), marker_from_string(e.at(2).get<std::string>())});
  return m;
}

inline Json to_json(const PSolution& s) {
  Json j = document("solution");
  j["p"] = s.p;
  j["reg_delta"] = s.reg_delta;
  j["residual_norm"] = s.residual_norm;
  j["energy"] = s.energy;
  j["iterations"] = s.iterations;
  j["stages"] = s.stages;
  j["nodal_values"] = s.nodal_values;
  return j;
}

inline PSolution solution_from_json(const Json& j, const TriMesh& mesh) {
  expect_kind(j, "solution");
  PSolution s;
  s.p = j.at("p").get<double>();
  s.reg_delta = j.value("reg_delta", 0.0);
  s.residual_norm = j.value("residual_norm", 0.0);
  s.energy = j.value("energy", 0.0);
  s.iterations = j.value("iterations", 0);
  s.stages = j.value("stages", 0);
  s.nodal_values = j.at("nodal_values").get<std::vector<double>>();
  if (s.nodal_values.size() != mesh.vertices.size()) throw FormatError("solution does not match the mesh");
  const P1Geometry geo(mesh);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) s.tri_gradients.push_back(geo.gradient(mesh, s.nodal_values, t));
  s.min_value = s.nodal_values.empty() ? 0.0 : *std::ranges::min_element(s.nodal_values);
  return s;
}

// --- measure ----------------------------------------------------------------

/// CSV with header node_index,x,y,weight. Values use 17 significant digits.
inline std::string measure_csv(const BoundaryMeasure& mu) {
  std::ostringstream os;
  os << "node_index,x,y,weight\n" << std::setprecision(17);
  for (std::size_t i = 0; i < mu.nodes.size(); ++i)
    os << i << ',' << mu.nodes[i].x << ',' << mu.nodes[i].y << ',' << mu.weights[i] << '\n';
  return os.str();
}

inline BoundaryMeasure measure_from_csv(std::istream& in) {
  BoundaryMeasure mu;
  std::string line;
  if (!std::getline(in, line) || line.rfind("node_index,x,y,weight", 0) != 0)
    throw FormatError("measure CSV must start with the header node_index,x,y,weight");
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    std::vector<double> v;
    while (std::getline(ls, field, ',')) {
      try {
        std::size_t used = 0;
        v.push_back(std::stod(field, &used));
        if (used != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw FormatError("measure CSV line " + std::to_string(lineno) + ": bad number '" + field + "'");
      }
    }
    if (v.size() != 4) throw FormatError("measure CSV line " + std::to_string(lineno) + ": expected 4 fields");
    if (static_cast<std::size_t>(v[0]) != mu.nodes.size())
      throw FormatError("measure CSV line " + std::to_string(lineno) + ": node indices must be consecutive");
    mu.nodes.push_back({v[1], v[2]});
    mu.weights.push_back(v[3]);
  }
  return mu;
}

inline BoundaryMeasure read_measure_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  return measure_from_csv(in);
}

/// Support edges joining nodes that are consecutive along the chain and lie
/// within `gap` arclength of each other.
inline void attach_chain_support(BoundaryMeasure& mu, const BoundaryChain& chain, double gap) {
  const ChainIndex index(chain);
  std::vector<double> cum(chain.vertices.size(), 0.0);
  for (std::size_t k = 1; k < cum.size(); ++k) cum[k] = cum[k - 1] + distance(chain.vertices[k - 1], chain.vertices[k]);
  std::vector<std::pair<double, int>> order;
  for (std::size_t i = 0; i < mu.nodes.size(); ++i) {
    const auto nn = index.grid().nearest(mu.nodes[i]);
    if (nn.index < 0) throw FormatError("empty chain");
    const Vec2 a = chain.vertices[nn.index], b = chain.vertices[nn.index + 1];
    order.emplace_back(cum[nn.index] + dot(mu.nodes[i] - a, b - a) / distance(a, b), static_cast<int>(i));
  }
  std::ranges::sort(order);
  mu.edges.clear();
  for (std::size_t k = 1; k < order.size(); ++k)
    if (order[k].first - order[k - 1].first <= gap) mu.edges.push_back({order[k - 1].second, order[k].second});
}

// --- reports ------------------------------------------------------------------

inline Json to_json(const DimensionEstimate& d) {
  Json j;
  j["mu_weighted_mean"] = d.mu_weighted_mean;
  j["mu_weighted_std"] = d.mu_weighted_std;
  j["r_min"] = d.r_min;
  j["r_max"] = d.r_max;
  j["sampled_mass"] = d.sampled_mass;
  Json s = Json::array();
  for (const auto& x : d.samples)
    s.push_back({{"x", x.center.x}, {"y", x.center.y}, {"slope", x.slope}, {"r_squared", x.r_squared}, {"weight", x.weight}});
  j["samples"] = std::move(s);
  return j;
}

inline Json to_json(const SignRow& r) {
  return {{"p", r.p},
          {"epsilon", r.epsilon},
          {"I", r.I},
          {"truncation_error", r.truncation_error},
          {"resolution_error", r.resolution_error},
          {"conclusive", r.conclusive},
          {"sign", r.sign},
          {"prediction", r.prediction}};
}

inline Json to_json(const WolffReport& rep) {
  Json j = document("wolff_report");
  Json fits = Json::array();
  for (const auto& f : rep.fits) {
    Json samples = Json::array();
    for (const auto& s : f.result.samples)
      samples.push_back({{"epsilon", s.epsilon},
                         {"I", s.I},
                         {"I_box", s.I_box},
                         {"I_tail", s.I_tail},
                         {"clipped_fraction", s.clipped_fraction},
                         {"triangles", s.triangles}});
    fits.push_back({{"p", f.p},
                    {"a2", f.result.fit.a2},
                    {"a2_stderr", f.result.fit.a2_stderr},
                    {"a3", f.result.fit.a3},
                    {"a3_stderr", f.result.fit.a3_stderr},
                    {"r_squared", f.result.fit.r_squared},
                    {"ddI0", f.result.fit.ddI0()},
                    {"analytic_a2", f.analytic_a2},
                    {"truncation_change", f.result.truncation_change},
                    {"I_samples", std::move(samples)}});
  }
  j["fits"] = std::move(fits);
  j["sign_epsilon"] = rep.sign_epsilon;
  Json signs = Json::array();
  for (const auto& r : rep.sign_table) signs.push_back(to_json(r));
  j["sign_table"] = std::move(signs);
  j["eta"] = rep.eta;
  Json ratios = Json::array();
  for (const auto& r : rep.ratio_table)
    ratios.push_back({{"p", r.p}, {"I_tilde", r.I_tilde}, {"error", r.error}, {"ratio", r.ratio}, {"conclusive", r.conclusive}});
  j["ratio_table"] = std::move(ratios);
  return j;
}

inline Json to_json(const EnlargedDomain& d) {
  Json j = document("enlarged_domain");
  j["epsilon"] = d.epsilon;
  j["window"] = {{"lo", {d.window.lo.x, d.window.lo.y}}, {"hi", {d.window.hi.x, d.window.hi.y}}};
  j["pitch"] = d.pitch;
  j["segments_per_circle"] = d.segments_per_circle;
  j["cube_count"] = d.cube_count;
  j["K"] = points_to_json(d.K);
  Json balls = Json::array();
  for (const auto& b : d.balls)
    balls.push_back({{"center", {b.center.x, b.center.y}},
                     {"radius", b.radius},
                     {"cube", {{"level", b.cube.level}, {"i", b.cube.i}, {"j", b.cube.j}}}});
  j["balls"] = std::move(balls);
  j["base"] = to_json(d.base);
  j["boundary"] = points_to_json(d.boundary);
  return j;
}

}  // namespace io
}  // namespace wolff_lab

#endif  // WOLFF_LAB_IO_HPP
