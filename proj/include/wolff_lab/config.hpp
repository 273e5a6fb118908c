#ifndef WOLFF_LAB_CONFIG_HPP
#define WOLFF_LAB_CONFIG_HPP

// Experiment configuration as `key = value` lines. Lines starting with '#'
// are comments. Lists are comma separated; points are written x:y.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "wolff_lab/errors.hpp"
#include "wolff_lab/planar.hpp"

namespace wolff_lab {

struct ExperimentConfig {
  std::vector<std::string> stages{"snowflake", "mesh", "solve", "measure", "dim"};

  std::vector<Vec2> template_phi{{-0.45, 0.0}, {0.0, 0.1}, {0.45, 0.0}};
  int template_N = 1;
  double template_b = 0.25;
  double template_theta0 = 0.25;
  int whitney_depth = 1;
  std::vector<int> generations{4};

  double p = 3.0;
  double mesh_h = 0.1;
  double mesh_grading = 64.0;
  double domain_margin = 0.5;
  double domain_height = 1.0;
  double solve_tol = 0.0;

  int dim_samples = 1024;
  std::uint64_t dim_seed = 1;
  double dim_r_min = 2e-4;
  double dim_r_max = 0.1;

  std::vector<Vec2> wolff_theta{{-1.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}};
  std::vector<double> wolff_p_grid{3.0, 1.5, 2.0};
  std::vector<double> wolff_eps_grid{-0.08, -0.04, -0.02, -0.01, 0.01, 0.02, 0.04, 0.08};
  double wolff_sign_eps = 0.08;
  double wolff_R = 16.0;
  double wolff_H = 16.0;
  double wolff_h = 0.5;
  double wolff_grading = 128.0;
  double wolff_eta = 0.2;

  double enlarge_eps = 0.005;
  /// Zero selects half the observed dimension deficit of the last generation.
  double enlarge_alpha = 0.0;
  double enlarge_rho = 0.05;
  int enlarge_scales = 5;
  double enlarge_pitch = 1e-4;
  int enlarge_segments = 64;

  /// Calibration checks; NaN disables a check.
  double expect_dim_mean = std::numeric_limits<double>::quiet_NaN();
  double expect_dim_tol = 0.03;
  double expect_a2_rel_tol = std::numeric_limits<double>::quiet_NaN();

  bool report_timings = true;

  bool has_stage(std::string_view s) const {
    for (const auto& x : stages)
      if (x == s) return true;
    return false;
  }
};

namespace config_detail {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

/// Parse failure at a column offset within the value.
struct ValueError {
  std::size_t offset;
  std::string message;
};

inline double parse_double(std::string_view s, std::size_t offset) {
  const std::string t = trim(s);
  if (t == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || r.ec != std::errc{} || r.ptr != t.data() + t.size())
    throw ValueError{offset, "expected a number, got '" + t + "'"};
  return v;
}

template <class Int>
Int parse_int(std::string_view s, std::size_t offset) {
  const std::string t = trim(s);
  Int v = 0;
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || r.ec != std::errc{} || r.ptr != t.data() + t.size())
    throw ValueError{offset, "expected an integer, got '" + t + "'"};
  return v;
}

/// Comma-separated items with their column offsets; empty input gives none.
inline std::vector<std::pair<std::string, std::size_t>> split_list(std::string_view s) {
  std::vector<std::pair<std::string, std::size_t>> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    const auto piece = s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    const auto lead = piece.find_first_not_of(" \t");
    out.emplace_back(trim(piece), start + (lead == std::string_view::npos ? 0 : lead));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::vector<double> parse_doubles(std::string_view s) {
  std::vector<double> out;
  for (const auto& [item, off] : split_list(s)) out.push_back(parse_double(item, off));
  return out;
}

inline std::vector<Vec2> parse_points(std::string_view s) {
  std::vector<Vec2> out;
  for (const auto& [item, off] : split_list(s)) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ValueError{off, "expected x:y, got '" + item + "'"};
    out.push_back({parse_double(item.substr(0, colon), off), parse_double(item.substr(colon + 1), off + colon + 1)});
  }
  return out;
}

inline bool parse_bool(std::string_view s, std::size_t offset) {
  const std::string t = trim(s);
  if (t == "true") return true;
  if (t == "false") return false;
  throw ValueError{offset, "expected true or false, got '" + t + "'"};
}

struct Field {
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

inline std::string join(const std::vector<std::string>& items) {
  std::string s;
  for (std::size_t i = 0; i < items.size(); ++i) s += (i ? ", " : "") + items[i];
  return s;
}

template <class T, class F>
std::string join_map(const std::vector<T>& v, F f) {
  std::vector<std::string> items;
  for (const auto& x : v) items.push_back(f(x));
  return join(items);
}

inline const std::vector<std::string>& known_stages() {
  static const std::vector<std::string> s{"snowflake", "mesh", "solve", "measure", "dim", "wolff", "enlarge"};
  return s;
}

inline Field real(double ExperimentConfig::*m) {
  return {[m](ExperimentConfig& c, std::string_view v) { c.*m = parse_double(v, 0); },
          [m](const ExperimentConfig& c) { return format_double(c.*m); }};
}

template <class Int>
Field integer(Int ExperimentConfig::*m) {
  return {[m](ExperimentConfig& c, std::string_view v) { c.*m = parse_int<Int>(v, 0); },
          [m](const ExperimentConfig& c) { return std::to_string(c.*m); }};
}

inline Field points(std::vector<Vec2> ExperimentConfig::*m) {
  return {[m](ExperimentConfig& c, std::string_view v) { c.*m = parse_points(v); },
          [m](const ExperimentConfig& c) {
            return join_map(c.*m, [](const Vec2& p) { return format_double(p.x) + ":" + format_double(p.y); });
          }};
}

inline Field reals(std::vector<double> ExperimentConfig::*m) {
  return {[m](ExperimentConfig& c, std::string_view v) { c.*m = parse_doubles(v); },
          [m](const ExperimentConfig& c) { return join_map(c.*m, format_double); }};
}

/// Every key in canonical order.
inline const std::map<std::string, Field>& fields() {
  using C = ExperimentConfig;
  static const std::map<std::string, Field> f{
      {"stages",
       {[](C& c, std::string_view v) {
          c.stages.clear();
          for (const auto& [item, off] : split_list(v)) {
            if (std::ranges::find(known_stages(), item) == known_stages().end())
              throw ValueError{off, "unknown stage '" + item + "'"};
            c.stages.push_back(item);
          }
        },
        [](const C& c) { return join(c.stages); }}},
      {"template.phi", points(&C::template_phi)},
      {"template.N", integer(&C::template_N)},
      {"template.b", real(&C::template_b)},
      {"template.theta0", real(&C::template_theta0)},
      {"template.whitney_depth", integer(&C::whitney_depth)},
      {"generations",
       {[](C& c, std::string_view v) {
          c.generations.clear();
          for (const auto& [item, off] : split_list(v)) c.generations.push_back(parse_int<int>(item, off));
        },
        [](const C& c) { return join_map(c.generations, [](int g) { return std::to_string(g); }); }}},
      {"p", real(&C::p)},
      {"mesh.h", real(&C::mesh_h)},
      {"mesh.grading", real(&C::mesh_grading)},
      {"domain.margin", real(&C::domain_margin)},
      {"domain.height", real(&C::domain_height)},
      {"solve.tol", real(&C::solve_tol)},
      {"dim.samples", integer(&C::dim_samples)},
      {"dim.seed", integer(&C::dim_seed)},
      {"dim.r_min", real(&C::dim_r_min)},
      {"dim.r_max", real(&C::dim_r_max)},
      {"wolff.theta", points(&C::wolff_theta)},
      {"wolff.p_grid", reals(&C::wolff_p_grid)},
      {"wolff.eps_grid", reals(&C::wolff_eps_grid)},
      {"wolff.sign_eps", real(&C::wolff_sign_eps)},
      {"wolff.R", real(&C::wolff_R)},
      {"wolff.H", real(&C::wolff_H)},
      {"wolff.h", real(&C::wolff_h)},
      {"wolff.grading", real(&C::wolff_grading)},
      {"wolff.eta", real(&C::wolff_eta)},
      {"enlarge.eps", real(&C::enlarge_eps)},
      {"enlarge.alpha", real(&C::enlarge_alpha)},
      {"enlarge.rho", real(&C::enlarge_rho)},
      {"enlarge.scales", integer(&C::enlarge_scales)},
      {"enlarge.pitch", real(&C::enlarge_pitch)},
      {"enlarge.segments", integer(&C::enlarge_segments)},
      {"expect.dim_mean", real(&C::expect_dim_mean)},
      {"expect.dim_tol", real(&C::expect_dim_tol)},
      {"expect.a2_rel_tol", real(&C::expect_a2_rel_tol)},
      {"report.timings",
       {[](C& c, std::string_view v) { c.report_timings = parse_bool(v, 0); },
        [](const C& c) { return std::string(c.report_timings ? "true" : "false"); }}},
  };
  return f;
}

}  // namespace config_detail

/// Applies `key = value` lines on top of `base`. Errors name the source,
/// line and column.
inline ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {},
                                     const std::string& source = "config") {
  const auto& fields = config_detail::fields();
  std::size_t line_start = 0;
  int lineno = 0;
  auto fail = [&](std::size_t col, const std::string& msg) {
    throw ConfigError(source + ":" + std::to_string(lineno) + ":" + std::to_string(col + 1) + ": " + msg);
  };
  while (line_start <= text.size()) {
    ++lineno;
    const auto nl = text.find('\n', line_start);
    const std::string_view line = text.substr(line_start, nl == std::string_view::npos ? std::string_view::npos : nl - line_start);
    line_start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string_view::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(first, "expected 'key = value'");
    const std::string key = config_detail::trim(line.substr(0, eq));
    const auto it = fields.find(key);
    if (it == fields.end()) fail(first, "unknown key '" + key + "'");
    std::string_view value = line.substr(eq + 1);
    const auto lead = std::min(value.find_first_not_of(" \t"), value.size());
    value.remove_prefix(lead);
    try {
      it->second.set(base, value);
    } catch (const config_detail::ValueError& e) {
      fail(eq + 1 + lead + e.offset, "key '" + key + "': " + e.message);
    }
  }
  return base;
}

/// Every key with its value, one per line, in canonical order.
inline std::string canonical_text(const ExperimentConfig& c) {
  std::string s;
  for (const auto& [key, field] : config_detail::fields()) s += key + " = " + field.get(c) + "\n";
  return s;
}

inline std::map<std::string, std::string> config_entries(const ExperimentConfig& c) {
  std::map<std::string, std::string> out;
  for (const auto& [key, field] : config_detail::fields()) out[key] = field.get(c);
  return out;
}

/// 64-bit FNV-1a of the canonical text, as 16 hex digits.
inline std::string config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_text(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

inline std::vector<std::string> preset_names() { return {"flat-control", "eq012der-p3"}; }

/// Named presets. flat-control calibrates the dimension estimator on the
/// half-plane; eq012der-p3 fits I''(0) for the unit tent at p = 3.
inline ExperimentConfig preset(const std::string& name) {
  if (name == "flat-control")
    return parse_config(
        "stages = snowflake, mesh, solve, measure, dim\n"
        "template.phi =\n"
        "generations = 2\n"
        "expect.dim_mean = 1\n"
        "expect.dim_tol = 0.03\n",
        {}, "preset " + name);
  if (name == "eq012der-p3")
    return parse_config(
        "stages = wolff\n"
        "wolff.p_grid = 3\n"
        "expect.a2_rel_tol = 0.2\n",
        {}, "preset " + name);
  throw ConfigError("unknown preset '" + name + "'");
}

}  // namespace wolff_lab

#endif  // WOLFF_LAB_CONFIG_HPP
