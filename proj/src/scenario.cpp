#include "scenario.hpp"

#include "errors.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace hyperbend {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& where, const std::string& what) {
  fail(ErrorCode::ValidationError, "cli", where + ": " + what);
}

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) invalid(where, std::string("missing field '") + key + "'");
  return obj.at(key);
}

std::vector<double> number_list(const json& j, const std::string& where) {
  if (!j.is_array()) invalid(where, "expected a list of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) invalid(where, "expected a list of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

Vec vec_of_size(const json& j, int n, const std::string& where) {
  const auto v = number_list(j, where);
  if (static_cast<int>(v.size()) != n) invalid(where, "expected " + std::to_string(n) + " entries");
  return to_vec(v);
}

Mat matrix_from_json(const json& j, int rows, int cols, const std::string& where) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows) {
    invalid(where, "expected " + std::to_string(rows) + " rows");
  }
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r) m.row(r) = vec_of_size(j[r], cols, where).transpose();
  return m;
}

json matrix_to_json(const Mat& m) {
  json out = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

Function1D function_from(const json& j, const std::string& where) {
  try {
    return Function1D::from_json(j);
  } catch (const Error& e) {
    invalid(where, e.detail());
  }
}

Expr expr_from(const json& j, int n, const std::string& where) {
  Expr e;
  try {
    e = Expr::from_json(j);
  } catch (const Error& err) {
    invalid(where, err.detail());
  }
  if (e.max_var() >= n) invalid(where, "expression uses a variable beyond the dimension");
  return e;
}

std::vector<Expr> expr_list(const json& j, int n, const std::string& where) {
  if (!j.is_array()) invalid(where, "expected a list of expressions");
  std::vector<Expr> out;
  for (const auto& e : j) out.push_back(expr_from(e, n, where));
  return out;
}

// 1-based line and column of a byte offset.
std::pair<int, int> line_column(const std::string& text, std::size_t offset) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(offset, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

void validate_grid(const json& pipe, int n, const std::string& where) {
  const json& grid = require(pipe, "grid", where);
  const json& counts = require(grid, "counts", where + ".grid");
  if (!counts.is_array() || static_cast<int>(counts.size()) != n) {
    invalid(where + ".grid.counts", "expected " + std::to_string(n) + " entries");
  }
  for (const auto& c : counts) {
    if (!c.is_number_integer() || c.get<int>() < 1) invalid(where + ".grid.counts", "entries must be positive integers");
  }
  if (grid.contains("box")) box_from_json(grid["box"], n, where + ".grid.box");
}

void validate_functions(const json& list, const std::string& where) {
  if (!list.is_array() || list.empty()) invalid(where, "expected a non-empty list of functions");
  for (const auto& f : list) function_from(f, where);
}

bool has_rulings(const Scenario& sc) {
  return sc.kind == "ruled_spec" || (sc.kind == "external_chart" && sc.parameters.contains("rulings"));
}

void validate_pipeline(const Scenario& sc, const PipelineConfig& p, const std::string& where) {
  const json& c = p.config;
  if (c.contains("tolerances") && !c["tolerances"].is_object()) invalid(where + ".tolerances", "expected an object");
  if (p.type == "verify") {
    const json& list = require(c, "bendings", where);
    if (!list.is_array() || list.empty()) invalid(where + ".bendings", "expected a non-empty list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string w = where + ".bendings[" + std::to_string(i) + "]";
      const std::string type = require(list[i], "type", w).get<std::string>();
      if (type == "trivial") {
        if (list[i].contains("D")) {
          const Mat D = matrix_from_json(list[i]["D"], sc.n + 1, sc.n + 1, w + ".D");
          if ((D + D.transpose()).cwiseAbs().maxCoeff() > 1e-14) invalid(w + ".D", "must be skew");
        }
        if (list[i].contains("w")) vec_of_size(list[i]["w"], sc.n + 1, w + ".w");
      } else if (type == "expression") {
        const auto comps = expr_list(require(list[i], "components", w), sc.n, w + ".components");
        if (static_cast<int>(comps.size()) != sc.n + 1) invalid(w + ".components", "expected n+1 components");
      } else if (type == "constructed") {
        if (!has_rulings(sc)) invalid(w, "constructed bendings need a ruled chart");
        function_from(require(list[i], "theta0", w), w + ".theta0");
      } else {
        invalid(w + ".type", "unknown bending type '" + type + "'");
      }
    }
    validate_grid(c, sc.n, where);
  } else if (p.type == "construct") {
    if (!has_rulings(sc)) invalid(where, "construct needs a ruled chart");
    validate_functions(require(c, "theta0", where), where + ".theta0");
    validate_grid(c, sc.n, where);
  } else if (p.type == "transport") {
    const json& geos = require(c, "geodesics", where);
    if (!geos.is_array() || geos.empty()) invalid(where + ".geodesics", "expected a non-empty list");
    for (std::size_t i = 0; i < geos.size(); ++i) {
      const std::string w = where + ".geodesics[" + std::to_string(i) + "]";
      vec_of_size(require(geos[i], "start", w), sc.n, w + ".start");
      const json& smax = require(geos[i], "s_max", w);
      if (!smax.is_number() || smax.get<double>() <= 0.0) invalid(w + ".s_max", "must be positive");
    }
    if (c.contains("bendings")) validate_functions(c["bendings"], where + ".bendings");
  } else if (p.type == "kernel") {
    const json& deg = require(c, "degrees", where);
    if (!deg.is_array() || deg.empty()) invalid(where + ".degrees", "expected a non-empty list");
    int last = -1;
    for (const auto& d : deg) {
      if (!d.is_number_integer() || d.get<int>() <= last) invalid(where + ".degrees", "must be increasing nonnegative integers");
      last = d.get<int>();
    }
    const std::string mode = c.value("mode", "uniform");
    if (mode != "uniform" && mode != "s_axis") invalid(where + ".mode", "must be uniform or s_axis");
    if (mode == "s_axis") {
      const json& base = require(c, "base_degrees", where);
      if (!base.is_array() || static_cast<int>(base.size()) != sc.n) invalid(where + ".base_degrees", "expected n entries");
    }
    if (c.contains("box")) box_from_json(c["box"], sc.n, where + ".box");
    const std::string expected = c.value("expected", "none");
    if (expected != "none" && expected != "trivial" && expected != "ruled") {
      invalid(where + ".expected", "must be none, trivial or ruled");
    }
  } else {
    invalid(where + ".type", "unknown pipeline type '" + p.type + "'");
  }
}

}  // namespace

int Scenario::claimed_rank() const { return claims.is_object() ? claims.value("rank", -1) : -1; }

Box box_from_json(const json& j, int n, const std::string& where) {
  if (j.is_object() && j.contains("cube")) {
    const auto c = number_list(j["cube"], where + ".cube");
    if (c.size() != 2 || !(c[0] < c[1])) invalid(where + ".cube", "expected [lo, hi] with lo < hi");
    return Box::cube(n, c[0], c[1]);
  }
  const Vec lo = vec_of_size(require(j, "lo", where), n, where + ".lo");
  const Vec hi = vec_of_size(require(j, "hi", where), n, where + ".hi");
  if (!(lo.array() < hi.array()).all()) invalid(where, "lo must be below hi on every axis");
  return Box(lo, hi);
}

json box_to_json(const Box& box) { return {{"lo", to_std(box.lo)}, {"hi", to_std(box.hi)}}; }

RuledSpec ruled_spec_from_json(const json& p) {
  const std::string w = "parameters";
  const int n = require(p, "n", w).get<int>();
  if (n < 2 || n > kMaxDim) invalid(w + ".n", "must be in 2..6");
  RuledSpec spec = default_ruled_spec(n);
  if (p.contains("s_interval")) {
    const auto s = number_list(p["s_interval"], w + ".s_interval");
    if (s.size() != 2 || !(s[0] < s[1])) invalid(w + ".s_interval", "expected [s0, s1] with s0 < s1");
    spec.s0 = s[0];
    spec.s1 = s[1];
  }
  spec.theta = function_from(require(p, "theta", w), w + ".theta");
  auto fn_list = [&](const char* key) {
    const json& list = require(p, key, w);
    if (!list.is_array() || static_cast<int>(list.size()) != n - 1) {
      invalid(w + "." + key, "expected n-1 = " + std::to_string(n - 1) + " functions");
    }
    std::vector<Function1D> out;
    for (const auto& f : list) out.push_back(function_from(f, w + "." + key));
    return out;
  };
  spec.phi = fn_list("phi");
  spec.beta = fn_list("beta");
  if (p.contains("initial_frame")) spec.initial_frame = matrix_from_json(p["initial_frame"], n + 1, n + 1, w + ".initial_frame");
  if (p.contains("base_point")) spec.base_point = vec_of_size(p["base_point"], n + 1, w + ".base_point");
  if (p.contains("u_box")) spec.u_box = box_from_json(p["u_box"], n - 1, w + ".u_box");
  if (p.contains("steps")) spec.steps = p["steps"].get<int>();
  try {
    spec.validate();
  } catch (const Error& e) {
    invalid(w, e.detail());
  }
  return spec;
}

json ruled_spec_to_json(const RuledSpec& spec) {
  json phi = json::array(), beta = json::array();
  for (const auto& f : spec.phi) phi.push_back(f.to_json());
  for (const auto& f : spec.beta) beta.push_back(f.to_json());
  return {{"n", spec.n},
          {"s_interval", {spec.s0, spec.s1}},
          {"theta", spec.theta.to_json()},
          {"phi", phi},
          {"beta", beta},
          {"initial_frame", matrix_to_json(spec.initial_frame)},
          {"base_point", to_std(spec.base_point)},
          {"u_box", box_to_json(spec.u_box)},
          {"steps", spec.steps}};
}

Scenario parse_scenario(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    fail(ErrorCode::ParseError, "cli",
         origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": malformed JSON (" + e.what() + ")");
  }
  if (!j.is_object()) invalid(origin, "top level must be an object");
  try {
    Scenario sc;
    sc.source = j;
    const std::string schema = require(j, "schema", origin).get<std::string>();
    if (schema != kScenarioSchema) invalid(origin + ".schema", "unsupported schema '" + schema + "'");
    sc.name = require(j, "name", origin).get<std::string>();
    sc.kind = require(j, "kind", origin).get<std::string>();
    sc.theorem_grade = j.value("theorem_grade", false);
    sc.parameters = require(j, "parameters", origin);
    sc.claims = j.value("claims", json::object());
    const json& n = require(sc.parameters, "n", origin + ".parameters");
    if (!n.is_number_integer()) invalid(origin + ".parameters.n", "must be an integer");
    sc.n = n.get<int>();
    const json& pipes = require(j, "pipelines", origin);
    if (!pipes.is_array()) invalid(origin + ".pipelines", "expected a list");
    for (const auto& p : pipes) sc.pipelines.push_back({require(p, "type", origin + ".pipelines").get<std::string>(), p});
    validate_scenario(sc);
    return sc;
  } catch (const json::exception& e) {
    invalid(origin, std::string("wrong field type (") + e.what() + ")");
  }
}

void validate_scenario(const Scenario& sc) {
  const std::string w = sc.name.empty() ? "<scenario>" : sc.name;
  if (sc.n < 2) invalid(w + ".parameters.n", "n must be at least 2");
  if (sc.n > kMaxDim) invalid(w + ".parameters.n", "n must be at most " + std::to_string(kMaxDim));
  if (sc.theorem_grade && sc.n < 4) invalid(w + ".parameters.n", "theorem-grade scenarios need n >= 4");
  build_chart(sc);
  for (std::size_t i = 0; i < sc.pipelines.size(); ++i) {
    validate_pipeline(sc, sc.pipelines[i], w + ".pipelines[" + std::to_string(i) + "]");
  }
}

ChartPtr build_chart(const Scenario& sc) {
  const json& p = sc.parameters;
  const std::string w = "parameters";
  const int n = sc.n;
  if (sc.kind == "graph_chart") {
    const Box box = box_from_json(require(p, "box", w), n, w + ".box");
    return make_graph_chart(n, expr_from(require(p, "height", w), n, w + ".height"), box);
  }
  if (sc.kind == "cylinder") {
    const Box box = box_from_json(require(p, "box", w), n, w + ".box");
    const auto base = expr_list(require(p, "base", w), n, w + ".base");
    if (base.size() < 2 || static_cast<int>(base.size()) > n + 1) invalid(w + ".base", "base needs 2..n+1 components");
    try {
      return make_cylinder_chart(n, base, box);
    } catch (const Error& e) {
      invalid(w + ".base", e.detail());
    }
  }
  if (sc.kind == "ruled_spec") return integrate_frame(ruled_spec_from_json(p), sc.name);
  if (sc.kind == "external_chart") {
    const Box box = box_from_json(require(p, "box", w), n, w + ".box");
    const auto comps = expr_list(require(p, "components", w), n, w + ".components");
    if (static_cast<int>(comps.size()) != n + 1) invalid(w + ".components", "expected n+1 components");
    auto chart = std::make_shared<ExpressionChart>(sc.name, comps, box);
    if (p.contains("rulings")) chart->set_rulings(matrix_from_json(p["rulings"], n, n - 1, w + ".rulings"));
    return chart;
  }
  invalid(w, "unknown kind '" + sc.kind + "'");
}

namespace {

json fn_poly(std::vector<double> c) { return {{"poly", c}}; }

json cos_s() { return Function1D::fourier({0.0, 1.0}, {}, 2.0 * std::numbers::pi).to_json(); }

json var(int i) { return {{"var", i}}; }

json sum_of_squares(int n) {
  json terms = json::array();
  for (int i = 0; i < n; ++i) terms.push_back({{"pow", {var(i), 2}}});
  return {{"add", terms}};
}

json grid(std::vector<int> counts, const json& box = nullptr) {
  json g = {{"counts", counts}};
  if (!box.is_null()) g["box"] = box;
  return g;
}

json ruled_verify_box() { return {{"lo", {0.0, -1.0, -1.0, -1.0}}, {"hi", {1.0, 1.0, 1.0, 1.0}}}; }

json scenario(const std::string& name, const std::string& kind, bool theorem_grade, json params, json claims,
              json pipelines) {
  return {{"schema", kScenarioSchema}, {"name", name},       {"kind", kind},
          {"theorem_grade", theorem_grade}, {"parameters", params}, {"claims", claims},
          {"pipelines", pipelines}};
}

json trivial_bendings() {
  return json::array({{{"type", "trivial"}, {"random", true}}, {{"type", "trivial"}, {"random", true}}});
}

std::vector<std::pair<std::string, json>> make_registry() {
  std::vector<std::pair<std::string, json>> reg;
  const json cube4 = {{"cube", {-1.0, 1.0}}};

  // x -> (x, phi(x) e_5) is a bending of the flat chart for any phi.
  json normal_bump = json::array({0, 0, 0, 0, {{"add", {{{"mul", {var(0), var(1)}}}, {{"pow", {var(2), 3}}}}}}});
  reg.emplace_back("flat", scenario("flat", "graph_chart", true, {{"n", 4}, {"height", 0}, {"box", cube4}},
                                    {{"rank", 0}, {"complete_leaves", true}},
                                    json::array({{{"type", "verify"},
                                                  {"bendings", json::array({{{"type", "trivial"}, {"random", true}},
                                                                            {{"type", "expression"},
                                                                             {"components", normal_bump}}})},
                                                  {"grid", grid({2, 2, 2, 2})}}})));

  reg.emplace_back(
      "graph-rank4",
      scenario("graph-rank4", "graph_chart", true, {{"n", 4}, {"height", sum_of_squares(4)}, {"box", cube4}},
               {{"rank", 4}},
               json::array({{{"type", "verify"}, {"bendings", trivial_bendings()}, {"grid", grid({2, 2, 2, 2})}},
                            {{"type", "kernel"},
                             {"mode", "uniform"},
                             {"degrees", {3, 4, 5, 6}},
                             {"expected", "trivial"},
                             {"verify_counts", {3, 3, 3, 3}}}})));

  reg.emplace_back(
      "cyl-curve",
      scenario("cyl-curve", "cylinder", true,
               {{"n", 4}, {"base", json::array({var(0), {{"pow", {var(0), 2}}}})}, {"box", cube4}},
               {{"rank", 1}, {"complete_leaves", true}},
               json::array({{{"type", "verify"}, {"bendings", trivial_bendings()}, {"grid", grid({2, 2, 2, 2})}},
                            {{"type", "transport"},
                             {"geodesics", json::array({{{"start", {0.3, -0.5, 0.2, 0.1}}, {"s_max", 0.5}}})}}})));

  reg.emplace_back(
      "cyl-surf",
      scenario("cyl-surf", "cylinder", false,
               {{"n", 4},
                {"base", json::array({var(0), var(1), {{"add", {{{"pow", {var(0), 2}}}, {{"pow", {var(1), 2}}}}}}})},
                {"box", cube4}},
               {{"rank", 2}, {"exploratory", true}},
               json::array({{{"type", "verify"}, {"bendings", trivial_bendings()}, {"grid", grid({2, 2, 2, 2})}}})));

  const json r1_geodesics = json::array({{{"start", {0.3, 0.2, -0.7, 0.4}}, {"s_max", 1.0}},
                                         {{"start", {0.6, -0.4, 0.3, -0.2}}, {"s_max", 1.0}}});
  reg.emplace_back(
      "R1",
      scenario("R1", "ruled_spec", true, ruled_spec_to_json(r1_spec()), {{"rank", 2}, {"complete_leaves", true}},
               json::array({{{"type", "verify"},
                             {"bendings", json::array({{{"type", "trivial"}, {"random", true}},
                                                       {{"type", "constructed"}, {"theta0", 1}}})},
                             {"grid", grid({2, 2, 1, 2}, ruled_verify_box())}},
                            {{"type", "construct"},
                             {"theta0", json::array({1, fn_poly({0.0, 1.0}), cos_s()})},
                             {"grid", grid({2, 2, 2, 2}, ruled_verify_box())}},
                            {{"type", "transport"}, {"geodesics", r1_geodesics}, {"bendings", json::array({1})}},
                            {{"type", "kernel"},
                             {"mode", "s_axis"},
                             {"degrees", {2, 3, 4, 5}},
                             {"base_degrees", {2, 1, 1, 1}},
                             {"box", ruled_verify_box()},
                             {"expected", "ruled"},
                             {"verify_counts", {3, 2, 2, 2}}}})));

  reg.emplace_back(
      "R2",
      scenario("R2", "ruled_spec", true, ruled_spec_to_json(r2_spec()), {{"rank", 2}},
               json::array({{{"type", "verify"},
                             {"bendings", json::array({{{"type", "trivial"}, {"random", true}},
                                                       {{"type", "constructed"}, {"theta0", 1}}})},
                             {"grid", grid({2, 2, 1, 2}, ruled_verify_box())}},
                            {{"type", "construct"},
                             {"theta0", json::array({1, fn_poly({0.0, 1.0}), cos_s()})},
                             {"grid", grid({2, 2, 2, 2}, ruled_verify_box())}}})));

  json trivial_D = json::array();
  for (int r = 0; r < 5; ++r) {
    json row = json::array();
    for (int c = 0; c < 5; ++c) row.push_back(r == c ? 0.0 : (r < c ? 0.1 * (r + 2 * c) : -0.1 * (c + 2 * r)));
    trivial_D.push_back(row);
  }
  reg.emplace_back(
      "trivial-check",
      scenario("trivial-check", "graph_chart", true,
               {{"n", 4},
                {"height", {{"add", {{{"pow", {var(0), 2}}}, {{"mul", {var(1), var(2)}}}, {{"pow", {var(3), 3}}}}}}},
                {"box", cube4}},
               json::object(),
               json::array({{{"type", "verify"},
                             {"bendings", json::array({{{"type", "trivial"},
                                                        {"D", trivial_D},
                                                        {"w", {1.0, -2.0, 0.5, 0.0, 3.0}}}})},
                             {"grid", grid({2, 2, 2, 2})},
                             {"tolerances", {{"bending_residual", 1e-12}}}}})));

  reg.emplace_back(
      "R1-construct-verify",
      scenario("R1-construct-verify", "ruled_spec", true, ruled_spec_to_json(r1_spec()), {{"rank", 2}},
               json::array({{{"type", "construct"},
                             {"theta0", json::array({1})},
                             {"grid", grid({2, 2, 1, 2}, ruled_verify_box())}},
                            {{"type", "verify"},
                             {"bendings", json::array({{{"type", "constructed"}, {"theta0", 1}}})},
                             {"grid", grid({2, 1, 1, 2}, ruled_verify_box())}}})));

  // height u1 s + u2 s^2 / 2 + u3 s^3 / 6 is affine along the u axes
  json height = {{"add",
                  {{{"mul", {var(1), var(0)}}},
                   {{"mul", {0.5, var(2), {{"pow", {var(0), 2}}}}}},
                   {{"mul", {1.0 / 6.0, var(3), {{"pow", {var(0), 3}}}}}}}}};
  reg.emplace_back(
      "ruled-graph",
      scenario("ruled-graph", "external_chart", true,
               {{"n", 4},
                {"components", json::array({var(0), var(1), var(2), var(3), height})},
                {"box", {{"lo", {0.5, -1.0, -1.0, -1.0}}, {"hi", {1.5, 1.0, 1.0, 1.0}}}},
                {"rulings", json::array({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}})}},
               {{"rank", 2}},
               json::array({{{"type", "kernel"},
                             {"mode", "s_axis"},
                             {"degrees", {2, 3, 4, 5, 6}},
                             {"base_degrees", {2, 1, 1, 1}},
                             {"expected", "none"},
                             {"verify_counts", {3, 2, 2, 2}}}})));
  return reg;
}

struct Registry {
  std::vector<std::string> names;
  std::map<std::string, std::string> texts;
};

const Registry& registry() {
  static const Registry reg = [] {
    Registry r;
    for (auto& [name, j] : make_registry()) {
      r.names.push_back(name);
      r.texts[name] = j.dump(2) + "\n";
    }
    return r;
  }();
  return reg;
}

}  // namespace

const std::vector<std::string>& list_scenarios() { return registry().names; }

const std::string& builtin_scenario_text(const std::string& name) {
  const auto& reg = registry();
  const auto it = reg.texts.find(name);
  if (it == reg.texts.end()) fail(ErrorCode::UnknownScenario, "cli", "no built-in scenario named '" + name + "'");
  return it->second;
}

std::string describe_scenario(const std::string& name) { return builtin_scenario_text(name); }

Scenario load_scenario(const std::string& path_or_name) {
  std::error_code ec;
  if (std::filesystem::is_regular_file(path_or_name, ec)) {
    std::ifstream in(path_or_name, std::ios::binary);
    if (!in) fail(ErrorCode::ValidationError, "cli", "cannot read " + path_or_name);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), path_or_name);
  }
  const auto& names = list_scenarios();
  if (std::find(names.begin(), names.end(), path_or_name) == names.end()) {
    fail(ErrorCode::UnknownScenario, "cli", "'" + path_or_name + "' is neither a file nor a built-in scenario");
  }
  return parse_scenario(builtin_scenario_text(path_or_name), path_or_name);
}

}  // namespace hyperbend
