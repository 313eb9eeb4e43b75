#include "enbcds/scenario.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

#include "enbcds/error.hpp"

namespace enbcds {

namespace {

using Json = nlohmann::ordered_json;

std::string escape_token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') {
      out += "~0";
    } else if (c == '/') {
      out += "~1";
    } else {
      out += c;
    }
  }
  return out;
}

class Reader {
 public:
  explicit Reader(const ParseOptions& options) : options_(options) {}

  std::vector<std::string> take_warnings() { return std::move(warnings_); }

  [[noreturn]] void fail(const std::string& path, const std::string& why) const {
    throw Error(ErrorKind::kSchemaError, (path.empty() ? std::string("/") : path) + ": " + why, path);
  }

  const Json& object(const Json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) fail(path, "expected an object");
    for (const auto& [key, value] : j.items()) {
      bool known = false;
      for (const char* a : allowed) known = known || key == a;
      if (known) continue;
      const std::string where = path + "/" + escape_token(key);
      if (!options_.lenient) fail(where, "unknown field");
      warnings_.push_back(where + ": unknown field ignored");
    }
    return j;
  }

  const Json& required(const Json& j, const char* key, const std::string& path) const {
    auto it = j.find(key);
    if (it == j.end()) fail(path + "/" + key, "missing required field");
    return *it;
  }

  double number(const Json& j, const std::string& path) const {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
  }

  double req_number(const Json& j, const char* key, const std::string& path) const {
    return number(required(j, key, path), path + "/" + key);
  }

  double opt_number(const Json& j, const char* key, const std::string& path, double fallback) const {
    auto it = j.find(key);
    return it == j.end() ? fallback : number(*it, path + "/" + key);
  }

  std::string string(const Json& j, const std::string& path) const {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
  }

  std::string req_string(const Json& j, const char* key, const std::string& path) const {
    return string(required(j, key, path), path + "/" + key);
  }

  std::string opt_string(const Json& j, const char* key, const std::string& path,
                         const std::string& fallback) const {
    auto it = j.find(key);
    return it == j.end() ? fallback : string(*it, path + "/" + key);
  }

  bool opt_bool(const Json& j, const char* key, const std::string& path, bool fallback) const {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_boolean()) fail(path + "/" + key, "expected a boolean");
    return it->get<bool>();
  }

  const Json* opt_array(const Json& j, const char* key, const std::string& path) const {
    auto it = j.find(key);
    if (it == j.end()) return nullptr;
    if (!it->is_array()) fail(path + "/" + key, "expected an array");
    return &*it;
  }

  const Json& req_array(const Json& j, const char* key, const std::string& path) const {
    const Json& a = required(j, key, path);
    if (!a.is_array()) fail(path + "/" + key, "expected an array");
    return a;
  }

  BreachModel breach(const Json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    const std::string family = req_string(j, "family", path);
    if (family == "gordon_loeb_1") {
      object(j, path, {"family", "alpha", "beta"});
      return BreachModel(GordonLoebI{req_number(j, "alpha", path), opt_number(j, "beta", path, 1.0)});
    }
    if (family == "gordon_loeb_2") {
      object(j, path, {"family", "alpha"});
      return BreachModel(GordonLoebII{req_number(j, "alpha", path)});
    }
    if (family == "exponential") {
      object(j, path, {"family", "kappa"});
      return BreachModel(Exponential{req_number(j, "kappa", path)});
    }
    if (family == "table") {
      object(j, path, {"family", "knots"});
      const Json& knots = req_array(j, "knots", path);
      TableModel t;
      for (std::size_t i = 0; i < knots.size(); ++i) {
        const std::string kp = path + "/knots/" + std::to_string(i);
        if (!knots[i].is_array() || knots[i].size() != 2) fail(kp, "expected [spend, multiplier]");
        t.knots.push_back({number(knots[i][0], kp + "/0"), number(knots[i][1], kp + "/1")});
      }
      return BreachModel(std::move(t));
    }
    fail(path + "/family", "unknown breach family '" + family + "'");
  }

  AttackType attack(const Json& j, const std::string& path) {
    object(j, path, {"id", "description", "baseline_prob", "loss", "breach"});
    AttackType a;
    a.id = req_string(j, "id", path);
    a.description = opt_string(j, "description", path, "");
    a.baseline_prob = req_number(j, "baseline_prob", path);
    a.loss = req_number(j, "loss", path);
    a.breach = breach(required(j, "breach", path), path + "/breach");
    return a;
  }

  AdverseEvent adverse(const Json& j, const std::string& path) {
    object(j, path, {"id", "prob", "cost"});
    return {req_string(j, "id", path), req_number(j, "prob", path), req_number(j, "cost", path)};
  }

  Gdf gdf(const Json& j, const std::string& path) {
    object(j, path, {"id", "name", "ben", "dir_costs", "attacks", "adverse", "mandatory", "actual_spend"});
    Gdf g;
    g.id = req_string(j, "id", path);
    g.name = opt_string(j, "name", path, g.id);
    g.ben = req_number(j, "ben", path);
    g.dir_costs = req_number(j, "dir_costs", path);
    if (const Json* a = opt_array(j, "attacks", path)) {
      for (std::size_t i = 0; i < a->size(); ++i) {
        g.attacks.push_back(attack((*a)[i], path + "/attacks/" + std::to_string(i)));
      }
    }
    if (const Json* a = opt_array(j, "adverse", path)) {
      for (std::size_t i = 0; i < a->size(); ++i) {
        g.adverse.push_back(adverse((*a)[i], path + "/adverse/" + std::to_string(i)));
      }
    }
    g.mandatory = opt_bool(j, "mandatory", path, false);
    if (j.contains("actual_spend")) g.actual_spend = req_number(j, "actual_spend", path);
    return g;
  }

  DependencyEdge edge(const Json& j, const std::string& path) {
    object(j, path, {"from", "to", "uplift", "default_uplift"});
    DependencyEdge e;
    e.from = req_string(j, "from", path);
    e.to = req_string(j, "to", path);
    e.default_uplift = opt_number(j, "default_uplift", path, 1.0);
    if (auto it = j.find("uplift"); it != j.end()) {
      if (!it->is_object()) fail(path + "/uplift", "expected an object of attack id -> uplift");
      for (const auto& [attack, value] : it->items()) {
        e.uplift[attack] = number(value, path + "/uplift/" + escape_token(attack));
      }
    }
    return e;
  }

  Portfolio portfolio(const Json& j, const std::string& path) {
    object(j, path, {"budget", "gdfs", "edges"});
    Portfolio p;
    p.budget = req_number(j, "budget", path);
    const Json& gdfs = req_array(j, "gdfs", path);
    for (std::size_t i = 0; i < gdfs.size(); ++i) {
      p.gdfs.push_back(gdf(gdfs[i], path + "/gdfs/" + std::to_string(i)));
    }
    if (const Json* edges = opt_array(j, "edges", path)) {
      for (std::size_t i = 0; i < edges->size(); ++i) {
        p.edges.push_back(edge((*edges)[i], path + "/edges/" + std::to_string(i)));
      }
    }
    return p;
  }

  Distribution distribution(const Json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    const std::string type = req_string(j, "type", path);
    if (type == "point") {
      object(j, path, {"type", "value"});
      return PointDist{req_number(j, "value", path)};
    }
    if (type == "uniform") {
      object(j, path, {"type", "lo", "hi"});
      return UniformDist{req_number(j, "lo", path), req_number(j, "hi", path)};
    }
    if (type == "triangular" || type == "pert") {
      object(j, path, {"type", "lo", "mode", "hi"});
      const double lo = req_number(j, "lo", path);
      const double mode = req_number(j, "mode", path);
      const double hi = req_number(j, "hi", path);
      if (type == "pert") return PertDist{lo, mode, hi};
      return TriangularDist{lo, mode, hi};
    }
    fail(path + "/type", "unknown distribution type '" + type + "'");
  }

  UncertainParam param(const Json& j, const std::string& path) {
    object(j, path, {"target", "distribution"});
    UncertainParam u;
    u.target = req_string(j, "target", path);
    u.distribution = distribution(required(j, "distribution", path), path + "/distribution");
    return u;
  }

 private:
  ParseOptions options_;
  std::vector<std::string> warnings_;
};

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

Json breach_json(const BreachModel& b) {
  return std::visit(
      [](const auto& m) -> Json {
        using T = std::decay_t<decltype(m)>;
        Json j;
        if constexpr (std::is_same_v<T, GordonLoebI>) {
          j["family"] = "gordon_loeb_1";
          j["alpha"] = m.alpha;
          j["beta"] = m.beta;
        } else if constexpr (std::is_same_v<T, GordonLoebII>) {
          j["family"] = "gordon_loeb_2";
          j["alpha"] = m.alpha;
        } else if constexpr (std::is_same_v<T, Exponential>) {
          j["family"] = "exponential";
          j["kappa"] = m.kappa;
        } else {
          j["family"] = "table";
          j["knots"] = Json::array();
          for (const auto& k : m.knots) j["knots"].push_back(Json::array({k.spend, k.multiplier}));
        }
        return j;
      },
      b.family());
}

Json distribution_json(const Distribution& d) {
  return std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        Json j;
        if constexpr (std::is_same_v<T, PointDist>) {
          j["type"] = "point";
          j["value"] = v.value;
        } else if constexpr (std::is_same_v<T, UniformDist>) {
          j["type"] = "uniform";
          j["lo"] = v.lo;
          j["hi"] = v.hi;
        } else {
          j["type"] = std::is_same_v<T, PertDist> ? "pert" : "triangular";
          j["lo"] = v.lo;
          j["mode"] = v.mode;
          j["hi"] = v.hi;
        }
        return j;
      },
      d);
}

}  // namespace

ScenarioFile parse_scenario(std::string_view text, const ParseOptions& options) {
  Json doc;
  try {
    doc = Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte);
    throw Error(ErrorKind::kSyntaxError,
                "syntax error at line " + std::to_string(line) + ", column " + std::to_string(col) +
                    ": " + e.what());
  }

  Reader r(options);
  r.object(doc, "", {"schema_version", "metadata", "portfolio", "uncertainty"});
  ScenarioFile s;
  const double version = r.req_number(doc, "schema_version", "");
  if (version != 1.0) r.fail("/schema_version", "unsupported schema version (expected 1)");
  s.schema_version = 1;
  if (auto it = doc.find("metadata"); it != doc.end()) {
    r.object(*it, "/metadata", {"title", "notes"});
    s.metadata.title = r.opt_string(*it, "title", "/metadata", "");
    s.metadata.notes = r.opt_string(*it, "notes", "/metadata", "");
  }
  s.portfolio = r.portfolio(r.required(doc, "portfolio", ""), "/portfolio");
  if (const Json* u = r.opt_array(doc, "uncertainty", "")) {
    for (std::size_t i = 0; i < u->size(); ++i) {
      s.uncertainty.push_back(r.param((*u)[i], "/uncertainty/" + std::to_string(i)));
    }
  }
  s.warnings = r.take_warnings();
  if (!options.validate) return s;

  require_valid(s.portfolio);
  for (std::size_t i = 0; i < s.uncertainty.size(); ++i) {
    check_distribution(s.uncertainty[i].distribution, "/uncertainty/" + std::to_string(i) + "/distribution");
    resolve_target(s.portfolio, s.uncertainty[i].target);
  }
  return s;
}

ScenarioFile load_scenario(const std::filesystem::path& path, const ParseOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kInvalidArgument, "cannot open scenario file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), options);
}

std::string serialize_scenario(const ScenarioFile& s) {
  Json doc;
  doc["schema_version"] = s.schema_version;
  doc["metadata"] = {{"title", s.metadata.title}, {"notes", s.metadata.notes}};
  Json portfolio;
  portfolio["budget"] = s.portfolio.budget;
  portfolio["gdfs"] = Json::array();
  for (const auto& g : s.portfolio.gdfs) {
    Json gj;
    gj["id"] = g.id;
    gj["name"] = g.name;
    gj["ben"] = g.ben;
    gj["dir_costs"] = g.dir_costs;
    gj["mandatory"] = g.mandatory;
    if (g.actual_spend) gj["actual_spend"] = *g.actual_spend;
    gj["attacks"] = Json::array();
    for (const auto& a : g.attacks) {
      gj["attacks"].push_back({{"id", a.id},
                               {"description", a.description},
                               {"baseline_prob", a.baseline_prob},
                               {"loss", a.loss},
                               {"breach", breach_json(a.breach)}});
    }
    gj["adverse"] = Json::array();
    for (const auto& k : g.adverse) {
      gj["adverse"].push_back({{"id", k.id}, {"prob", k.prob}, {"cost", k.cost}});
    }
    portfolio["gdfs"].push_back(std::move(gj));
  }
  portfolio["edges"] = Json::array();
  for (const auto& e : s.portfolio.edges) {
    Json ej;
    ej["from"] = e.from;
    ej["to"] = e.to;
    ej["default_uplift"] = e.default_uplift;
    ej["uplift"] = Json::object();
    for (const auto& [attack, u] : e.uplift) ej["uplift"][attack] = u;
    portfolio["edges"].push_back(std::move(ej));
  }
  doc["portfolio"] = std::move(portfolio);
  doc["uncertainty"] = Json::array();
  for (const auto& u : s.uncertainty) {
    doc["uncertainty"].push_back({{"target", u.target}, {"distribution", distribution_json(u.distribution)}});
  }
  return doc.dump(2) + "\n";
}

}  // namespace enbcds
