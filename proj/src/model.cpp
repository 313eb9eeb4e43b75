#include "enbcds/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "enbcds/error.hpp"

namespace enbcds {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUnknownGdf: return "UnknownGdf";
    case ErrorKind::kDegenerateRange: return "DegenerateRange";
    case ErrorKind::kCycleDetected: return "CycleDetected";
    case ErrorKind::kNotMandatory: return "NotMandatory";
    case ErrorKind::kNonConcaveMode: return "NonConcaveMode";
    case ErrorKind::kUnresolvedTarget: return "UnresolvedTarget";
    case ErrorKind::kInvalidDistribution: return "InvalidDistribution";
    case ErrorKind::kSyntaxError: return "SyntaxError";
    case ErrorKind::kSchemaError: return "SchemaError";
    case ErrorKind::kValidationError: return "ValidationError";
    case ErrorKind::kEmptyCurve: return "EmptyCurve";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

namespace {

double table_multiplier(const TableModel& table, double s) {
  const auto& k = table.knots;
  if (k.empty()) return 1.0;
  if (s <= k.front().spend) return k.front().multiplier;
  if (s >= k.back().spend) return k.back().multiplier;
  auto hi = std::upper_bound(k.begin(), k.end(), s,
                             [](double v, const TableKnot& knot) { return v < knot.spend; });
  auto lo = hi - 1;
  const double t = (s - lo->spend) / (hi->spend - lo->spend);
  return lo->multiplier + t * (hi->multiplier - lo->multiplier);
}

bool degenerate_gl2_base(Probability v) { return !(v > 0.0 && v < 1.0); }

}  // namespace

double BreachModel::multiplier(double s, Probability baseline) const {
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, GordonLoebI>) {
          return std::pow(m.alpha * s + 1.0, -m.beta);
        } else if constexpr (std::is_same_v<T, GordonLoebII>) {
          if (degenerate_gl2_base(baseline)) return 1.0;
          return std::exp(m.alpha * s * std::log(baseline));
        } else if constexpr (std::is_same_v<T, Exponential>) {
          return std::exp(-m.kappa * s);
        } else {
          return table_multiplier(m, s);
        }
      },
      family_);
}

double BreachModel::slope(double s, Probability baseline, double fd_step) const {
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, GordonLoebI>) {
          return -m.alpha * m.beta * std::pow(m.alpha * s + 1.0, -m.beta - 1.0);
        } else if constexpr (std::is_same_v<T, GordonLoebII>) {
          if (degenerate_gl2_base(baseline)) return 0.0;
          const double log_v = std::log(baseline);
          return m.alpha * log_v * std::exp(m.alpha * s * log_v);
        } else if constexpr (std::is_same_v<T, Exponential>) {
          return -m.kappa * std::exp(-m.kappa * s);
        } else {
          double h = fd_step;
          if (!(h > 0.0)) {
            const double span = m.knots.empty() ? 1.0 : std::max(1.0, m.knots.back().spend);
            h = 1e-6 * span;
          }
          if (s < h) return (table_multiplier(m, s + h) - table_multiplier(m, s)) / h;
          return (table_multiplier(m, s + h) - table_multiplier(m, s - h)) / (2.0 * h);
        }
      },
      family_);
}

std::optional<std::size_t> Gdf::attack_index(const std::string& attack_id) const {
  for (std::size_t i = 0; i < attacks.size(); ++i) {
    if (attacks[i].id == attack_id) return i;
  }
  return std::nullopt;
}

double DependencyEdge::uplift_for(const std::string& attack_id) const {
  auto it = uplift.find(attack_id);
  return it == uplift.end() ? default_uplift : it->second;
}

std::optional<std::size_t> Portfolio::index_of(const std::string& gdf_id) const {
  for (std::size_t i = 0; i < gdfs.size(); ++i) {
    if (gdfs[i].id == gdf_id) return i;
  }
  return std::nullopt;
}

const Gdf& Portfolio::gdf(const std::string& gdf_id) const {
  auto idx = index_of(gdf_id);
  if (!idx) throw Error(ErrorKind::kUnknownGdf, "unknown GDF '" + gdf_id + "'", "/portfolio/gdfs");
  return gdfs[*idx];
}

const char* to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kCyclicDependency: return "CyclicDependency";
    case ViolationKind::kDuplicateId: return "DuplicateId";
    case ViolationKind::kProbabilityOutOfRange: return "ProbabilityOutOfRange";
    case ViolationKind::kNegativeMoney: return "NegativeMoney";
    case ViolationKind::kNonConvexTable: return "NonConvexTable";
    case ViolationKind::kInvalidBreachParameter: return "InvalidBreachParameter";
    case ViolationKind::kUnknownReference: return "UnknownReference";
    case ViolationKind::kInvalidUplift: return "InvalidUplift";
    case ViolationKind::kNonFinite: return "NonFinite";
  }
  return "Unknown";
}

std::string ValidationReport::to_string() const {
  std::ostringstream out;
  for (const auto& v : violations) {
    out << enbcds::to_string(v.kind) << " at " << v.path << ": " << v.message << '\n';
  }
  return out.str();
}

namespace {

class Validator {
 public:
  ValidationReport run(const Portfolio& p) {
    money(p.budget, "/portfolio/budget", "budget");
    std::set<std::string> gdf_ids;
    for (std::size_t i = 0; i < p.gdfs.size(); ++i) {
      const std::string path = "/portfolio/gdfs/" + std::to_string(i);
      if (!gdf_ids.insert(p.gdfs[i].id).second) {
        add(ViolationKind::kDuplicateId, path + "/id", "duplicate GDF id '" + p.gdfs[i].id + "'");
      }
      gdf(p.gdfs[i], path);
    }
    edges(p);
    return std::move(report_);
  }

 private:
  void add(ViolationKind kind, std::string path, std::string message) {
    report_.violations.push_back({kind, std::move(path), std::move(message)});
  }

  void money(double v, const std::string& path, const std::string& what) {
    if (!std::isfinite(v)) {
      add(ViolationKind::kNonFinite, path, what + " is not finite");
    } else if (v < 0.0) {
      add(ViolationKind::kNegativeMoney, path, what + " must be >= 0");
    }
  }

  void probability(double v, const std::string& path) {
    if (!std::isfinite(v)) {
      add(ViolationKind::kNonFinite, path, "probability is not finite");
    } else if (v < 0.0 || v > 1.0) {
      add(ViolationKind::kProbabilityOutOfRange, path, "probability must lie in [0, 1]");
    }
  }

  void positive(double v, const std::string& path, const std::string& what, double floor,
                bool strict) {
    const bool ok = std::isfinite(v) && (strict ? v > floor : v >= floor);
    if (!ok) {
      add(ViolationKind::kInvalidBreachParameter, path,
          what + (strict ? " must be > " : " must be >= ") + std::to_string(floor));
    }
  }

  void table(const TableModel& t, const std::string& path) {
    const auto& k = t.knots;
    if (k.empty()) {
      add(ViolationKind::kNonConvexTable, path + "/knots", "table needs at least one knot");
      return;
    }
    if (k.front().spend != 0.0 || k.front().multiplier != 1.0) {
      add(ViolationKind::kNonConvexTable, path + "/knots/0", "first knot must be (0, 1)");
    }
    for (std::size_t i = 0; i < k.size(); ++i) {
      const std::string kp = path + "/knots/" + std::to_string(i);
      if (!std::isfinite(k[i].spend) || !std::isfinite(k[i].multiplier)) {
        add(ViolationKind::kNonFinite, kp, "knot is not finite");
        return;
      }
      if (!(k[i].multiplier > 0.0 && k[i].multiplier <= 1.0)) {
        add(ViolationKind::kNonConvexTable, kp, "multiplier must lie in (0, 1]");
      }
      if (i == 0) continue;
      if (!(k[i].spend > k[i - 1].spend)) {
        add(ViolationKind::kNonConvexTable, kp, "knot spends must be strictly increasing");
        return;
      }
      if (k[i].multiplier > k[i - 1].multiplier) {
        add(ViolationKind::kNonConvexTable, kp, "multipliers must be non-increasing");
      }
    }
    for (std::size_t i = 2; i < k.size(); ++i) {
      const double left = (k[i - 1].multiplier - k[i - 2].multiplier) / (k[i - 1].spend - k[i - 2].spend);
      const double right = (k[i].multiplier - k[i - 1].multiplier) / (k[i].spend - k[i - 1].spend);
      if (right < left - 1e-12 * std::max(1.0, std::abs(left))) {
        add(ViolationKind::kNonConvexTable, path + "/knots/" + std::to_string(i),
            "segment slopes must be non-decreasing (convex)");
      }
    }
  }

  void breach(const BreachModel& b, const std::string& path) {
    std::visit(
        [&](const auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, GordonLoebI>) {
            positive(m.alpha, path + "/alpha", "alpha", 0.0, true);
            positive(m.beta, path + "/beta", "beta", 1.0, false);
          } else if constexpr (std::is_same_v<T, GordonLoebII>) {
            positive(m.alpha, path + "/alpha", "alpha", 0.0, true);
          } else if constexpr (std::is_same_v<T, Exponential>) {
            positive(m.kappa, path + "/kappa", "kappa", 0.0, true);
          } else {
            table(m, path);
          }
        },
        b.family());
  }

  void gdf(const Gdf& g, const std::string& path) {
    money(g.ben, path + "/ben", "ben");
    money(g.dir_costs, path + "/dir_costs", "dir_costs");
    if (g.actual_spend) money(*g.actual_spend, path + "/actual_spend", "actual_spend");
    std::set<std::string> ids;
    for (std::size_t j = 0; j < g.attacks.size(); ++j) {
      const auto& a = g.attacks[j];
      const std::string ap = path + "/attacks/" + std::to_string(j);
      if (!ids.insert(a.id).second) {
        add(ViolationKind::kDuplicateId, ap + "/id", "duplicate attack id '" + a.id + "'");
      }
      probability(a.baseline_prob, ap + "/baseline_prob");
      money(a.loss, ap + "/loss", "loss");
      breach(a.breach, ap + "/breach");
    }
    std::set<std::string> event_ids;
    for (std::size_t k = 0; k < g.adverse.size(); ++k) {
      const auto& e = g.adverse[k];
      const std::string ep = path + "/adverse/" + std::to_string(k);
      if (!event_ids.insert(e.id).second) {
        add(ViolationKind::kDuplicateId, ep + "/id", "duplicate adverse event id '" + e.id + "'");
      }
      probability(e.prob, ep + "/prob");
      money(e.cost, ep + "/cost", "cost");
    }
  }

  void edges(const Portfolio& p) {
    bool endpoints_ok = true;
    std::set<std::pair<std::string, std::string>> seen;
    for (std::size_t i = 0; i < p.edges.size(); ++i) {
      const auto& e = p.edges[i];
      const std::string path = "/portfolio/edges/" + std::to_string(i);
      if (!seen.emplace(e.from, e.to).second) {
        add(ViolationKind::kDuplicateId, path, "duplicate edge " + e.from + " -> " + e.to);
      }
      const auto from = p.index_of(e.from);
      const auto to = p.index_of(e.to);
      if (!from) {
        add(ViolationKind::kUnknownReference, path + "/from", "unknown GDF '" + e.from + "'");
        endpoints_ok = false;
      }
      if (!to) {
        add(ViolationKind::kUnknownReference, path + "/to", "unknown GDF '" + e.to + "'");
        endpoints_ok = false;
      }
      if (e.from == e.to) {
        add(ViolationKind::kCyclicDependency, path, "edge from a GDF to itself");
        endpoints_ok = false;
      }
      if (!(std::isfinite(e.default_uplift) && e.default_uplift >= 1.0)) {
        add(ViolationKind::kInvalidUplift, path + "/default_uplift", "uplift must be >= 1");
      }
      for (const auto& [attack, u] : e.uplift) {
        if (!(std::isfinite(u) && u >= 1.0)) {
          add(ViolationKind::kInvalidUplift, path + "/uplift/" + attack, "uplift must be >= 1");
        }
        if (to && !p.gdfs[*to].attack_index(attack)) {
          add(ViolationKind::kUnknownReference, path + "/uplift/" + attack,
              "GDF '" + e.to + "' has no attack '" + attack + "'");
        }
      }
    }
    if (!endpoints_ok) return;
    try {
      topological_order(p);
    } catch (const Error&) {
      add(ViolationKind::kCyclicDependency, "/portfolio/edges", "dependency graph contains a cycle");
    }
  }

  ValidationReport report_;
};

}  // namespace

ValidationReport validate_portfolio(const Portfolio& portfolio) {
  return Validator{}.run(portfolio);
}

const Portfolio& require_valid(const Portfolio& portfolio) {
  auto report = validate_portfolio(portfolio);
  if (!report.ok()) {
    throw Error(ErrorKind::kValidationError, "invalid portfolio:\n" + report.to_string(),
                report.violations.front().path);
  }
  return portfolio;
}

std::vector<std::size_t> topological_order(const Portfolio& portfolio) {
  const std::size_t n = portfolio.gdfs.size();
  std::vector<std::vector<std::size_t>> children(n);
  std::vector<std::size_t> indegree(n, 0);
  for (const auto& e : portfolio.edges) {
    const auto from = portfolio.index_of(e.from);
    const auto to = portfolio.index_of(e.to);
    if (!from || !to) {
      throw Error(ErrorKind::kUnknownGdf, "edge " + e.from + " -> " + e.to + " has an unknown endpoint",
                  "/portfolio/edges");
    }
    children[*from].push_back(*to);
    ++indegree[*to];
  }
  // Kahn's algorithm, smallest index first so the order is deterministic.
  std::set<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i) {
    if (indegree[i] == 0) ready.insert(i);
  }
  std::vector<std::size_t> order;
  order.reserve(n);
  while (!ready.empty()) {
    const std::size_t i = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(i);
    for (std::size_t c : children[i]) {
      if (--indegree[c] == 0) ready.insert(c);
    }
  }
  if (order.size() != n) {
    throw Error(ErrorKind::kCycleDetected, "dependency graph contains a cycle", "/portfolio/edges");
  }
  return order;
}

}  // namespace enbcds
