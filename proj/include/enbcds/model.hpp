#ifndef ENBCDS_MODEL_HPP
#define ENBCDS_MODEL_HPP

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace enbcds {

// Annualized US dollars. Benefits, direct costs, losses and defense spend all
// share this per-year unit so they can be combined additively.
using Money = double;

// Probability in [0, 1]. Range is enforced by validate_portfolio, not here,
// so that a parsed document can report every violation at once.
using Probability = double;

// g(s) = (alpha * s + 1)^(-beta)
struct GordonLoebI {
  double alpha = 1.0;
  double beta = 1.0;
  bool operator==(const GordonLoebI&) const = default;
};

// g(s) = v^(alpha * s) where v is the attack's baseline probability. When v
// is 0 or 1 the multiplier is identically 1.
struct GordonLoebII {
  double alpha = 1.0;
  bool operator==(const GordonLoebII&) const = default;
};

// g(s) = exp(-kappa * s)
struct Exponential {
  double kappa = 1.0;
  bool operator==(const Exponential&) const = default;
};

struct TableKnot {
  Money spend = 0.0;
  double multiplier = 1.0;
  bool operator==(const TableKnot&) const = default;
};

// Piecewise-linear interpolation through the knots, constant past the last.
// The first knot must sit at (0, 1).
struct TableModel {
  std::vector<TableKnot> knots;
  bool operator==(const TableModel&) const = default;
};

// Breach-probability model: maps defense spend s to a multiplier g(s) in
// (0, 1] on an attack's baseline success probability. g(0) = 1, g is
// non-increasing and convex.
class BreachModel {
 public:
  using Family = std::variant<GordonLoebI, GordonLoebII, Exponential, TableModel>;

  BreachModel() = default;
  BreachModel(Family family) : family_(std::move(family)) {}  // NOLINT

  const Family& family() const { return family_; }
  Family& family() { return family_; }

  bool is_parametric() const { return !std::holds_alternative<TableModel>(family_); }

  double multiplier(double spend, Probability baseline) const;

  // dg/ds. Analytic for the parametric families; the table model uses a
  // central difference with step `fd_step` (forward difference near 0).
  double slope(double spend, Probability baseline, double fd_step) const;

  bool operator==(const BreachModel&) const = default;

 private:
  Family family_ = Exponential{};
};

struct AttackType {
  std::string id;
  std::string description;
  Probability baseline_prob = 0.0;
  Money loss = 0.0;
  BreachModel breach;
  bool operator==(const AttackType&) const = default;
};

// Exposure of a GDF to one non-cyber adverse event. A GDF that is not
// relevant to an event carries cost 0.
struct AdverseEvent {
  std::string id;
  Probability prob = 0.0;
  Money cost = 0.0;
  bool operator==(const AdverseEvent&) const = default;
};

// One grid digital functionality.
//
// Attack losses are treated as additive in expectation. Two attacks whose
// consequences overlap (the same outage reached by different routes) will be
// double counted unless the scenario author apportions the loss between them.
struct Gdf {
  std::string id;
  std::string name;
  Money ben = 0.0;
  Money dir_costs = 0.0;
  std::vector<AttackType> attacks;
  std::vector<AdverseEvent> adverse;
  bool mandatory = false;
  std::optional<Money> actual_spend;

  std::optional<std::size_t> attack_index(const std::string& attack_id) const;
  bool operator==(const Gdf&) const = default;
};

// A successful attack on `from` multiplies the success probability of the
// listed attacks on `to` by their uplift (clamped to 1). Attacks not listed
// use `default_uplift`.
struct DependencyEdge {
  std::string from;
  std::string to;
  std::map<std::string, double> uplift;
  double default_uplift = 1.0;

  double uplift_for(const std::string& attack_id) const;
  bool operator==(const DependencyEdge&) const = default;
};

struct Portfolio {
  std::vector<Gdf> gdfs;
  std::vector<DependencyEdge> edges;
  Money budget = 0.0;

  std::optional<std::size_t> index_of(const std::string& gdf_id) const;
  // Throws Error(kUnknownGdf).
  const Gdf& gdf(const std::string& gdf_id) const;
  bool operator==(const Portfolio&) const = default;
};

enum class ViolationKind {
  kCyclicDependency,
  kDuplicateId,
  kProbabilityOutOfRange,
  kNegativeMoney,
  kNonConvexTable,
  kInvalidBreachParameter,
  kUnknownReference,
  kInvalidUplift,
  kNonFinite,
};

const char* to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string path;  // JSON pointer of the offending entity
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string to_string() const;
};

ValidationReport validate_portfolio(const Portfolio& portfolio);

// Throws Error(kValidationError) listing every violation.
const Portfolio& require_valid(const Portfolio& portfolio);

// Indices of GDFs in dependency order (parents before children). Throws
// Error(kCycleDetected) when the edges contain a cycle and Error(kUnknownGdf)
// on a dangling endpoint.
std::vector<std::size_t> topological_order(const Portfolio& portfolio);

}  // namespace enbcds

#endif  // ENBCDS_MODEL_HPP
