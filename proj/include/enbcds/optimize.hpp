#ifndef ENBCDS_OPTIMIZE_HPP
#define ENBCDS_OPTIMIZE_HPP

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>

#include "enbcds/model.hpp"
#include "enbcds/net_benefit.hpp"

namespace enbcds {

// Golden-section search for the maximiser of a unimodal function on
// [lo, hi]. Stops once the bracket is narrower than `abs_tol`.
double golden_section_maximize(const std::function<double(double)>& f, double lo, double hi,
                               double abs_tol, std::size_t max_iterations = 300);

// Coarse scan (uniform points plus geometrically spaced points near `lo`)
// followed by golden-section refinement between the best point's neighbours.
// For objectives that are not guaranteed unimodal.
double scan_then_golden_maximize(const std::function<double(double)>& f, double lo, double hi,
                                 double abs_tol, std::size_t scan_points);

struct OptimalSpend {
  Money s_star = 0.0;
  Money value = 0.0;
  // Stationary point of s + p*L*(alpha*s + 1)^(-beta), present for a single
  // Gordon-Loeb I attack evaluated additively without dependencies.
  std::optional<Money> closed_form;
};

// Maximiser of ENBCDS on [0, f(0)]. Concave cases (additive mode, no
// dependency uplift on this GDF) use golden-section search directly; the
// others scan first.
OptimalSpend optimal_spend(const Gdf& x, const EvalContext& ctx = {});

// Same, restricted to [0, min(hi, f(0))].
OptimalSpend optimal_spend_within(const Gdf& x, Money hi, const EvalContext& ctx = {});

// ((p*L*alpha*beta)^(1/(beta+1)) - 1) / alpha, clamped at 0.
Money gordon_loeb_i_stationary_spend(Probability p, Money loss, double alpha, double beta);

// Spend that minimises the expected loss of a GDF that cannot be removed.
// Same maximiser as optimal_spend even when the peak value is negative.
// Throws Error(kNotMandatory).
Money mandatory_min_loss(const Gdf& x, const EvalContext& ctx = {});

struct AllocationOptions {
  CybMode mode = CybMode::kAdditive;
  std::optional<Money> budget;  // overrides Portfolio::budget
  std::size_t max_sweeps = 100;
  double sweep_tolerance = 1e-9;  // relative to portfolio_scale
  // After the drop-rule fixed point, also try re-adding or removing single
  // optional GDFs and keep the change when the objective improves.
  bool refine_drops = true;
};

// Optimality certificate. With shared marginal value lambda (0 when the
// budget is slack), every retained GDF with positive spend has one-sided
// marginals bracketing lambda and every GDF at zero spend has right marginal
// <= lambda, each within tolerance = 1e-4 * (1 + lambda).
struct KktDiagnostics {
  double lambda = 0.0;
  bool budget_binding = false;
  std::size_t interior_count = 0;
  double max_interior_gap = 0.0;
  double max_violation = 0.0;
  double tolerance = 0.0;
  bool satisfied = true;
};

struct AllocationResult {
  SpendVector spends;  // every GDF; dropped ones at 0
  std::set<std::string> dropped;
  Money objective = 0.0;  // sum of ENBCDS over retained GDFs
  Money budget = 0.0;
  Money budget_used = 0.0;
  std::map<std::string, double> marginal_at_solution;  // retained GDFs only
  std::map<std::string, Money> value_at_solution;      // retained GDFs only
  std::size_t iterations = 0;
  std::string method;
  KktDiagnostics kkt;
};

// Maximises the sum of ENBCDS over retained GDFs subject to the shared
// budget. Uncoupled additive portfolios are solved by water-filling on the
// shared marginal value; optional GDFs with negative ENBCDS at their
// allocated spend are dropped one at a time (most negative first) until no
// such GDF remains. Dependency edges and the literal cost mode switch to
// pairwise coordinate ascent over (GDF, GDF) and (GDF, unspent) pairs.
AllocationResult allocate(const Portfolio& p, const AllocationOptions& options = {});

// Sum of ENBCDS over retained GDFs, evaluated with dependency coupling.
Money allocation_objective(const Portfolio& p, const SpendVector& spends,
                           const std::set<std::string>& dropped, CybMode mode = CybMode::kAdditive);

// Sum of value_scale over GDFs; used to scale allocation tolerances.
Money portfolio_scale(const Portfolio& p);

}  // namespace enbcds

#endif  // ENBCDS_OPTIMIZE_HPP
