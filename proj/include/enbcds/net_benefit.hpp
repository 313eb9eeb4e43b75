#ifndef ENBCDS_NET_BENEFIT_HPP
#define ENBCDS_NET_BENEFIT_HPP

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "enbcds/model.hpp"

namespace enbcds {

// How defense spend enters the expected cyber cost f(s).
//
//   kAdditive: f(s) = s + sum_j P_s(j) * L_j        (concave ENBCDS)
//   kLiteral:  f(s) = sum_j P_s(j) * (L_j + s)      (spend weighted by P; not
//                                                   concave in general)
enum class CybMode { kAdditive, kLiteral };

const char* to_string(CybMode mode);

// Defense spend per GDF id.
using SpendVector = std::map<std::string, Money>;

// Compromise state of every GDF in a portfolio at a fixed spend vector.
//
// Parents of a GDF are treated as independent. The success probability of
// attack j on x, with base = baseline_j * g_j(s_x), is the expectation over
// every combination S of compromised parents of
//
//   min(1, base * prod_{u in S} uplift_{u->x, j})
//
// weighted by prod_{u in S} q_u * prod_{u not in S} (1 - q_u), where q_u is
// the probability that at least one attack on u succeeds. q_u is computed the
// same way, conditioning on u's own parents, so on a polytree the result is
// the exact marginal of the joint compromise distribution. Dropped GDFs are
// not deployed and are never compromised.
class DependencyContext {
 public:
  DependencyContext(const Portfolio& portfolio, std::vector<Money> spends,
                    std::vector<bool> retained);

  // Missing ids spend 0; every GDF not in `dropped` is retained.
  static DependencyContext from_spends(const Portfolio& portfolio, const SpendVector& spends,
                                       const std::set<std::string>& dropped = {});

  // Other GDFs spend their actual_spend (0 when absent).
  static DependencyContext at_actual_spend(const Portfolio& portfolio);

  const Portfolio& portfolio() const { return *portfolio_; }
  Money spend(std::size_t gdf) const { return spends_[gdf]; }
  bool retained(std::size_t gdf) const { return retained_[gdf]; }
  bool has_parents(std::size_t gdf) const { return !mixtures_[gdf].empty(); }

  // Probability that at least one attack on the GDF succeeds at its context
  // spend.
  Probability compromise_prob(std::size_t gdf) const { return compromise_[gdf]; }

  // Weighted parent states for attack `attack` of GDF `gdf`: pairs of
  // (state probability, product of uplifts). Empty when the GDF has no
  // retained parents.
  struct State {
    double weight;
    double uplift;
  };
  const std::vector<State>& mixture(std::size_t gdf, std::size_t attack) const {
    return mixtures_[gdf][attack];
  }

 private:
  void build();

  const Portfolio* portfolio_;
  std::vector<Money> spends_;
  std::vector<bool> retained_;
  std::vector<Probability> compromise_;
  std::vector<std::vector<std::vector<State>>> mixtures_;
};

// Options shared by every evaluation routine. `dependencies` must refer to
// the portfolio that owns the evaluated GDF.
struct EvalContext {
  const DependencyContext* dependencies = nullptr;
  CybMode mode = CybMode::kAdditive;
};

Probability effective_prob(const Gdf& x, std::size_t attack, Money s, const EvalContext& ctx = {});
// Throws Error(kInvalidArgument) for an unknown attack id.
Probability effective_prob(const Gdf& x, const std::string& attack_id, Money s,
                           const EvalContext& ctx = {});

// d/ds of effective_prob.
double effective_prob_slope(const Gdf& x, std::size_t attack, Money s, const EvalContext& ctx = {});

// sum_k P(x_k) * Noncyb(x_k)
Money expected_noncyber_cost(const Gdf& x);

// Ben - DirCosts - expected non-cyber cost: the spend-independent part.
Money static_net_benefit(const Gdf& x);

// sum_j P_s(x_j) * L_j
Money expected_cyber_loss(const Gdf& x, Money s, const EvalContext& ctx = {});

// f(s)
Money expected_cyber_cost(const Gdf& x, Money s, const EvalContext& ctx = {});

// ENB(x) at spend s. Identical to enbcds().
Money enb(const Gdf& x, Money s, const EvalContext& ctx = {});

// ENBCDS(s) = Ben - DirCosts - expected non-cyber cost - f(s)
Money enbcds(const Gdf& x, Money s, const EvalContext& ctx = {});

// dENBCDS/ds. Analytic for parametric breach models; the table model uses a
// central difference with step 1e-6 * f(0).
double enbcds_slope(const Gdf& x, Money s, const EvalContext& ctx = {});

// Monetary magnitude used to scale tolerances: |static net benefit| + f(0),
// or 1 when both vanish.
Money value_scale(const Gdf& x, const EvalContext& ctx = {});

// Lookups by id. Throw Error(kUnknownGdf).
Money enbcds(const Portfolio& p, const std::string& gdf_id, Money s, const EvalContext& ctx = {});
Money expected_cyber_cost(const Portfolio& p, const std::string& gdf_id, Money s,
                          const EvalContext& ctx = {});

struct CurveSample {
  Money s;
  Money value;
  bool operator==(const CurveSample&) const = default;
};

struct EnbcdsCurve {
  std::string gdf_id;
  std::vector<CurveSample> samples;  // strictly increasing in s
  Money s_star = 0.0;
  Money peak_value = 0.0;
  std::optional<Money> actual_spend;
};

// Uniform samples of ENBCDS on [0, s_max] plus the maximiser on that range.
// Without s_max the range is [0, f(0)] (or [0, 1] when f(0) = 0): spend beyond
// f(0) is dominated by zero spend because f(s) >= s.
// Throws Error(kDegenerateRange) when n_samples < 2 or s_max <= 0.
EnbcdsCurve enbcds_curve(const Gdf& x, std::optional<Money> s_max, std::size_t n_samples,
                         const EvalContext& ctx = {});

}  // namespace enbcds

#endif  // ENBCDS_NET_BENEFIT_HPP
