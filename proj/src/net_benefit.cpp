#include "enbcds/net_benefit.hpp"

#include <algorithm>
#include <cmath>

#include "enbcds/error.hpp"

namespace enbcds {

const char* to_string(CybMode mode) {
  return mode == CybMode::kAdditive ? "additive" : "literal";
}

namespace {

constexpr std::size_t kMaxParents = 20;

const std::vector<DependencyContext::State>* find_mixture(const Gdf& x, std::size_t attack,
                                                          const EvalContext& ctx,
                                                          std::optional<std::size_t>& slot) {
  if (ctx.dependencies == nullptr) return nullptr;
  if (!slot) {
    slot = ctx.dependencies->portfolio().index_of(x.id);
    if (!slot) {
      throw Error(ErrorKind::kUnknownGdf, "GDF '" + x.id + "' is not part of the dependency context");
    }
  }
  if (!ctx.dependencies->has_parents(*slot)) return nullptr;
  return &ctx.dependencies->mixture(*slot, attack);
}

Probability mixed_prob(double base, const std::vector<DependencyContext::State>* mix) {
  if (mix == nullptr || mix->empty()) return std::clamp(base, 0.0, 1.0);
  double p = 0.0;
  for (const auto& st : *mix) p += st.weight * std::min(1.0, base * st.uplift);
  return std::clamp(p, 0.0, 1.0);
}

double mixed_slope(double base, double base_slope,
                   const std::vector<DependencyContext::State>* mix) {
  if (mix == nullptr || mix->empty()) return base_slope;
  double d = 0.0;
  for (const auto& st : *mix) {
    if (base * st.uplift < 1.0) d += st.weight * st.uplift * base_slope;
  }
  return d;
}

void check_spend(Money s) {
  if (!(std::isfinite(s) && s >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "spend must be finite and >= 0");
  }
}

// Sum of P_s * L and, for the literal mode, sum of P_s; also the slopes.
struct LossTerms {
  double loss = 0.0;
  double prob_sum = 0.0;
  double loss_slope = 0.0;
  double prob_slope_sum = 0.0;
};

LossTerms loss_terms(const Gdf& x, Money s, const EvalContext& ctx, bool with_slopes) {
  LossTerms t;
  std::optional<std::size_t> slot;
  double fd_step = 0.0;
  if (with_slopes) {
    const bool has_table = std::any_of(x.attacks.begin(), x.attacks.end(),
                                       [](const AttackType& a) { return !a.breach.is_parametric(); });
    if (has_table) fd_step = 1e-6 * loss_terms(x, 0.0, ctx, false).loss;
  }
  for (std::size_t j = 0; j < x.attacks.size(); ++j) {
    const auto& a = x.attacks[j];
    const auto* mix = find_mixture(x, j, ctx, slot);
    const double base = a.baseline_prob * a.breach.multiplier(s, a.baseline_prob);
    const double p = mixed_prob(base, mix);
    t.loss += p * a.loss;
    t.prob_sum += p;
    if (with_slopes) {
      const double base_slope = a.baseline_prob * a.breach.slope(s, a.baseline_prob, fd_step);
      const double dp = mixed_slope(base, base_slope, mix);
      t.loss_slope += dp * a.loss;
      t.prob_slope_sum += dp;
    }
  }
  return t;
}

}  // namespace

DependencyContext::DependencyContext(const Portfolio& portfolio, std::vector<Money> spends,
                                     std::vector<bool> retained)
    : portfolio_(&portfolio), spends_(std::move(spends)), retained_(std::move(retained)) {
  const std::size_t n = portfolio.gdfs.size();
  if (spends_.size() != n || retained_.size() != n) {
    throw Error(ErrorKind::kInvalidArgument, "spend and retained vectors must match the portfolio size");
  }
  for (Money s : spends_) check_spend(s);
  build();
}

DependencyContext DependencyContext::from_spends(const Portfolio& portfolio, const SpendVector& spends,
                                                 const std::set<std::string>& dropped) {
  const std::size_t n = portfolio.gdfs.size();
  std::vector<Money> s(n, 0.0);
  std::vector<bool> keep(n, true);
  for (const auto& [id, value] : spends) {
    auto idx = portfolio.index_of(id);
    if (!idx) throw Error(ErrorKind::kUnknownGdf, "unknown GDF '" + id + "' in spend vector");
    s[*idx] = value;
  }
  for (const auto& id : dropped) {
    auto idx = portfolio.index_of(id);
    if (!idx) throw Error(ErrorKind::kUnknownGdf, "unknown GDF '" + id + "' in dropped set");
    keep[*idx] = false;
  }
  return DependencyContext(portfolio, std::move(s), std::move(keep));
}

DependencyContext DependencyContext::at_actual_spend(const Portfolio& portfolio) {
  std::vector<Money> s;
  s.reserve(portfolio.gdfs.size());
  for (const auto& g : portfolio.gdfs) s.push_back(g.actual_spend.value_or(0.0));
  return DependencyContext(portfolio, std::move(s), std::vector<bool>(portfolio.gdfs.size(), true));
}

void DependencyContext::build() {
  const auto& p = *portfolio_;
  const std::size_t n = p.gdfs.size();
  compromise_.assign(n, 0.0);
  mixtures_.assign(n, {});
  const auto order = topological_order(p);

  std::vector<std::vector<const DependencyEdge*>> in_edges(n);
  for (const auto& e : p.edges) in_edges[*p.index_of(e.to)].push_back(&e);

  for (std::size_t i : order) {
    const Gdf& g = p.gdfs[i];
    if (!retained_[i]) continue;

    std::vector<std::size_t> parents;
    std::vector<const DependencyEdge*> links;
    for (const auto* e : in_edges[i]) {
      const std::size_t u = *p.index_of(e->from);
      if (retained_[u]) {
        parents.push_back(u);
        links.push_back(e);
      }
    }
    if (parents.size() > kMaxParents) {
      throw Error(ErrorKind::kInvalidArgument,
                  "GDF '" + g.id + "' has more than " + std::to_string(kMaxParents) + " parents");
    }

    std::vector<double> base(g.attacks.size());
    for (std::size_t j = 0; j < g.attacks.size(); ++j) {
      const auto& a = g.attacks[j];
      base[j] = a.baseline_prob * a.breach.multiplier(spends_[i], a.baseline_prob);
    }

    if (parents.empty()) {
      double survive = 1.0;
      for (double b : base) survive *= 1.0 - std::clamp(b, 0.0, 1.0);
      compromise_[i] = 1.0 - survive;
      continue;
    }

    auto& mix = mixtures_[i];
    mix.assign(g.attacks.size(), {});
    double q = 0.0;
    const std::size_t states = std::size_t{1} << parents.size();
    for (std::size_t mask = 0; mask < states; ++mask) {
      double w = 1.0;
      for (std::size_t k = 0; k < parents.size(); ++k) {
        const double qu = compromise_[parents[k]];
        w *= (mask >> k & 1U) ? qu : 1.0 - qu;
      }
      double survive = 1.0;
      for (std::size_t j = 0; j < g.attacks.size(); ++j) {
        double u = 1.0;
        for (std::size_t k = 0; k < parents.size(); ++k) {
          if (mask >> k & 1U) u *= links[k]->uplift_for(g.attacks[j].id);
        }
        mix[j].push_back({w, u});
        survive *= 1.0 - std::min(1.0, base[j] * u);
      }
      q += w * (1.0 - survive);
    }
    compromise_[i] = std::clamp(q, 0.0, 1.0);
  }
}

Probability effective_prob(const Gdf& x, std::size_t attack, Money s, const EvalContext& ctx) {
  check_spend(s);
  if (attack >= x.attacks.size()) {
    throw Error(ErrorKind::kInvalidArgument, "attack index out of range for GDF '" + x.id + "'");
  }
  std::optional<std::size_t> slot;
  const auto& a = x.attacks[attack];
  const double base = a.baseline_prob * a.breach.multiplier(s, a.baseline_prob);
  return mixed_prob(base, find_mixture(x, attack, ctx, slot));
}

Probability effective_prob(const Gdf& x, const std::string& attack_id, Money s,
                           const EvalContext& ctx) {
  auto j = x.attack_index(attack_id);
  if (!j) throw Error(ErrorKind::kInvalidArgument, "GDF '" + x.id + "' has no attack '" + attack_id + "'");
  return effective_prob(x, *j, s, ctx);
}

double effective_prob_slope(const Gdf& x, std::size_t attack, Money s, const EvalContext& ctx) {
  check_spend(s);
  if (attack >= x.attacks.size()) {
    throw Error(ErrorKind::kInvalidArgument, "attack index out of range for GDF '" + x.id + "'");
  }
  std::optional<std::size_t> slot;
  const auto& a = x.attacks[attack];
  double fd_step = 0.0;
  if (!a.breach.is_parametric()) fd_step = 1e-6 * expected_cyber_loss(x, 0.0, ctx);
  const double base = a.baseline_prob * a.breach.multiplier(s, a.baseline_prob);
  const double base_slope = a.baseline_prob * a.breach.slope(s, a.baseline_prob, fd_step);
  return mixed_slope(base, base_slope, find_mixture(x, attack, ctx, slot));
}

Money expected_noncyber_cost(const Gdf& x) {
  Money total = 0.0;
  for (const auto& k : x.adverse) total += k.prob * k.cost;
  return total;
}

Money static_net_benefit(const Gdf& x) {
  return x.ben - x.dir_costs - expected_noncyber_cost(x);
}

Money expected_cyber_loss(const Gdf& x, Money s, const EvalContext& ctx) {
  check_spend(s);
  return loss_terms(x, s, ctx, false).loss;
}

Money expected_cyber_cost(const Gdf& x, Money s, const EvalContext& ctx) {
  check_spend(s);
  const auto t = loss_terms(x, s, ctx, false);
  if (ctx.mode == CybMode::kLiteral) return t.loss + s * t.prob_sum;
  return s + t.loss;
}

Money enb(const Gdf& x, Money s, const EvalContext& ctx) { return enbcds(x, s, ctx); }

Money enbcds(const Gdf& x, Money s, const EvalContext& ctx) {
  return static_net_benefit(x) - expected_cyber_cost(x, s, ctx);
}

double enbcds_slope(const Gdf& x, Money s, const EvalContext& ctx) {
  check_spend(s);
  const auto t = loss_terms(x, s, ctx, true);
  if (ctx.mode == CybMode::kLiteral) return -(t.loss_slope + t.prob_sum + s * t.prob_slope_sum);
  return -1.0 - t.loss_slope;
}

Money value_scale(const Gdf& x, const EvalContext& ctx) {
  const Money scale = std::abs(static_net_benefit(x)) + expected_cyber_loss(x, 0.0, ctx);
  return scale > 0.0 ? scale : 1.0;
}

Money enbcds(const Portfolio& p, const std::string& gdf_id, Money s, const EvalContext& ctx) {
  return enbcds(p.gdf(gdf_id), s, ctx);
}

Money expected_cyber_cost(const Portfolio& p, const std::string& gdf_id, Money s,
                          const EvalContext& ctx) {
  return expected_cyber_cost(p.gdf(gdf_id), s, ctx);
}

}  // namespace enbcds
