#ifndef ENBCDS_TESTS_ORACLES_HPP
#define ENBCDS_TESTS_ORACLES_HPP

// Reference implementations written directly from the model formulas. They
// share no code with the library beyond the data types.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "enbcds/model.hpp"
#include "enbcds/net_benefit.hpp"

namespace enbcds::testing {

inline double oracle_multiplier(const BreachModel& m, double s, double v) {
  const auto& f = m.family();
  if (const auto* a = std::get_if<GordonLoebI>(&f)) return std::pow(a->alpha * s + 1.0, -a->beta);
  if (const auto* b = std::get_if<GordonLoebII>(&f)) {
    if (!(v > 0.0 && v < 1.0)) return 1.0;
    return std::pow(v, b->alpha * s);
  }
  if (const auto* c = std::get_if<Exponential>(&f)) return std::exp(-c->kappa * s);
  const auto& knots = std::get<TableModel>(f).knots;
  if (s >= knots.back().spend) return knots.back().multiplier;
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (s <= knots[i].spend) {
      const double t = (s - knots[i - 1].spend) / (knots[i].spend - knots[i - 1].spend);
      return knots[i - 1].multiplier + t * (knots[i].multiplier - knots[i - 1].multiplier);
    }
  }
  return knots.back().multiplier;
}

inline double oracle_static(const Gdf& x) {
  double nc = 0.0;
  for (const auto& e : x.adverse) nc += e.prob * e.cost;
  return x.ben - x.dir_costs - nc;
}

inline double oracle_f0(const Gdf& x) {
  double f = 0.0;
  for (const auto& a : x.attacks) f += a.baseline_prob * a.loss;
  return f;
}

// ENBCDS of an uncoupled GDF, summed term by term.
inline double oracle_enbcds(const Gdf& x, double s, CybMode mode = CybMode::kAdditive) {
  double f = mode == CybMode::kAdditive ? s : 0.0;
  for (const auto& a : x.attacks) {
    const double p = std::min(1.0, a.baseline_prob * oracle_multiplier(a.breach, s, a.baseline_prob));
    f += mode == CybMode::kAdditive ? p * a.loss : p * (a.loss + s);
  }
  return oracle_static(x) - f;
}

inline double uplift(const DependencyEdge& e, const std::string& attack) {
  auto it = e.uplift.find(attack);
  return it == e.uplift.end() ? e.default_uplift : it->second;
}

// Incoming edges of GDF `i` whose source is retained.
inline std::vector<std::pair<std::size_t, const DependencyEdge*>> retained_parents(
    const Portfolio& p, std::size_t i, const std::vector<bool>& retained) {
  std::vector<std::pair<std::size_t, const DependencyEdge*>> out;
  for (const auto& e : p.edges) {
    if (e.to != p.gdfs[i].id) continue;
    for (std::size_t u = 0; u < p.gdfs.size(); ++u) {
      if (p.gdfs[u].id == e.from && retained[u]) out.emplace_back(u, &e);
    }
  }
  return out;
}

inline double attack_prob_given(const Portfolio& p, std::size_t i, std::size_t j, double s,
                                const std::vector<std::pair<std::size_t, const DependencyEdge*>>& parents,
                                const std::function<bool(std::size_t)>& compromised) {
  const auto& a = p.gdfs[i].attacks[j];
  double u = 1.0;
  for (const auto& [k, e] : parents) {
    if (compromised(k)) u *= uplift(*e, a.id);
  }
  return std::min(1.0, a.baseline_prob * oracle_multiplier(a.breach, s, a.baseline_prob) * u);
}

// Exact marginal of the joint compromise distribution. Enumerates all 2^n
// compromise states of the portfolio; the probability of a state is the
// product over GDFs of P(state of GDF | states of its parents). Attack j on
// `gdf` at own spend `s` succeeds with min(1, base * prod uplift) in each
// state.
inline double oracle_joint_effective_prob(const Portfolio& p, const std::vector<double>& spends,
                                          const std::vector<bool>& retained, std::size_t gdf,
                                          std::size_t attack, double s) {
  const std::size_t n = p.gdfs.size();
  double total = 0.0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    auto comp = [&](std::size_t k) { return (mask >> k & 1U) != 0; };
    double w = 1.0;
    for (std::size_t i = 0; i < n && w > 0.0; ++i) {
      if (!retained[i]) {
        if (comp(i)) w = 0.0;
        continue;
      }
      const auto parents = retained_parents(p, i, retained);
      double survive = 1.0;
      for (std::size_t j = 0; j < p.gdfs[i].attacks.size(); ++j) {
        survive *= 1.0 - attack_prob_given(p, i, j, spends[i], parents, comp);
      }
      w *= comp(i) ? 1.0 - survive : survive;
    }
    if (w == 0.0) continue;
    total += w * attack_prob_given(p, gdf, attack, s, retained_parents(p, gdf, retained), comp);
  }
  return total;
}

// The library's dependency semantics taken literally: parents are
// independent, each compromised with its own q_u computed the same way.
struct IndependentParents {
  const Portfolio& p;
  std::vector<double> spends;
  std::vector<bool> retained;
  std::map<std::size_t, double> memo;

  double mixture(std::size_t i, const std::function<double(const std::function<bool(std::size_t)>&)>& h) {
    const auto parents = retained_parents(p, i, retained);
    double total = 0.0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << parents.size()); ++mask) {
      std::set<std::size_t> on;
      double w = 1.0;
      for (std::size_t k = 0; k < parents.size(); ++k) {
        const double q = compromise(parents[k].first);
        if (mask >> k & 1U) {
          w *= q;
          on.insert(parents[k].first);
        } else {
          w *= 1.0 - q;
        }
      }
      total += w * h([&](std::size_t u) { return on.count(u) > 0; });
    }
    return total;
  }

  double compromise(std::size_t i) {
    if (!retained[i]) return 0.0;
    if (auto it = memo.find(i); it != memo.end()) return it->second;
    const auto parents = retained_parents(p, i, retained);
    const double q = mixture(i, [&](const std::function<bool(std::size_t)>& comp) {
      double survive = 1.0;
      for (std::size_t j = 0; j < p.gdfs[i].attacks.size(); ++j) {
        survive *= 1.0 - attack_prob_given(p, i, j, spends[i], parents, comp);
      }
      return 1.0 - survive;
    });
    memo[i] = q;
    return q;
  }

  double effective_prob(std::size_t i, std::size_t j, double s) {
    const auto parents = retained_parents(p, i, retained);
    return mixture(i, [&](const std::function<bool(std::size_t)>& comp) {
      return attack_prob_given(p, i, j, s, parents, comp);
    });
  }
};

// Sum of ENBCDS over retained GDFs under the independent-parent semantics.
inline double oracle_objective(const Portfolio& p, const std::vector<double>& spends,
                               const std::vector<bool>& retained, CybMode mode = CybMode::kAdditive) {
  IndependentParents model{p, spends, retained, {}};
  double total = 0.0;
  for (std::size_t i = 0; i < p.gdfs.size(); ++i) {
    if (!retained[i]) continue;
    const Gdf& x = p.gdfs[i];
    double f = mode == CybMode::kAdditive ? spends[i] : 0.0;
    for (std::size_t j = 0; j < x.attacks.size(); ++j) {
      const double pr = model.effective_prob(i, j, spends[i]);
      f += mode == CybMode::kAdditive ? pr * x.attacks[j].loss : pr * (x.attacks[j].loss + spends[i]);
    }
    total += oracle_static(x) - f;
  }
  return total;
}

struct GridMax {
  double s = 0.0;
  double value = 0.0;
};

inline GridMax grid_maximize(const std::function<double(double)>& f, double lo, double hi, std::size_t points) {
  GridMax best{lo, f(lo)};
  for (std::size_t i = 1; i < points; ++i) {
    const double s = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    const double v = f(s);
    if (v > best.value) best = {s, v};
  }
  return best;
}

// Composite Simpson rule on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, std::size_t n) {
  const double h = (b - a) / static_cast<double>(n);
  double acc = f(a) + f(b);
  for (std::size_t i = 1; i < n; ++i) acc += f(a + h * static_cast<double>(i)) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

inline double triangular_density(double x, double a, double c, double b) {
  if (x < a || x > b) return 0.0;
  if (x < c) return 2.0 * (x - a) / ((b - a) * (c - a));
  if (x > c) return 2.0 * (b - x) / ((b - a) * (b - c));
  return 2.0 / (b - a);
}

}  // namespace enbcds::testing

#endif  // ENBCDS_TESTS_ORACLES_HPP
