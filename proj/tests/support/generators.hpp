#ifndef ENBCDS_TESTS_GENERATORS_HPP
#define ENBCDS_TESTS_GENERATORS_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "enbcds/model.hpp"

namespace enbcds::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }
  std::mt19937_64& engine() { return rng_; }

  // One of the three parametric families with spend scales between 1e2 and
  // 1e7 (1/alpha or 1/kappa).
  BreachModel parametric_breach() {
    switch (integer(0, 2)) {
      case 0:
        return BreachModel(GordonLoebI{log_uniform(1e-7, 1e-2), uniform(1.0, 3.0)});
      case 1:
        return BreachModel(GordonLoebII{log_uniform(1e-7, 1e-2)});
      default:
        return BreachModel(Exponential{log_uniform(1e-7, 1e-2)});
    }
  }

  AttackType attack(const std::string& id) {
    AttackType a;
    a.id = id;
    a.baseline_prob = uniform(0.01, 0.95);
    a.loss = log_uniform(1e3, 1e7);
    a.breach = parametric_breach();
    return a;
  }

  // Random GDF with 1 to `max_attacks` parametric attacks and 0 to 2
  // adverse events. Net static benefit is of the order of the attack
  // exposure so both signs of the peak occur.
  Gdf gdf(const std::string& id, int max_attacks = 4) {
    Gdf x;
    x.id = id;
    x.name = "gdf " + id;
    const int n = integer(1, max_attacks);
    double exposure = 0.0;
    for (int j = 0; j < n; ++j) {
      x.attacks.push_back(attack("a" + std::to_string(j)));
      exposure += x.attacks.back().baseline_prob * x.attacks.back().loss;
    }
    const int m = integer(0, 2);
    for (int k = 0; k < m; ++k) {
      x.adverse.push_back({"e" + std::to_string(k), uniform(0.0, 0.3), log_uniform(1e2, 1e6)});
    }
    x.dir_costs = log_uniform(1e2, 1e6);
    x.ben = x.dir_costs + exposure * uniform(0.0, 1.5);
    if (coin(0.3)) x.actual_spend = uniform(0.0, exposure);
    return x;
  }

  // Single Gordon-Loeb I attack with p*L*alpha*beta > 2, so the stationary
  // point is interior.
  Gdf gordon_loeb_i_gdf(const std::string& id) {
    Gdf x;
    x.id = id;
    AttackType a;
    a.id = "a0";
    a.baseline_prob = uniform(0.05, 0.95);
    a.loss = log_uniform(1e3, 1e7);
    const double beta = uniform(1.0, 3.0);
    const double pl = a.baseline_prob * a.loss;
    const double alpha = log_uniform(2.0, 1e4) / (pl * beta);
    a.breach = BreachModel(GordonLoebI{alpha, beta});
    x.attacks.push_back(a);
    x.dir_costs = log_uniform(1e2, 1e5);
    x.ben = x.dir_costs + pl * uniform(0.0, 1.0);
    return x;
  }

  // Portfolio of `n` GDFs without edges. Budget is a random fraction of the
  // summed zero-spend exposure.
  Portfolio portfolio(int n, int max_attacks = 3) {
    Portfolio p;
    double exposure = 0.0;
    for (int i = 0; i < n; ++i) {
      p.gdfs.push_back(gdf("g" + std::to_string(i), max_attacks));
      p.gdfs.back().mandatory = coin(0.15);
      for (const auto& a : p.gdfs.back().attacks) exposure += a.baseline_prob * a.loss;
    }
    p.budget = exposure * log_uniform(1e-3, 0.5);
    return p;
  }

  // Adds random edges i -> j (i < j, so the graph is acyclic). When
  // `polytree` is set the undirected graph stays a forest.
  void add_edges(Portfolio& p, double edge_prob, double max_uplift, bool polytree) {
    const std::size_t n = p.gdfs.size();
    std::vector<std::size_t> component(n);
    for (std::size_t i = 0; i < n; ++i) component[i] = i;
    auto root = [&](std::size_t i) {
      while (component[i] != i) i = component[i];
      return i;
    };
    for (std::size_t j = 1; j < n; ++j) {
      for (std::size_t i = 0; i < j; ++i) {
        if (!coin(edge_prob)) continue;
        if (polytree) {
          if (root(i) == root(j)) continue;
          component[root(i)] = root(j);
        }
        DependencyEdge e;
        e.from = p.gdfs[i].id;
        e.to = p.gdfs[j].id;
        e.default_uplift = uniform(1.0, max_uplift);
        for (const auto& a : p.gdfs[j].attacks) {
          if (coin(0.5)) e.uplift[a.id] = uniform(1.0, max_uplift);
        }
        p.edges.push_back(e);
      }
    }
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace enbcds::testing

#endif  // ENBCDS_TESTS_GENERATORS_HPP
