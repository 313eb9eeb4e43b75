#include <doctest.h>

#include <cmath>
#include <numeric>

#include "enbcds/error.hpp"
#include "enbcds/optimize.hpp"
#include "enbcds/scenario.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace enbcds;

namespace {

Gdf gl1(const std::string& id, double p, double loss, double alpha, double beta = 1.0) {
  Gdf x;
  x.id = id;
  x.attacks.push_back({"a", "", p, loss, BreachModel(GordonLoebI{alpha, beta})});
  return x;
}

std::vector<double> spend_list(const Portfolio& p, const AllocationResult& r) {
  std::vector<double> v;
  for (const auto& g : p.gdfs) v.push_back(r.spends.at(g.id));
  return v;
}

std::vector<bool> retained_list(const Portfolio& p, const AllocationResult& r) {
  std::vector<bool> v;
  for (const auto& g : p.gdfs) v.push_back(!r.dropped.count(g.id));
  return v;
}

ScenarioFile shipped(const std::string& name) {
  return load_scenario(std::string(ENBCDS_SCENARIO_DIR) + "/" + name + ".json");
}

}  // namespace

TEST_SUITE("optimize") {
  TEST_CASE("golden section on a parabola") {
    auto f = [](double x) { return -(x - 3.25) * (x - 3.25); };
    CHECK(golden_section_maximize(f, 0, 10, 1e-10) == doctest::Approx(3.25).epsilon(1e-9));
    CHECK(golden_section_maximize(f, 5, 10, 1e-10) == doctest::Approx(5.0));
    CHECK(golden_section_maximize(f, 0, 1, 1e-10) == doctest::Approx(1.0));
    CHECK(golden_section_maximize(f, 2, 2, 1e-10) == 2.0);
  }

  TEST_CASE("scan then golden finds the better of two bumps") {
    auto f = [](double x) { return std::exp(-(x - 1) * (x - 1) * 20) + 2 * std::exp(-(x - 4) * (x - 4) * 20); };
    CHECK(scan_then_golden_maximize(f, 0, 5, 1e-10, 200) == doctest::Approx(4.0).epsilon(1e-6));
  }

  TEST_CASE("no attacks: optimum at zero") {
    Gdf x;
    x.id = "x";
    x.ben = 40;
    x.dir_costs = 15;
    x.adverse.push_back({"e", 0.5, 10});
    const auto r = optimal_spend(x);
    CHECK(r.s_star == 0.0);
    CHECK(r.value == doctest::Approx(20.0));
  }

  TEST_CASE("closed form for a single Gordon-Loeb I attack") {
    const Gdf x = gl1("x", 0.5, 20000, 0.01);  // p*L = 10000
    const auto r = optimal_spend(x);
    const double cf = (std::sqrt(10000 * 0.01) - 1) / 0.01;
    REQUIRE(r.closed_form.has_value());
    CHECK(*r.closed_form == doctest::Approx(cf).epsilon(1e-12));
    CHECK(std::abs(r.s_star - cf) <= 1e-4 * cf);
    CHECK(gordon_loeb_i_stationary_spend(0.5, 20000, 0.01, 1) == doctest::Approx(cf));
    CHECK(gordon_loeb_i_stationary_spend(0.5, 100, 0.01, 1) == 0.0);
  }

  TEST_CASE("closed form agrees with golden section on random GDFs") {
    testing::Gen gen(31);
    for (int t = 0; t < 300; ++t) {
      const Gdf x = gen.gordon_loeb_i_gdf("x");
      const auto r = optimal_spend(x);
      REQUIRE(r.closed_form.has_value());
      CHECK(std::abs(r.s_star - *r.closed_form) <= 1e-4 * *r.closed_form);
    }
  }

  TEST_CASE("optimum dominates both ends of the search interval") {
    testing::Gen gen(32);
    for (int t = 0; t < 300; ++t) {
      const Gdf x = gen.gdf("x");
      const double f0 = expected_cyber_cost(x, 0);
      for (CybMode mode : {CybMode::kAdditive, CybMode::kLiteral}) {
        EvalContext ctx;
        ctx.mode = mode;
        const auto r = optimal_spend(x, ctx);
        CHECK(r.value >= enbcds::enbcds(x, 0, ctx));
        CHECK(r.value >= enbcds::enbcds(x, f0, ctx));
        CHECK(r.s_star >= 0.0);
        CHECK(r.s_star <= f0);
        CHECK(r.value == enbcds::enbcds(x, r.s_star, ctx));
      }
    }
  }

  TEST_CASE("golden section matches a fine grid") {
    testing::Gen gen(33);
    for (int t = 0; t < 100; ++t) {
      const Gdf x = gen.gdf("x");
      const double f0 = expected_cyber_cost(x, 0);
      const auto r = optimal_spend(x);
      const auto g = testing::grid_maximize([&](double s) { return testing::oracle_enbcds(x, s); }, 0, f0, 10000);
      CHECK(std::abs(r.s_star - g.s) <= f0 / 9999);
      CHECK(r.value >= g.value - 1e-9 * value_scale(x));
    }
  }

  TEST_CASE("literal mode optimum beats a grid") {
    testing::Gen gen(34);
    for (int t = 0; t < 100; ++t) {
      const Gdf x = gen.gdf("x");
      EvalContext ctx;
      ctx.mode = CybMode::kLiteral;
      const auto r = optimal_spend(x, ctx);
      const auto g = testing::grid_maximize([&](double s) { return testing::oracle_enbcds(x, s, CybMode::kLiteral); },
                                            0, expected_cyber_cost(x, 0), 2000);
      CHECK(r.value >= g.value - 1e-6 * value_scale(x, ctx));
    }
  }

  TEST_CASE("mandatory minimum-loss spend") {
    Gdf flat;
    flat.id = "flat";
    flat.ben = 0;
    flat.dir_costs = 10;
    flat.mandatory = true;
    CHECK(mandatory_min_loss(flat) == 0.0);
    flat.mandatory = false;
    CHECK_THROWS_AS(mandatory_min_loss(flat), Error);

    const auto wifi = shipped("wifi-thermostats");
    const Gdf& x = wifi.portfolio.gdfs[0];
    const double s = mandatory_min_loss(x);
    CHECK(s > 0);
    CHECK(enbcds::enbcds(x, s) < 0);
    CHECK(s == optimal_spend(x).s_star);
  }
}

TEST_SUITE("allocate") {
  TEST_CASE("zero budget") {
    testing::Gen gen(41);
    for (int t = 0; t < 30; ++t) {
      auto p = gen.portfolio(4);
      AllocationOptions o;
      o.budget = 0.0;
      const auto r = allocate(p, o);
      for (const auto& g : p.gdfs) {
        CHECK(r.spends.at(g.id) == 0.0);
        const bool should_drop = !g.mandatory && enbcds::enbcds(g, 0) < 0;
        CHECK(r.dropped.count(g.id) == (should_drop ? 1u : 0u));
      }
    }
  }

  TEST_CASE("single GDF never exceeds s*") {
    testing::Gen gen(42);
    for (int t = 0; t < 50; ++t) {
      Portfolio p;
      p.gdfs = {gen.gdf("x")};
      p.gdfs[0].mandatory = true;
      const auto best = optimal_spend(p.gdfs[0]);
      p.budget = best.s_star * gen.uniform(1.0, 5.0) + 1;
      const auto r = allocate(p);
      CHECK(r.spends.at("x") == doctest::Approx(best.s_star).epsilon(1e-6).scale(expected_cyber_cost(p.gdfs[0], 0)));
      CHECK(r.spends.at("x") <= best.s_star + 1e-6 * expected_cyber_cost(p.gdfs[0], 0));
    }
  }

  TEST_CASE("invariants: budget, mandatory, dropped spends") {
    testing::Gen gen(43);
    for (int t = 0; t < 60; ++t) {
      auto p = gen.portfolio(gen.integer(1, 6));
      if (gen.coin(0.4)) gen.add_edges(p, 0.4, 4.0, false);
      AllocationOptions o;
      if (gen.coin(0.3)) o.mode = CybMode::kLiteral;
      const auto r = allocate(p, o);
      CHECK(r.budget_used <= r.budget + 1e-9);
      for (const auto& g : p.gdfs) {
        CHECK(r.spends.at(g.id) >= 0.0);
        if (g.mandatory) CHECK(r.dropped.count(g.id) == 0u);
        if (r.dropped.count(g.id)) CHECK(r.spends.at(g.id) == 0.0);
      }
      CHECK(r.objective ==
            doctest::Approx(allocation_objective(p, r.spends, r.dropped, o.mode)).epsilon(1e-12));
    }
  }

  TEST_CASE("water-filling beats a coarse grid") {
    testing::Gen gen(44);
    for (int t = 0; t < 15; ++t) {
      auto p = gen.portfolio(3);
      const auto r = allocate(p);
      const double scale = portfolio_scale(p);
      const std::size_t n = 30;
      std::vector<std::vector<double>> vals(3);
      for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t k = 0; k < n; ++k) vals[i].push_back(testing::oracle_enbcds(p.gdfs[i], p.budget * k / (n - 1)));
        if (!p.gdfs[i].mandatory) vals[i].push_back(0.0);  // dropped
      }
      double best = -1e300;
      for (std::size_t a = 0; a < vals[0].size(); ++a)
        for (std::size_t b = 0; b < vals[1].size(); ++b)
          for (std::size_t c = 0; c < vals[2].size(); ++c) {
            const double used = (a < n ? a : 0) + (b < n ? b : 0) + (c < n ? c : 0);
            if (used > n - 1) continue;
            best = std::max(best, vals[0][a] + vals[1][b] + vals[2][c]);
          }
      CHECK(r.objective >= best - 1e-3 * scale);
      CHECK(r.method == "water-filling");
    }
  }

  TEST_CASE("objective is non-decreasing in the budget") {
    testing::Gen gen(45);
    for (int t = 0; t < 20; ++t) {
      auto p = gen.portfolio(4);
      if (t % 2) gen.add_edges(p, 0.4, 3.0, false);
      const double scale = portfolio_scale(p);
      double prev = -1e300;
      for (double b : {0.0, 0.01, 0.05, 0.1, 0.3, 1.0}) {
        AllocationOptions o;
        o.budget = b * scale;
        const auto r = allocate(p, o);
        CHECK(r.objective >= prev - 1e-7 * scale);
        prev = r.objective;
      }
    }
  }

  TEST_CASE("drop decisions are a fixed point") {
    testing::Gen gen(46);
    for (int t = 0; t < 30; ++t) {
      auto p = gen.portfolio(5);
      const auto r = allocate(p);
      Portfolio kept;
      kept.budget = p.budget;
      for (const auto& g : p.gdfs) {
        if (!r.dropped.count(g.id)) kept.gdfs.push_back(g);
      }
      const auto again = allocate(kept);
      CHECK(again.dropped.empty());
      for (const auto& g : kept.gdfs) {
        CHECK(again.spends.at(g.id) ==
              doctest::Approx(r.spends.at(g.id)).epsilon(1e-6).scale(expected_cyber_cost(g, 0)));
      }
    }
  }

  TEST_CASE("scale equivariance") {
    testing::Gen gen(47);
    for (int t = 0; t < 20; ++t) {
      auto p = gen.portfolio(3);
      const double c = gen.log_uniform(0.01, 100);
      Portfolio q = p;
      q.budget *= c;
      for (auto& g : q.gdfs) {
        g.ben *= c;
        g.dir_costs *= c;
        if (g.actual_spend) *g.actual_spend *= c;
        for (auto& e : g.adverse) e.cost *= c;
        for (auto& a : g.attacks) {
          a.loss *= c;
          std::visit(
              [&](auto& m) {
                using T = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<T, GordonLoebI> || std::is_same_v<T, GordonLoebII>) m.alpha /= c;
                if constexpr (std::is_same_v<T, Exponential>) m.kappa /= c;
              },
              a.breach.family());
        }
      }
      const auto r = allocate(p);
      const auto rq = allocate(q);
      const double scale = portfolio_scale(q);
      CHECK(rq.objective == doctest::Approx(c * r.objective).epsilon(1e-6).scale(scale));
      CHECK(rq.dropped == r.dropped);
      for (const auto& g : p.gdfs) {
        CHECK(rq.spends.at(g.id) == doctest::Approx(c * r.spends.at(g.id)).epsilon(1e-5).scale(1e-5 * scale));
      }
    }
  }

  TEST_CASE("coordinate ascent with edges beats a coarse grid") {
    testing::Gen gen(48);
    for (int t = 0; t < 6; ++t) {
      auto p = gen.portfolio(3, 2);
      gen.add_edges(p, 0.7, 5.0, false);
      const auto r = allocate(p);
      const double scale = portfolio_scale(p);
      const std::size_t n = 16;
      double best = -1e300;
      for (std::size_t a = 0; a <= n; ++a)
        for (std::size_t b = 0; b <= n; ++b)
          for (std::size_t c = 0; c <= n; ++c) {
            std::vector<std::size_t> k{a, b, c};
            std::vector<double> s(3);
            std::vector<bool> kept(3);
            std::size_t used = 0;
            bool ok = true;
            for (int i = 0; i < 3; ++i) {
              kept[i] = k[i] < n;
              if (!kept[i] && p.gdfs[i].mandatory) ok = false;
              s[i] = kept[i] ? p.budget * k[i] / (n - 1) : 0.0;
              used += kept[i] ? k[i] : 0;
            }
            if (!ok || used > n - 1) continue;
            best = std::max(best, testing::oracle_objective(p, s, kept));
          }
      const double got = testing::oracle_objective(p, spend_list(p, r), retained_list(p, r));
      CHECK(got == doctest::Approx(r.objective).epsilon(1e-12).scale(scale));
      CHECK(got >= best - 5e-3 * scale);
      CHECK(r.method == "water-filling + coordinate-ascent");
    }
  }

  TEST_CASE("KKT certificate on interior allocations") {
    testing::Gen gen(49);
    int interior = 0;
    for (int t = 0; t < 60; ++t) {
      auto p = gen.portfolio(gen.integer(2, 5));
      const auto r = allocate(p);
      CHECK(r.kkt.satisfied);
      if (r.kkt.interior_count < 2) continue;
      ++interior;
      CHECK(r.kkt.max_interior_gap <= 1e-4 * (1 + std::abs(r.kkt.lambda)));
      std::vector<double> m;
      for (const auto& g : p.gdfs) {
        const double s = r.spends.at(g.id);
        if (!r.dropped.count(g.id) && s > 0) m.push_back(enbcds_slope(g, s));
      }
      const auto [lo, hi] = std::minmax_element(m.begin(), m.end());
      CHECK(*hi - *lo <= 1e-4 * (1 + std::abs(r.kkt.lambda)));
    }
    CHECK(interior > 10);
  }

  TEST_CASE("shipped: over-funded smart meters give way to relays") {
    const auto sc = shipped("smart-meters-vs-relays");
    const Portfolio& p = sc.portfolio;
    const double sx = *p.gdf("smart-meters").actual_spend;
    const double sy = *p.gdf("relays").actual_spend;
    AllocationOptions o;
    o.budget = sx + sy;
    const auto r = allocate(p, o);
    CHECK(r.spends.at("smart-meters") < sx);
    CHECK(r.spends.at("relays") > sy);
    const double before = allocation_objective(p, {{"smart-meters", sx}, {"relays", sy}}, {});
    CHECK(r.objective > before);
  }

  TEST_CASE("shipped: z dropped in the three-GDF portfolio") {
    const auto sc = shipped("fig2-three-gdfs");
    const auto r = allocate(sc.portfolio);
    CHECK(r.dropped == std::set<std::string>{"z"});
    CHECK(r.spends.at("x") > 0);
    CHECK(r.spends.at("y") > 0);
  }
}
