#include "enbcds/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>

#include "enbcds/error.hpp"

namespace enbcds {

double golden_section_maximize(const std::function<double(double)>& f, double lo, double hi,
                               double abs_tol, std::size_t max_iterations) {
  if (!(hi > lo)) return lo;
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (std::size_t i = 0; i < max_iterations && (b - a) > abs_tol; ++i) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return fc >= fd ? c : d;
}

double scan_then_golden_maximize(const std::function<double(double)>& f, double lo, double hi,
                                 double abs_tol, std::size_t scan_points) {
  if (!(hi > lo)) return lo;
  scan_points = std::max<std::size_t>(scan_points, 2);
  const double width = hi - lo;
  // Uniform points, plus geometric ones down to 1e-9 of the range: breach
  // models decay on their own spend scale, which can be far below the
  // uniform spacing.
  std::vector<double> xs;
  xs.reserve(scan_points + scan_points / 2 + 2);
  for (std::size_t i = 0; i < scan_points; ++i) xs.push_back(lo + width * static_cast<double>(i) / static_cast<double>(scan_points));
  xs.push_back(hi);
  const std::size_t geo = scan_points / 2;
  for (std::size_t i = 0; i < geo; ++i) {
    const double e = -9.0 * static_cast<double>(i + 1) / static_cast<double>(geo);
    xs.push_back(lo + width * std::pow(10.0, e));
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

  std::size_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double v = f(xs[i]);
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }
  const double a = xs[best == 0 ? 0 : best - 1];
  const double b = xs[std::min(best + 1, xs.size() - 1)];
  const double refined = golden_section_maximize(f, a, b, std::min(abs_tol, (b - a) * 1e-9));
  return f(refined) >= best_value ? refined : xs[best];
}

Money gordon_loeb_i_stationary_spend(Probability p, Money loss, double alpha, double beta) {
  const double k = p * loss * alpha * beta;
  if (k <= 1.0) return 0.0;
  return (std::pow(k, 1.0 / (beta + 1.0)) - 1.0) / alpha;
}

namespace {

bool has_uplift(const Gdf& x, const EvalContext& ctx) {
  if (ctx.dependencies == nullptr) return false;
  auto idx = ctx.dependencies->portfolio().index_of(x.id);
  return idx && ctx.dependencies->has_parents(*idx);
}

}  // namespace

OptimalSpend optimal_spend_within(const Gdf& x, Money hi, const EvalContext& ctx) {
  OptimalSpend out;
  const Money f0 = expected_cyber_loss(x, 0.0, ctx);
  const bool concave = ctx.mode == CybMode::kAdditive && !has_uplift(x, ctx);
  if (concave && ctx.dependencies == nullptr && x.attacks.size() == 1) {
    const auto& a = x.attacks.front();
    if (const auto* gl = std::get_if<GordonLoebI>(&a.breach.family())) {
      out.closed_form = gordon_loeb_i_stationary_spend(a.baseline_prob, a.loss, gl->alpha, gl->beta);
    }
  }
  const Money upper = std::min(hi, f0);
  auto value = [&](double s) { return enbcds(x, s, ctx); };
  if (!(upper > 0.0)) {
    out.s_star = 0.0;
    out.value = value(0.0);
    return out;
  }
  const double tol = 1e-9 * f0;
  double s = concave ? golden_section_maximize(value, 0.0, upper, tol)
                     : scan_then_golden_maximize(value, 0.0, upper, tol, 400);
  double best = value(s);
  // The argmax must dominate both ends of the search interval.
  for (double end : {0.0, upper}) {
    const double v = value(end);
    if (v > best) {
      best = v;
      s = end;
    }
  }
  out.s_star = s;
  out.value = best;
  return out;
}

OptimalSpend optimal_spend(const Gdf& x, const EvalContext& ctx) {
  return optimal_spend_within(x, std::numeric_limits<double>::infinity(), ctx);
}

Money mandatory_min_loss(const Gdf& x, const EvalContext& ctx) {
  if (!x.mandatory) {
    throw Error(ErrorKind::kNotMandatory, "GDF '" + x.id + "' is not mandatory");
  }
  return optimal_spend(x, ctx).s_star;
}

Money portfolio_scale(const Portfolio& p) {
  Money total = 0.0;
  for (const auto& g : p.gdfs) total += value_scale(g);
  return total > 0.0 ? total : 1.0;
}

Money allocation_objective(const Portfolio& p, const SpendVector& spends,
                           const std::set<std::string>& dropped, CybMode mode) {
  const auto ctx = DependencyContext::from_spends(p, spends, dropped);
  Money total = 0.0;
  for (std::size_t i = 0; i < p.gdfs.size(); ++i) {
    if (!ctx.retained(i)) continue;
    total += enbcds(p.gdfs[i], ctx.spend(i), EvalContext{&ctx, mode});
  }
  return total;
}

namespace {

class Allocator {
 public:
  Allocator(const Portfolio& p, const AllocationOptions& opt)
      : p_(p), opt_(opt), n_(p.gdfs.size()), budget_(opt.budget.value_or(p.budget)) {
    if (!(std::isfinite(budget_) && budget_ >= 0.0)) {
      throw Error(ErrorKind::kInvalidArgument, "budget must be finite and >= 0", "/portfolio/budget");
    }
    coupled_ = !p.edges.empty();
    additive_ = opt.mode == CybMode::kAdditive;
    scale_ = portfolio_scale(p);
    s_star_.resize(n_);
    slope0_.resize(n_);
    smooth_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      const Gdf& g = p.gdfs[i];
      const EvalContext ctx{nullptr, opt.mode};
      s_star_[i] = optimal_spend(g, ctx).s_star;
      slope0_[i] = enbcds_slope(g, 0.0, ctx);
      smooth_[i] = std::all_of(g.attacks.begin(), g.attacks.end(),
                               [](const AttackType& a) { return a.breach.is_parametric(); });
    }
    compute_caps();
  }

  AllocationResult run() {
    State st;
    st.retained.assign(n_, true);
    st.spend.assign(n_, 0.0);
    fixed_point(st);
    if (opt_.refine_drops) {
      for (std::size_t pass = 0; pass < n_ + 1; ++pass) {
        if (!toggle_search(st)) break;
      }
    }
    return finish(st);
  }

 private:
  struct State {
    std::vector<Money> spend;
    std::vector<bool> retained;
  };

  static constexpr double kInf = std::numeric_limits<double>::infinity();

  // Largest spend worth considering for each GDF: beyond the worst-case
  // zero-spend loss of the GDF and all of its descendants, extra spend
  // cannot pay for itself.
  void compute_caps() {
    std::vector<Money> worst_loss(n_, 0.0);
    std::vector<std::vector<std::size_t>> children(n_);
    std::vector<std::vector<const DependencyEdge*>> in_edges(n_);
    for (const auto& e : p_.edges) {
      const std::size_t from = *p_.index_of(e.from);
      const std::size_t to = *p_.index_of(e.to);
      children[from].push_back(to);
      in_edges[to].push_back(&e);
    }
    for (std::size_t i = 0; i < n_; ++i) {
      for (const auto& a : p_.gdfs[i].attacks) {
        double u = 1.0;
        for (const auto* e : in_edges[i]) u *= e->uplift_for(a.id);
        worst_loss[i] += a.loss * std::min(1.0, a.baseline_prob * u);
      }
    }
    cap_.assign(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      std::vector<bool> seen(n_, false);
      std::vector<std::size_t> stack{i};
      seen[i] = true;
      while (!stack.empty()) {
        const std::size_t k = stack.back();
        stack.pop_back();
        cap_[i] += worst_loss[k];
        for (std::size_t c : children[k]) {
          if (!seen[c]) {
            seen[c] = true;
            stack.push_back(c);
          }
        }
      }
    }
  }

  double objective(const std::vector<Money>& spend, const std::vector<bool>& retained) const {
    Money total = 0.0;
    if (coupled_) {
      const DependencyContext ctx(p_, spend, retained);
      for (std::size_t i = 0; i < n_; ++i) {
        if (retained[i]) total += enbcds(p_.gdfs[i], spend[i], EvalContext{&ctx, opt_.mode});
      }
    } else {
      for (std::size_t i = 0; i < n_; ++i) {
        if (retained[i]) total += enbcds(p_.gdfs[i], spend[i], EvalContext{nullptr, opt_.mode});
      }
    }
    return total;
  }

  std::vector<Money> gdf_values(const State& st) const {
    std::vector<Money> v(n_, 0.0);
    std::optional<DependencyContext> ctx;
    if (coupled_) ctx.emplace(p_, st.spend, st.retained);
    for (std::size_t i = 0; i < n_; ++i) {
      if (!st.retained[i]) continue;
      v[i] = enbcds(p_.gdfs[i], st.spend[i], EvalContext{ctx ? &*ctx : nullptr, opt_.mode});
    }
    return v;
  }

  // Spend at which GDF i's standalone marginal value falls to lambda.
  Money spend_at(std::size_t i, double lambda) const {
    if (slope0_[i] <= lambda || s_star_[i] <= 0.0) return 0.0;
    const Gdf& g = p_.gdfs[i];
    auto excess = [&](double s) { return enbcds_slope(g, s, {}) - lambda; };
    if (excess(s_star_[i]) >= 0.0) return s_star_[i];
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(excess, 0.0, s_star_[i], slope0_[i] - lambda,
                                                     excess(s_star_[i]),
                                                     boost::math::tools::eps_tolerance<double>(50), iters);
    // Smallest spend whose marginal is at or below lambda.
    return r.second;
  }

  void water_fill(State& st) const {
    std::vector<std::size_t> live;
    for (std::size_t i = 0; i < n_; ++i) {
      st.spend[i] = 0.0;
      if (st.retained[i]) live.push_back(i);
    }
    if (live.empty() || budget_ <= 0.0) return;
    Money total_star = 0.0;
    for (std::size_t i : live) total_star += s_star_[i];
    if (total_star <= budget_) {
      for (std::size_t i : live) st.spend[i] = s_star_[i];
      return;
    }
    double lambda_hi = 0.0;
    for (std::size_t i : live) lambda_hi = std::max(lambda_hi, slope0_[i]);
    auto total_at = [&](double lambda) {
      Money sum = 0.0;
      for (std::size_t i : live) sum += spend_at(i, lambda);
      return sum;
    };
    auto excess = [&](double lambda) { return total_at(lambda) - budget_; };
    std::uintmax_t iters = 300;
    const auto r = boost::math::tools::toms748_solve(excess, 0.0, lambda_hi, total_star - budget_,
                                                     -budget_,
                                                     boost::math::tools::eps_tolerance<double>(52), iters);
    // r.first spends at least the budget, r.second at most; interpolate
    // between them so the budget is met exactly even when a table model makes
    // the total spend jump.
    std::vector<Money> over(n_, 0.0);
    std::vector<Money> under(n_, 0.0);
    Money sum_over = 0.0;
    Money sum_under = 0.0;
    for (std::size_t i : live) {
      over[i] = spend_at(i, r.first);
      under[i] = spend_at(i, r.second);
      sum_over += over[i];
      sum_under += under[i];
    }
    const double theta = sum_over > sum_under ? (budget_ - sum_under) / (sum_over - sum_under) : 0.0;
    Money used = 0.0;
    for (std::size_t i : live) {
      st.spend[i] = under[i] + std::clamp(theta, 0.0, 1.0) * (over[i] - under[i]);
      used += st.spend[i];
    }
    if (used > budget_) {
      for (std::size_t i : live) st.spend[i] *= budget_ / used;
    }
  }

  void coordinate_ascent(State& st) {
    std::vector<std::size_t> vars;
    for (std::size_t i = 0; i < n_; ++i) {
      if (st.retained[i]) vars.push_back(i);
    }
    const std::size_t slack = n_;
    vars.push_back(slack);
    auto cap = [&](std::size_t v) { return v == slack ? kInf : cap_[v]; };

    std::vector<Money> spend = st.spend;
    auto unspent = [&] {
      Money used = 0.0;
      for (std::size_t i = 0; i < n_; ++i) used += spend[i];
      return std::max(0.0, budget_ - used);
    };
    double current = objective(spend, st.retained);
    for (std::size_t sweep = 0; sweep < opt_.max_sweeps; ++sweep) {
      const double start = current;
      for (std::size_t ia = 0; ia < vars.size(); ++ia) {
        for (std::size_t ib = ia + 1; ib < vars.size(); ++ib) {
          const std::size_t a = vars[ia];
          const std::size_t b = vars[ib];
          const Money sa = spend[a];
          const Money sb = b == slack ? unspent() : spend[b];
          const Money total = sa + sb;
          const double lo = std::max(0.0, total - cap(b));
          const double hi = std::min(total, cap(a));
          if (!(hi > lo)) continue;
          auto trial = [&](double t) {
            std::vector<Money> s = spend;
            s[a] = t;
            if (b != slack) s[b] = std::max(0.0, total - t);
            return objective(s, st.retained);
          };
          const double t = scan_then_golden_maximize(trial, lo, hi, 1e-10 * std::max(1.0, total), 24);
          const double v = trial(t);
          if (v > current) {
            current = v;
            spend[a] = t;
            if (b != slack) spend[b] = std::max(0.0, total - t);
          }
        }
      }
      ++iterations_;
      if (current - start <= opt_.sweep_tolerance * scale_) break;
    }
    st.spend = spend;
  }

  void solve(State& st) {
    if (additive_) {
      water_fill(st);
      ++iterations_;
      if (coupled_) coordinate_ascent(st);
    } else {
      for (std::size_t i = 0; i < n_; ++i) st.spend[i] = 0.0;
      coordinate_ascent(st);
    }
  }

  bool apply_drop_rule(State& st) const {
    const auto values = gdf_values(st);
    std::optional<std::size_t> worst;
    for (std::size_t i = 0; i < n_; ++i) {
      if (!st.retained[i] || p_.gdfs[i].mandatory || !(values[i] < 0.0)) continue;
      if (!worst || values[i] < values[*worst]) worst = i;
    }
    if (!worst) return false;
    st.retained[*worst] = false;
    st.spend[*worst] = 0.0;
    return true;
  }

  void fixed_point(State& st) {
    solve(st);
    while (apply_drop_rule(st)) solve(st);
  }

  bool toggle_search(State& st) {
    double best = objective(st.spend, st.retained);
    bool improved = false;
    for (std::size_t i = 0; i < n_; ++i) {
      if (p_.gdfs[i].mandatory) continue;
      State trial = st;
      trial.retained[i] = !trial.retained[i];
      trial.spend[i] = 0.0;
      fixed_point(trial);
      const double v = objective(trial.spend, trial.retained);
      if (v > best + 1e-12 * scale_) {
        best = v;
        st = std::move(trial);
        improved = true;
      }
    }
    return improved;
  }

  // One-sided marginals of the total objective with respect to GDF i.
  std::pair<double, double> one_sided(const State& st, std::size_t i) const {
    if (!coupled_ && additive_ && smooth_[i]) {
      const double m = enbcds_slope(p_.gdfs[i], st.spend[i], {});
      return {m, m};
    }
    const double h = 1e-7 * value_scale(p_.gdfs[i]);
    const double base = objective(st.spend, st.retained);
    std::vector<Money> s = st.spend;
    s[i] = st.spend[i] + h;
    const double right = (objective(s, st.retained) - base) / h;
    double left = right;
    if (st.spend[i] >= h) {
      s[i] = st.spend[i] - h;
      left = (base - objective(s, st.retained)) / h;
    }
    return {left, right};
  }

  double central_marginal(const State& st, std::size_t i) const {
    if (!coupled_ && smooth_[i]) {
      return enbcds_slope(p_.gdfs[i], st.spend[i], EvalContext{nullptr, opt_.mode});
    }
    const auto [left, right] = one_sided(st, i);
    return 0.5 * (left + right);
  }

  KktDiagnostics certify(const State& st, Money used) const {
    KktDiagnostics k;
    k.budget_binding = budget_ - used <= 1e-9 * std::max(1.0, budget_);
    double lo = 0.0;
    double hi = kInf;
    std::vector<std::size_t> positive;
    std::vector<std::pair<double, double>> sides(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      if (!st.retained[i]) continue;
      sides[i] = one_sided(st, i);
      if (st.spend[i] > 0.0) {
        positive.push_back(i);
        lo = std::max(lo, sides[i].second);
        hi = std::min(hi, sides[i].first);
      } else {
        lo = std::max(lo, sides[i].second);
      }
    }
    if (k.budget_binding) {
      k.lambda = hi == kInf ? lo : 0.5 * (lo + hi);
      k.lambda = std::max(0.0, k.lambda);
    }
    k.interior_count = positive.size();
    k.tolerance = 1e-4 * (1.0 + std::abs(k.lambda));
    double violation = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (!st.retained[i]) continue;
      const auto [left, right] = sides[i];
      if (st.spend[i] > 0.0) {
        violation = std::max({violation, right - k.lambda, k.lambda - left});
        k.max_interior_gap = std::max(k.max_interior_gap, std::abs(0.5 * (left + right) - k.lambda));
      } else {
        violation = std::max(violation, right - k.lambda);
      }
    }
    k.max_violation = std::max(0.0, violation);
    k.satisfied = k.max_violation <= k.tolerance;
    return k;
  }

  AllocationResult finish(const State& st) const {
    AllocationResult r;
    r.budget = budget_;
    r.method = !additive_ ? "coordinate-ascent (literal mode)"
               : coupled_ ? "water-filling + coordinate-ascent"
                          : "water-filling";
    r.iterations = iterations_;
    const auto values = gdf_values(st);
    for (std::size_t i = 0; i < n_; ++i) {
      const auto& id = p_.gdfs[i].id;
      r.spends[id] = st.retained[i] ? st.spend[i] : 0.0;
      r.budget_used += r.spends[id];
      if (!st.retained[i]) {
        r.dropped.insert(id);
        continue;
      }
      r.objective += values[i];
      r.value_at_solution[id] = values[i];
      r.marginal_at_solution[id] = central_marginal(st, i);
    }
    r.kkt = certify(st, r.budget_used);
    return r;
  }

  const Portfolio& p_;
  AllocationOptions opt_;
  std::size_t n_;
  Money budget_;
  bool coupled_ = false;
  bool additive_ = true;
  double scale_ = 1.0;
  std::vector<Money> s_star_;
  std::vector<double> slope0_;
  std::vector<bool> smooth_;
  std::vector<Money> cap_;
  std::size_t iterations_ = 0;
};

}  // namespace

AllocationResult allocate(const Portfolio& p, const AllocationOptions& options) {
  return Allocator(p, options).run();
}

}  // namespace enbcds
