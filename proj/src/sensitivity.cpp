#include "enbcds/sensitivity.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

#include "enbcds/error.hpp"
#include "enbcds/optimize.hpp"

namespace enbcds {

namespace {

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

SplitMix64 SplitMix64::for_draw(std::uint64_t seed, std::uint64_t draw) {
  return SplitMix64(mix64(seed ^ mix64(draw + 0x9e3779b97f4a7c15ULL)));
}

SplitMix64::result_type SplitMix64::operator()() {
  state_ += 0x9e3779b97f4a7c15ULL;
  return mix64(state_);
}

double SplitMix64::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double distribution_mean(const Distribution& d) {
  return std::visit(
      [](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PointDist>) return v.value;
        if constexpr (std::is_same_v<T, UniformDist>) return 0.5 * (v.lo + v.hi);
        if constexpr (std::is_same_v<T, TriangularDist>) return (v.lo + v.mode + v.hi) / 3.0;
        if constexpr (std::is_same_v<T, PertDist>) return (v.lo + 4.0 * v.mode + v.hi) / 6.0;
      },
      d);
}

double distribution_min(const Distribution& d) {
  return std::visit(
      [](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PointDist>) {
          return v.value;
        } else {
          return v.lo;
        }
      },
      d);
}

void check_distribution(const Distribution& d, const std::string& path) {
  auto fail = [&](const std::string& why) {
    throw Error(ErrorKind::kInvalidDistribution, "invalid distribution: " + why, path);
  };
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PointDist>) {
          if (!std::isfinite(v.value)) fail("value must be finite");
        } else if constexpr (std::is_same_v<T, UniformDist>) {
          if (!std::isfinite(v.lo) || !std::isfinite(v.hi)) fail("bounds must be finite");
          if (v.lo > v.hi) fail("lo must be <= hi");
        } else {
          if (!std::isfinite(v.lo) || !std::isfinite(v.mode) || !std::isfinite(v.hi)) {
            fail("bounds must be finite");
          }
          if (!(v.lo <= v.mode && v.mode <= v.hi)) fail("need lo <= mode <= hi");
        }
      },
      d);
}

double sample_distribution(const Distribution& d, SplitMix64& rng) {
  return std::visit(
      [&](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PointDist>) {
          return v.value;
        } else if constexpr (std::is_same_v<T, UniformDist>) {
          return v.lo + (v.hi - v.lo) * rng.uniform();
        } else if constexpr (std::is_same_v<T, TriangularDist>) {
          const double width = v.hi - v.lo;
          if (!(width > 0.0)) return v.lo;
          const double u = rng.uniform();
          const double split = (v.mode - v.lo) / width;
          if (u < split) return v.lo + std::sqrt(u * width * (v.mode - v.lo));
          return v.hi - std::sqrt((1.0 - u) * width * (v.hi - v.mode));
        } else {
          const double width = v.hi - v.lo;
          if (!(width > 0.0)) return v.lo;
          const double a = 1.0 + 4.0 * (v.mode - v.lo) / width;
          const double b = 1.0 + 4.0 * (v.hi - v.mode) / width;
          std::gamma_distribution<double> ga(a, 1.0);
          std::gamma_distribution<double> gb(b, 1.0);
          const double x = ga(rng);
          const double y = gb(rng);
          return v.lo + width * (x / (x + y));
        }
      },
      d);
}

namespace {

std::vector<std::string> split_pointer(const std::string& pointer) {
  std::vector<std::string> tokens;
  if (pointer.empty() || pointer.front() != '/') return tokens;
  std::string token;
  for (std::size_t i = 1; i <= pointer.size(); ++i) {
    if (i == pointer.size() || pointer[i] == '/') {
      tokens.push_back(token);
      token.clear();
    } else if (pointer[i] == '~' && i + 1 < pointer.size() && (pointer[i + 1] == '0' || pointer[i + 1] == '1')) {
      token += pointer[i + 1] == '0' ? '~' : '/';
      ++i;
    } else {
      token += pointer[i];
    }
  }
  return tokens;
}

template <typename Range, typename IdOf>
std::optional<std::size_t> pick(const Range& items, const std::string& token, IdOf id_of) {
  std::size_t idx = 0;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, idx);
  if (ec == std::errc() && ptr == end && !token.empty()) {
    if (idx < items.size()) return idx;
    return std::nullopt;
  }
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (id_of(items[i]) == token) return i;
  }
  return std::nullopt;
}

}  // namespace

ResolvedTarget resolve_target(const Portfolio& p, const std::string& pointer) {
  auto fail = [&]() -> ResolvedTarget {
    throw Error(ErrorKind::kUnresolvedTarget, "cannot resolve target '" + pointer + "'", pointer);
  };
  const auto t = split_pointer(pointer);
  if (t.size() < 2 || t[0] != "portfolio") return fail();
  if (t.size() == 2 && t[1] == "budget") {
    return {TargetDomain::kMoney, [](Portfolio& q) -> double& { return q.budget; }};
  }
  if (t[1] == "gdfs" && t.size() >= 4) {
    const auto g = pick(p.gdfs, t[2], [](const Gdf& x) { return x.id; });
    if (!g) return fail();
    const std::size_t gi = *g;
    if (t.size() == 4) {
      if (t[3] == "ben") return {TargetDomain::kMoney, [gi](Portfolio& q) -> double& { return q.gdfs[gi].ben; }};
      if (t[3] == "dir_costs") {
        return {TargetDomain::kMoney, [gi](Portfolio& q) -> double& { return q.gdfs[gi].dir_costs; }};
      }
      if (t[3] == "actual_spend") {
        return {TargetDomain::kMoney, [gi](Portfolio& q) -> double& {
                  auto& s = q.gdfs[gi].actual_spend;
                  if (!s) s = 0.0;
                  return *s;
                }};
      }
      return fail();
    }
    const Gdf& gdf = p.gdfs[gi];
    if (t[3] == "attacks" && t.size() >= 6) {
      const auto a = pick(gdf.attacks, t[4], [](const AttackType& x) { return x.id; });
      if (!a) return fail();
      const std::size_t ai = *a;
      if (t.size() == 6 && t[5] == "baseline_prob") {
        return {TargetDomain::kProbability,
                [gi, ai](Portfolio& q) -> double& { return q.gdfs[gi].attacks[ai].baseline_prob; }};
      }
      if (t.size() == 6 && t[5] == "loss") {
        return {TargetDomain::kMoney, [gi, ai](Portfolio& q) -> double& { return q.gdfs[gi].attacks[ai].loss; }};
      }
      if (t.size() == 7 && t[5] == "breach") {
        const auto& fam = gdf.attacks[ai].breach.family();
        const std::string& field = t[6];
        if (std::holds_alternative<GordonLoebI>(fam) && (field == "alpha" || field == "beta")) {
          const bool alpha = field == "alpha";
          return {alpha ? TargetDomain::kPositive : TargetDomain::kAtLeastOne,
                  [gi, ai, alpha](Portfolio& q) -> double& {
                    auto& m = std::get<GordonLoebI>(q.gdfs[gi].attacks[ai].breach.family());
                    return alpha ? m.alpha : m.beta;
                  }};
        }
        if (std::holds_alternative<GordonLoebII>(fam) && field == "alpha") {
          return {TargetDomain::kPositive, [gi, ai](Portfolio& q) -> double& {
                    return std::get<GordonLoebII>(q.gdfs[gi].attacks[ai].breach.family()).alpha;
                  }};
        }
        if (std::holds_alternative<Exponential>(fam) && field == "kappa") {
          return {TargetDomain::kPositive, [gi, ai](Portfolio& q) -> double& {
                    return std::get<Exponential>(q.gdfs[gi].attacks[ai].breach.family()).kappa;
                  }};
        }
      }
      return fail();
    }
    if (t[3] == "adverse" && t.size() == 6) {
      const auto k = pick(gdf.adverse, t[4], [](const AdverseEvent& x) { return x.id; });
      if (!k) return fail();
      const std::size_t ki = *k;
      if (t[5] == "prob") {
        return {TargetDomain::kProbability, [gi, ki](Portfolio& q) -> double& { return q.gdfs[gi].adverse[ki].prob; }};
      }
      if (t[5] == "cost") {
        return {TargetDomain::kMoney, [gi, ki](Portfolio& q) -> double& { return q.gdfs[gi].adverse[ki].cost; }};
      }
    }
    return fail();
  }
  if (t[1] == "edges" && t.size() >= 4) {
    std::size_t ei = 0;
    const auto* end = t[2].data() + t[2].size();
    auto [ptr, ec] = std::from_chars(t[2].data(), end, ei);
    if (ec != std::errc() || ptr != end || ei >= p.edges.size()) return fail();
    if (t.size() == 4 && t[3] == "default_uplift") {
      return {TargetDomain::kAtLeastOne, [ei](Portfolio& q) -> double& { return q.edges[ei].default_uplift; }};
    }
    if (t.size() == 5 && t[3] == "uplift" && p.edges[ei].uplift.count(t[4]) != 0) {
      const std::string attack = t[4];
      return {TargetDomain::kAtLeastOne,
              [ei, attack](Portfolio& q) -> double& { return q.edges[ei].uplift.at(attack); }};
    }
  }
  return fail();
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  if (values.empty()) return s;
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t k = 0;
  for (double v : values) {
    ++k;
    const double delta = v - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (v - mean);
  }
  s.mean = mean;
  s.stddev = values.size() > 1 ? std::sqrt(m2 / static_cast<double>(values.size() - 1)) : 0.0;
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  auto pct = [&](double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    if (frac == 0.0 || sorted[lo] == sorted[hi]) return sorted[lo];
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
  };
  s.p5 = pct(0.05);
  s.p50 = pct(0.50);
  s.p95 = pct(0.95);
  return s;
}

unsigned threads_from_env() {
  const char* env = std::getenv("ENBCDS_THREADS");
  if (env == nullptr) return 1;
  unsigned n = 0;
  const std::string_view text(env);
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), n);
  if (ec != std::errc() || n == 0) return 1;
  return n;
}

namespace {

struct DrawResult {
  std::vector<double> params;
  std::vector<std::size_t> param_clamps;
  std::vector<double> value_at_spend;
  std::vector<double> s_star;
  std::vector<bool> dropped;
  double objective = 0.0;
};

bool in_domain(TargetDomain domain, double lo) {
  switch (domain) {
    case TargetDomain::kProbability: return true;
    case TargetDomain::kMoney: return lo >= 0.0;
    case TargetDomain::kPositive: return lo > 0.0;
    case TargetDomain::kAtLeastOne: return lo >= 1.0;
  }
  return false;
}

}  // namespace

SensitivityReport sample(const Portfolio& p, const std::vector<UncertainParam>& params,
                         std::size_t draws, std::uint64_t seed, const SampleOptions& options) {
  if (draws == 0) throw Error(ErrorKind::kInvalidArgument, "draws must be >= 1");
  require_valid(p);

  std::vector<ResolvedTarget> targets;
  targets.reserve(params.size());
  for (std::size_t k = 0; k < params.size(); ++k) {
    const std::string path = "/uncertainty/" + std::to_string(k);
    check_distribution(params[k].distribution, path + "/distribution");
    targets.push_back(resolve_target(p, params[k].target));
    if (!in_domain(targets.back().domain, distribution_min(params[k].distribution))) {
      throw Error(ErrorKind::kInvalidDistribution,
                  "distribution support falls outside the domain of '" + params[k].target + "'",
                  path + "/distribution");
    }
  }

  const std::size_t n = p.gdfs.size();
  AllocationOptions alloc_opt;
  alloc_opt.mode = options.mode;
  alloc_opt.budget = options.budget;

  auto run_draw = [&](std::size_t d) {
    DrawResult r;
    Portfolio q = p;
    SplitMix64 rng = SplitMix64::for_draw(seed, d);
    r.params.resize(params.size());
    r.param_clamps.assign(params.size(), 0);
    for (std::size_t k = 0; k < params.size(); ++k) {
      double v = sample_distribution(params[k].distribution, rng);
      r.params[k] = v;
      if (targets[k].domain == TargetDomain::kProbability && (v < 0.0 || v > 1.0)) {
        v = std::clamp(v, 0.0, 1.0);
        r.param_clamps[k] = 1;
      }
      targets[k].access(q) = v;
    }
    std::optional<DependencyContext> deps;
    if (!q.edges.empty()) deps.emplace(DependencyContext::at_actual_spend(q));
    const EvalContext ctx{deps ? &*deps : nullptr, options.mode};
    r.value_at_spend.resize(n);
    r.s_star.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Gdf& g = q.gdfs[i];
      r.value_at_spend[i] = enbcds(g, g.actual_spend.value_or(0.0), ctx);
      r.s_star[i] = optimal_spend(g, ctx).s_star;
    }
    const auto alloc = allocate(q, alloc_opt);
    r.objective = alloc.objective;
    r.dropped.resize(n);
    for (std::size_t i = 0; i < n; ++i) r.dropped[i] = alloc.dropped.count(q.gdfs[i].id) != 0;
    return r;
  };

  std::vector<DrawResult> results(draws);
  const unsigned workers = std::max(1U, std::min<unsigned>(options.threads, static_cast<unsigned>(draws)));
  if (workers == 1) {
    for (std::size_t d = 0; d < draws; ++d) results[d] = run_draw(d);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t d = next++; d < draws; d = next++) results[d] = run_draw(d);
        } catch (...) {
          errors[w] = std::current_exception();
          next = draws;
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  SensitivityReport report;
  report.draws = draws;
  report.seed = seed;
  std::vector<double> column(draws);
  for (std::size_t k = 0; k < params.size(); ++k) {
    ParamSensitivity ps;
    ps.target = params[k].target;
    for (std::size_t d = 0; d < draws; ++d) {
      column[d] = results[d].params[k];
      ps.clamp_count += results[d].param_clamps[k];
    }
    ps.sampled = summarize(column);
    report.clamp_count += ps.clamp_count;
    report.params.push_back(std::move(ps));
  }
  for (std::size_t i = 0; i < n; ++i) {
    GdfSensitivity gs;
    gs.gdf_id = p.gdfs[i].id;
    gs.evaluated_spend = p.gdfs[i].actual_spend.value_or(0.0);
    for (std::size_t d = 0; d < draws; ++d) column[d] = results[d].value_at_spend[i];
    gs.enbcds_at_spend = summarize(column);
    for (std::size_t d = 0; d < draws; ++d) column[d] = results[d].s_star[i];
    gs.s_star = summarize(column);
    std::size_t drops = 0;
    for (std::size_t d = 0; d < draws; ++d) drops += results[d].dropped[i] ? 1 : 0;
    gs.drop_frequency = static_cast<double>(drops) / static_cast<double>(draws);
    report.gdfs.push_back(std::move(gs));
  }
  for (std::size_t d = 0; d < draws; ++d) column[d] = results[d].objective;
  report.allocation_objective = summarize(column);
  return report;
}

}  // namespace enbcds
