#ifndef ENBCDS_SENSITIVITY_HPP
#define ENBCDS_SENSITIVITY_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "enbcds/model.hpp"
#include "enbcds/net_benefit.hpp"

namespace enbcds {

struct PointDist {
  double value = 0.0;
  bool operator==(const PointDist&) const = default;
};
struct UniformDist {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const UniformDist&) const = default;
};
struct TriangularDist {
  double lo = 0.0;
  double mode = 0.0;
  double hi = 0.0;
  bool operator==(const TriangularDist&) const = default;
};
// Beta-PERT with shape 4: Beta(1 + 4(m-a)/(b-a), 1 + 4(b-m)/(b-a)) on [a, b].
struct PertDist {
  double lo = 0.0;
  double mode = 0.0;
  double hi = 0.0;
  bool operator==(const PertDist&) const = default;
};

using Distribution = std::variant<PointDist, UniformDist, TriangularDist, PertDist>;

double distribution_mean(const Distribution& d);
double distribution_min(const Distribution& d);

// Throws Error(kInvalidDistribution) unless lo <= mode <= hi and every bound
// is finite.
void check_distribution(const Distribution& d, const std::string& path = {});

// SplitMix64. Each Monte Carlo draw owns one, seeded from (seed, draw index),
// so results do not depend on the order draws execute in.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t state) : state_(state) {}
  static SplitMix64 for_draw(std::uint64_t seed, std::uint64_t draw);
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();

 private:
  std::uint64_t state_;
};

double sample_distribution(const Distribution& d, SplitMix64& rng);

// A scenario scalar addressed by a JSON pointer into the scenario document,
// e.g. /portfolio/gdfs/0/attacks/1/loss. Array tokens may be indices or ids.
struct UncertainParam {
  std::string target;
  Distribution distribution;
  bool operator==(const UncertainParam&) const = default;
};

enum class TargetDomain { kProbability, kMoney, kPositive, kAtLeastOne };

struct ResolvedTarget {
  TargetDomain domain;
  std::function<double&(Portfolio&)> access;
};

// Throws Error(kUnresolvedTarget).
ResolvedTarget resolve_target(const Portfolio& p, const std::string& pointer);

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;
  double p5 = 0.0;
  double p50 = 0.0;
  double p95 = 0.0;
  bool operator==(const Summary&) const = default;
};

// Summary in the order given: Welford mean/variance (sample stddev) and
// linearly interpolated percentiles.
Summary summarize(const std::vector<double>& values);

struct ParamSensitivity {
  std::string target;
  Summary sampled;
  std::size_t clamp_count = 0;
  bool operator==(const ParamSensitivity&) const = default;
};

struct GdfSensitivity {
  std::string gdf_id;
  Money evaluated_spend = 0.0;  // actual_spend, or 0
  Summary enbcds_at_spend;
  Summary s_star;
  double drop_frequency = 0.0;
  bool operator==(const GdfSensitivity&) const = default;
};

struct SensitivityReport {
  std::size_t draws = 0;
  std::uint64_t seed = 0;
  std::size_t clamp_count = 0;
  std::vector<ParamSensitivity> params;
  std::vector<GdfSensitivity> gdfs;
  Summary allocation_objective;
  bool operator==(const SensitivityReport&) const = default;
};

struct SampleOptions {
  CybMode mode = CybMode::kAdditive;
  std::optional<Money> budget;
  unsigned threads = 1;
};

// Worker count from ENBCDS_THREADS (at least 1), defaulting to 1.
unsigned threads_from_env();

// Monte Carlo propagation of parameter uncertainty. For each draw every
// parameter is sampled from the draw's own stream, probability targets are
// clamped to [0, 1] (and counted), and s*, ENBCDS at actual spend and the
// budget allocation are recomputed. Throws Error(kInvalidArgument) for
// draws == 0, kUnresolvedTarget and kInvalidDistribution.
SensitivityReport sample(const Portfolio& p, const std::vector<UncertainParam>& params,
                         std::size_t draws, std::uint64_t seed, const SampleOptions& options = {});

}  // namespace enbcds

#endif  // ENBCDS_SENSITIVITY_HPP
