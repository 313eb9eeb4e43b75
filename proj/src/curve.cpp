#include <algorithm>
#include <cmath>

#include "enbcds/error.hpp"
#include "enbcds/net_benefit.hpp"
#include "enbcds/optimize.hpp"

namespace enbcds {

EnbcdsCurve enbcds_curve(const Gdf& x, std::optional<Money> s_max, std::size_t n_samples,
                         const EvalContext& ctx) {
  if (n_samples < 2) {
    throw Error(ErrorKind::kDegenerateRange, "a curve needs at least 2 samples");
  }
  Money upper = 0.0;
  if (s_max) {
    upper = *s_max;
  } else {
    upper = expected_cyber_loss(x, 0.0, ctx);
    if (!(upper > 0.0)) upper = 1.0;
  }
  if (!(std::isfinite(upper) && upper > 0.0)) {
    throw Error(ErrorKind::kDegenerateRange, "s_max must be finite and > 0");
  }

  EnbcdsCurve curve;
  curve.gdf_id = x.id;
  curve.actual_spend = x.actual_spend;
  curve.samples.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const Money s = i + 1 == n_samples
                        ? upper
                        : upper * static_cast<double>(i) / static_cast<double>(n_samples - 1);
    curve.samples.push_back({s, enbcds(x, s, ctx)});
  }

  const auto best = optimal_spend_within(x, upper, ctx);
  curve.s_star = best.s_star;
  curve.peak_value = best.value;
  for (const auto& sample : curve.samples) {
    if (sample.value > curve.peak_value) {
      curve.peak_value = sample.value;
      curve.s_star = sample.s;
    }
  }
  return curve;
}

}  // namespace enbcds
