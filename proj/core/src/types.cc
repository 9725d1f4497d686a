#include "cavsim/types.h"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "cavsim/errors.h"

namespace cavsim {
namespace {

// Relative slack, in units of one step, for treating a query as landing on
// a sample boundary.
constexpr double kSampleSnap = 1e-9;

}  // namespace

SpeedPosition lerp_trajectory(const TrajectoryEstimate& est, SimTime query_time) {
  const std::size_t n = est.horizon();
  if (n == 0 || est.positions.size() != n) {
    throw std::invalid_argument("lerp_trajectory: malformed estimate");
  }
  const double x = (query_time - est.anchor_time) / est.step;
  if (!(x > kSampleSnap)) {
    throw std::invalid_argument(fmt::format(
        "lerp_trajectory: query {} not after anchor {}", query_time, est.anchor_time));
  }
  if (beyond_horizon(est, query_time)) {
    throw HorizonExhausted(fmt::format("query {} beyond horizon end {}", query_time,
                                       est.end_time()));
  }

  const double nearest = std::round(x);
  if (std::abs(x - nearest) <= kSampleSnap) {
    const auto k = static_cast<std::size_t>(nearest);
    return {est.speeds[k - 1], est.positions[k - 1]};
  }

  const auto k = static_cast<std::size_t>(std::ceil(x));
  const double frac = x - static_cast<double>(k - 1);
  const double v0 = est.speed_at(k - 1);
  const double r0 = est.position_at(k - 1);
  const double v1 = est.speeds[k - 1];
  const double r1 = est.positions[k - 1];
  return {v0 + frac * (v1 - v0), r0 + frac * (r1 - r0)};
}

bool beyond_horizon(const TrajectoryEstimate& est, SimTime query_time) {
  const double x = (query_time - est.anchor_time) / est.step;
  return x > static_cast<double>(est.horizon()) + kSampleSnap;
}

}  // namespace cavsim
