#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace cavsim {

// Simulated time in seconds. Engine times are always derived from an
// integer step count (step * sim_step) so they never accumulate drift.
using SimTime = double;

struct VehicleId {
  std::uint32_t value = 0;

  friend constexpr auto operator<=>(VehicleId, VehicleId) = default;
};

struct VehicleState {
  double position = 0.0;      // m, front bumper on the virtual lane
  double speed = 0.0;         // m/s, never negative
  double acceleration = 0.0;  // m/s^2, last applied
  double length = 4.5;        // m
  std::string leg;            // approach the vehicle physically occupies
};

// Predicted future motion of one vehicle. Sample 0 is the ground-truth
// state at `anchor_time`; samples 1..N are the horizon at anchor + k*step.
struct TrajectoryEstimate {
  SimTime anchor_time = 0.0;
  double step = 0.1;
  double anchor_speed = 0.0;
  double anchor_position = 0.0;
  std::vector<double> speeds;     // speeds[k-1] = v(anchor + k*step)
  std::vector<double> positions;  // positions[k-1] = r(anchor + k*step)

  std::size_t horizon() const noexcept { return speeds.size(); }
  SimTime end_time() const noexcept {
    return anchor_time + static_cast<double>(horizon()) * step;
  }

  // k in [0, N]; k == 0 is the anchor state.
  double speed_at(std::size_t k) const {
    return k == 0 ? anchor_speed : speeds.at(k - 1);
  }
  double position_at(std::size_t k) const {
    return k == 0 ? anchor_position : positions.at(k - 1);
  }
};

struct Beacon {
  VehicleId sender;
  SimTime send_time = 0.0;
  VehicleState state;
  TrajectoryEstimate estimate;  // anchor_time == send_time
};

struct SpeedPosition {
  double speed = 0.0;
  double position = 0.0;
};

// Samples the estimate at `query_time`, interpolating linearly between
// neighbouring horizon samples. Exact sample times return the stored sample
// bit-for-bit. Throws HorizonExhausted past the horizon end and
// std::invalid_argument at or before the anchor.
SpeedPosition lerp_trajectory(const TrajectoryEstimate& est, SimTime query_time);

// True when `query_time` lies past the last horizon sample, using the same
// boundary rule as lerp_trajectory.
bool beyond_horizon(const TrajectoryEstimate& est, SimTime query_time);

}  // namespace cavsim

template <>
struct std::hash<cavsim::VehicleId> {
  std::size_t operator()(cavsim::VehicleId id) const noexcept {
    return std::hash<std::uint32_t>{}(id.value);
  }
};
