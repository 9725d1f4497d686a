#include "cavsim/dynamics.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "cavsim/errors.h"

namespace cavsim {

VehicleState step_vehicle(const VehicleState& state, double accel_cmd, double dt,
                          const DynamicsLimits& limits) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_vehicle: dt must be positive");
  if (!std::isfinite(accel_cmd)) {
    throw NumericFault(fmt::format("non-finite acceleration command {}", accel_cmd));
  }
  VehicleState next = state;
  next.acceleration = std::clamp(accel_cmd, -limits.decel_max, limits.accel_max);
  next.position = state.position + state.speed * dt;
  next.speed = std::clamp(state.speed + next.acceleration * dt, 0.0, limits.speed_max);
  return next;
}

}  // namespace cavsim
