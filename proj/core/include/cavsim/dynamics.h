#pragma once

#include "cavsim/types.h"

namespace cavsim {

// Actuator saturation of the high-level plant. All magnitudes positive.
struct DynamicsLimits {
  double accel_max = 3.0;  // m/s^2
  double decel_max = 5.0;  // m/s^2
  double speed_max = 20.0;  // m/s

  bool valid() const noexcept {
    return accel_max > 0.0 && decel_max > 0.0 && speed_max > 0.0;
  }
};

// Advances a double-integrator vehicle by one explicit-Euler step. The
// position update uses the pre-update speed; the commanded acceleration is
// tracked perfectly up to saturation. Throws NumericFault on a non-finite
// command and std::invalid_argument when dt <= 0.
VehicleState step_vehicle(const VehicleState& state, double accel_cmd, double dt,
                          const DynamicsLimits& limits);

}  // namespace cavsim
