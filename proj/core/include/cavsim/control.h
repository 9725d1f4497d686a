#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cavsim/types.h"

namespace cavsim {

struct ControlGains {
  double k = 0.5;      // 1/s^2, consensus position gain
  double gamma = 0.8;  // s, weight of the speed-difference term
  int alpha = 1;       // adjacency: 1 iff the ego listens to the target

  bool valid() const noexcept {
    return k > 0.0 && gamma >= 0.0 && (alpha == 0 || alpha == 1);
  }
};

// What the ego knows about its target: possibly delayed, compensated, or
// read off a received trajectory estimate.
struct TargetView {
  double position = 0.0;  // m
  double speed = 0.0;     // m/s
  double length = 4.5;    // m
  double time_gap = 1.5;  // s
};

// Consensus feedback law driving the ego towards
//   r_i = r_j - (l_j + v_i * t_g),  v_i = v_j.
// The result is unsaturated; saturation belongs to the plant.
double consensus_accel(const VehicleState& ego, const TargetView& target,
                       const ControlGains& gains);

// Same law on bare scalars, shared by the controller and the estimator so
// both produce bit-identical values for identical inputs.
double consensus_accel(double ego_position, double ego_speed, double target_position,
                       double target_speed, double target_length, double time_gap,
                       const ControlGains& gains);

// One axis of the gain table: B+1 ascending boundaries define B half-open
// buckets [e_b, e_{b+1}). Inputs outside [e_0, e_B) clamp to the edge bucket.
struct BucketAxis {
  std::vector<double> edges;

  std::size_t buckets() const noexcept { return edges.empty() ? 0 : edges.size() - 1; }
};

// Gains as a function of (initial ego speed, initial target speed, initial
// headway). `entries` is row-major over (ego speed, target speed, headway).
struct GainTable {
  BucketAxis ego_speed;
  BucketAxis target_speed;
  BucketAxis headway;
  std::vector<ControlGains> entries;

  // One bucket per axis covering everything, mapping to `gains`.
  static GainTable uniform(const ControlGains& gains);

  // Empty string when the table is total and well-formed; otherwise a
  // description of the first problem.
  std::string validate() const;
};

struct GainLookup {
  ControlGains gains;
  bool clamped = false;  // some input fell outside the configured range
};

// Headway is the initial distance from ego front to target front, in metres.
GainLookup lookup_gains(const GainTable& table, double ego_speed0, double target_speed0,
                        double headway0);

}  // namespace cavsim
