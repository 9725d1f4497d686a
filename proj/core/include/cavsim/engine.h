#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cavsim/control.h"
#include "cavsim/dynamics.h"
#include "cavsim/estimation.h"
#include "cavsim/network.h"
#include "cavsim/scenario.h"
#include "cavsim/types.h"

namespace cavsim {

struct EngineConfig {
  double sim_step = 0.01;  // s
  double duration = 30.0;  // s
  std::uint64_t seed = 1;
  std::size_t record_every = 1;  // steps between trajectory rows
};

struct EstimatorConfig {
  double prediction_step = 0.01;  // s
  double horizon = 5.0;           // s; N = round(horizon / prediction_step)
  double a_max = 0.73;            // m/s^2
  double sigma = 4.0;
  double v_target = 13.0;  // m/s
  bool implicit_solve = false;

  EstimatorParams params() const;
};

struct ControlConfig {
  double time_gap = 1.5;  // s
  GainTable gain_table = GainTable::uniform(ControlGains{});
};

struct ScenarioConfig {
  EngineConfig engine;
  ChannelModel channel;  // channel.seed is overridden by engine.seed at run time
  EstimatorConfig estimator;
  ControlConfig control;
  DynamicsLimits dynamics;
  std::vector<IntersectionSpec> intersections;
  SpawnPlan spawns;
  double exit_length = 100.0;     // m past the last crossing before a vehicle leaves
  double full_stop_speed = 0.5;   // m/s
};

// Cross-checks the whole configuration; throws ConfigError with a field path.
void validate(const ScenarioConfig& config);

struct TrajectoryRow {
  SimTime time = 0.0;
  VehicleId id;
  std::string leg;
  double virtual_position = 0.0;
  double speed = 0.0;
  double acceleration = 0.0;
  std::optional<double> est_target_position;
  std::optional<double> position_error;
  bool link_up = false;
};

// One follower's view of its target at one step.
struct FollowerSample {
  SimTime time = 0.0;
  VehicleId id;
  VehicleId target;
  double est_target_position = 0.0;
  double position_error = 0.0;  // estimated minus true target position, m
  double speed_error = 0.0;     // m/s
  bool link_up = false;
  bool horizon_exhausted = false;
};

struct VehicleSummary {
  VehicleId id;
  std::string spawn_leg;
  SimTime spawn_time = 0.0;
  std::optional<SimTime> cross_time;
  double max_abs_pos_err = 0.0;
  double rms_pos_err = 0.0;
  std::size_t error_samples = 0;
  std::optional<double> min_speed_in_zone;
  bool full_stop = false;
  std::size_t horizon_exhausted_steps = 0;
};

struct MetricsSummary {
  double max_abs_pos_err = 0.0;
  double rms_pos_err = 0.0;
  std::size_t error_samples = 0;
  std::size_t violation_count = 0;
  std::size_t rear_end_count = 0;
  std::size_t conflict_zone_count = 0;
  std::size_t full_stop_count = 0;
  std::size_t horizon_exhausted_steps = 0;
  std::size_t steps = 0;
  double mean_step_wallclock_ms = 0.0;
  double max_step_wallclock_ms = 0.0;
  std::size_t vehicles_spawned = 0;
  std::size_t vehicles_crossed = 0;
  ChannelStats channel;
  std::vector<std::string> warnings;
  std::vector<VehicleSummary> vehicles;
};

struct RunResult {
  std::vector<TrajectoryRow> trajectory;
  std::vector<FollowerSample> samples;
  std::vector<Violation> violations;  // first kMaxStoredViolations only
  MetricsSummary summary;
};

inline constexpr std::size_t kMaxStoredViolations = 1000;

struct EstimateEvent {
  std::size_t step;
  SimTime time;
  VehicleId id;
  std::size_t chain_index;
  const VehicleState& own;
  const TrajectoryEstimate& estimate;
};

struct ControlEvent {
  std::size_t step;
  SimTime time;
  VehicleId id;
  std::optional<VehicleId> target;
  const VehicleState& own;
  const EstimatorState& estimator;
  const TargetMotion* target_motion;  // null when driving the free-road law
  double accel_cmd;
};

// Observation points for tests and tooling; never alter the run.
struct RunHooks {
  std::function<void(const EstimateEvent&)> on_estimate;
  std::function<void(const ControlEvent&)> on_control;
};

// Fixed-step closed loop. Per step: spawn, advance the plant with last
// step's commands, update crossing order and associations, estimate and
// transmit in chain order, deliver, compute next commands, record.
RunResult run(const ScenarioConfig& config, const RunHooks& hooks = {});

struct SweepRow {
  double prediction_step = 0.0;
  double max_abs_pos_err = 0.0;
  double rms_pos_err = 0.0;
  double mean_step_wallclock_ms = 0.0;
  RunResult result;
};

// One run per prediction step with identical seed and scenario, in the
// order given.
std::vector<SweepRow> sweep_prediction_step(const ScenarioConfig& config,
                                            const std::vector<double>& steps);

}  // namespace cavsim
