#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "cavsim/control.h"
#include "cavsim/types.h"

namespace cavsim {

struct EstimatorParams {
  double prediction_step = 0.01;  // s
  std::size_t horizon_len = 500;  // samples
  double a_max = 0.73;            // m/s^2, leader's maximum speed-change rate
  double sigma = 4.0;             // free-acceleration exponent
  double v_target = 13.0;         // m/s, leader's preset cruise speed
  bool implicit_solve = false;    // solve the follower update for v(t+k) in closed form

  bool valid() const noexcept {
    return prediction_step > 0.0 && horizon_len >= 1 && a_max > 0.0 && sigma > 0.0 &&
           v_target > 0.0;
  }
};

// Free-road acceleration a_max * (1 - (v / v_target)^sigma). The chain leader
// and vehicles outside coordination drive with exactly this law, which makes
// the leader's prediction below reproduce its own motion.
double free_road_accel(double speed, const EstimatorParams& params);

// Leader speed horizon: v(k) = v(k-1) + free_road_accel(v(k-1)) * dt,
// v(0) = v_now, clamped at zero. Returns v(1..N).
std::vector<double> predict_leader_speed(const EstimatorParams& params, double v_now);

// Cumulative position horizon r(k) = r(k-1) + v(k-1) * step with r(0) = r_now
// and v(0) = v_now. Returns r(1..N) for speeds = v(1..N).
std::vector<double> integrate_position(double r_now, double v_now,
                                       std::span<const double> speeds, double step);

// Target state feeding the ego update into horizon sample k (k in [1, N]),
// read off a target estimate that is `tau` seconds old. The base sample is
// k-1. For tau below one prediction step the speed is held; otherwise it is
// extrapolated by (tau / step) per-step speed deltas. Position is the base
// sample advanced by v_adj * tau.
SpeedPosition compensate_delay(const TrajectoryEstimate& target_est, std::size_t k,
                               double tau);

// Static association data a follower needs about its target link.
struct FollowerLink {
  VehicleId target;
  ControlGains gains;
  double time_gap = 1.5;  // s
};

// One follower horizon step. The spacing term uses the previous ego sample
// (prev_r, prev_v), mirroring the plant's explicit update, so at matching
// steps and zero delay the estimate reproduces the plant exactly.
double predict_follower_speed(double prev_v, double prev_r, double target_v_adj,
                              double target_r_adj, const ControlGains& gains,
                              double target_length, double time_gap,
                              const EstimatorParams& params);

struct EstimatorState {
  std::optional<TrajectoryEstimate> own_estimate;
  std::optional<Beacon> last_target_beacon;
  bool link_up = false;     // a fresher target beacon arrived during this step
  bool unconsumed = false;  // a target beacon arrived since the last refresh

  // Freshest-wins intake. Returns false for beacons not newer than the one
  // already held.
  bool accept(const Beacon& beacon);

  // Drops everything learnt about the previous target.
  void reset_target();
};

TrajectoryEstimate estimate_leader(const VehicleState& own, SimTime now,
                                   const EstimatorParams& params);

// Horizon of a follower computed from a received target beacon.
TrajectoryEstimate estimate_follower(const VehicleState& own, SimTime now,
                                     const Beacon& target, const FollowerLink& link,
                                     const EstimatorParams& params);

// Keeps the speed samples of `previous` and re-anchors them at `now` on the
// vehicle's own ground truth, padding the tail with the last speed.
TrajectoryEstimate shift_estimate(const TrajectoryEstimate& previous, const VehicleState& own,
                                  SimTime now, const EstimatorParams& params);

enum class ColdStartPolicy {
  kThrow,        // a follower with no beacon and no estimate is an error
  kDriveAsHead,  // such a follower predicts itself with the leader law
};

// Refreshes one vehicle's estimate. `link` is empty for a chain head.
TrajectoryEstimate refresh_estimate(EstimatorState& state, const VehicleState& own,
                                    const std::optional<FollowerLink>& link, SimTime now,
                                    const EstimatorParams& params,
                                    ColdStartPolicy policy = ColdStartPolicy::kThrow);

using EstimateCallback =
    std::function<void(std::size_t chain_index, VehicleId id, const TrajectoryEstimate&)>;

// Runs the chain n = 0..J in order. `on_estimate` fires after each vehicle so
// the caller can transmit and deliver before the successor is processed.
std::map<VehicleId, TrajectoryEstimate> update_estimates(
    std::span<const VehicleId> chain, std::map<VehicleId, EstimatorState>& states,
    const std::map<VehicleId, VehicleState>& ground_truth,
    const std::map<VehicleId, FollowerLink>& links, const EstimatorParams& params,
    SimTime now, const EstimateCallback& on_estimate = {},
    ColdStartPolicy policy = ColdStartPolicy::kThrow);

struct TargetMotion {
  TargetView view;
  bool live = false;               // built from a beacon received this step
  bool horizon_exhausted = false;  // past the end of the last received horizon
};

// The target input of the consensus controller at `now`: the live beacon
// with delay compensation when one arrived this step, otherwise the last
// received horizon sampled at `now`, otherwise held-speed extrapolation.
TargetMotion target_motion_for_control(const EstimatorState& state, const FollowerLink& link,
                                       SimTime now);

}  // namespace cavsim
