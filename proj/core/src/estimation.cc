#include "cavsim/estimation.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "cavsim/errors.h"

namespace cavsim {

double free_road_accel(double speed, const EstimatorParams& params) {
  const double ratio = std::max(speed, 0.0) / params.v_target;
  return params.a_max * (1.0 - std::pow(ratio, params.sigma));
}

std::vector<double> predict_leader_speed(const EstimatorParams& params, double v_now) {
  if (v_now < 0.0) throw std::invalid_argument("predict_leader_speed: negative speed");
  std::vector<double> speeds;
  speeds.reserve(params.horizon_len);
  double v = v_now;
  for (std::size_t k = 1; k <= params.horizon_len; ++k) {
    v = std::max(0.0, v + free_road_accel(v, params) * params.prediction_step);
    speeds.push_back(v);
  }
  return speeds;
}

std::vector<double> integrate_position(double r_now, double v_now,
                                       std::span<const double> speeds, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("integrate_position: step must be positive");
  std::vector<double> positions;
  positions.reserve(speeds.size());
  double r = r_now;
  double v_prev = v_now;
  for (double v : speeds) {
    r = r + v_prev * step;
    positions.push_back(r);
    v_prev = v;
  }
  return positions;
}

SpeedPosition compensate_delay(const TrajectoryEstimate& target_est, std::size_t k,
                               double tau) {
  if (k == 0 || k > target_est.horizon()) {
    throw std::invalid_argument(
        fmt::format("compensate_delay: index {} outside [1, {}]", k, target_est.horizon()));
  }
  if (tau < 0.0) throw std::invalid_argument("compensate_delay: negative delay");
  const double dt = target_est.step;
  const double v_base = target_est.speed_at(k - 1);
  double v_adj = v_base;
  if (tau >= dt) {
    const double per_step_delta = target_est.speed_at(k) - v_base;
    v_adj = std::max(0.0, v_base + (tau / dt) * per_step_delta);
  }
  return {v_adj, target_est.position_at(k - 1) + v_adj * tau};
}

double predict_follower_speed(double prev_v, double prev_r, double target_v_adj,
                              double target_r_adj, const ControlGains& gains,
                              double target_length, double time_gap,
                              const EstimatorParams& params) {
  const double dt = params.prediction_step;
  double v = 0.0;
  if (params.implicit_solve) {
    // v appears on both sides of the update; with the ego position advanced
    // to r(k-1) + v(k-1) dt the relation is linear in v.
    const double r_now = prev_r + prev_v * dt;
    const double w = gains.alpha * gains.k * dt;
    v = (prev_v - w * (r_now - target_r_adj + target_length - gains.gamma * target_v_adj)) /
        (1.0 + w * (time_gap + gains.gamma));
  } else {
    v = prev_v + dt * consensus_accel(prev_r, prev_v, target_r_adj, target_v_adj,
                                      target_length, time_gap, gains);
  }
  if (!std::isfinite(v)) throw NumericFault("predict_follower_speed: non-finite result");
  return std::max(0.0, v);
}

bool EstimatorState::accept(const Beacon& beacon) {
  if (last_target_beacon && beacon.send_time <= last_target_beacon->send_time) return false;
  last_target_beacon = beacon;
  link_up = true;
  unconsumed = true;
  return true;
}

void EstimatorState::reset_target() {
  last_target_beacon.reset();
  link_up = false;
  unconsumed = false;
}

TrajectoryEstimate estimate_leader(const VehicleState& own, SimTime now,
                                   const EstimatorParams& params) {
  TrajectoryEstimate est;
  est.anchor_time = now;
  est.step = params.prediction_step;
  est.anchor_speed = own.speed;
  est.anchor_position = own.position;
  est.speeds = predict_leader_speed(params, own.speed);
  est.positions = integrate_position(own.position, own.speed, est.speeds, est.step);
  return est;
}

TrajectoryEstimate estimate_follower(const VehicleState& own, SimTime now,
                                     const Beacon& target, const FollowerLink& link,
                                     const EstimatorParams& params) {
  const TrajectoryEstimate& target_est = target.estimate;
  const std::size_t n = params.horizon_len;
  if (target_est.horizon() < n) {
    throw std::invalid_argument(fmt::format(
        "estimate_follower: target horizon {} shorter than own {}", target_est.horizon(), n));
  }
  const double tau = std::max(0.0, now - target.send_time);

  TrajectoryEstimate est;
  est.anchor_time = now;
  est.step = params.prediction_step;
  est.anchor_speed = own.speed;
  est.anchor_position = own.position;
  est.speeds.reserve(n);

  double v_prev = own.speed;
  double r_prev = own.position;
  for (std::size_t k = 1; k <= n; ++k) {
    const auto adj = compensate_delay(target_est, k, tau);
    const double v = predict_follower_speed(v_prev, r_prev, adj.speed, adj.position,
                                            link.gains, target.state.length, link.time_gap,
                                            params);
    r_prev = r_prev + v_prev * params.prediction_step;
    v_prev = v;
    est.speeds.push_back(v);
  }
  est.positions = integrate_position(own.position, own.speed, est.speeds, est.step);
  return est;
}

TrajectoryEstimate shift_estimate(const TrajectoryEstimate& previous, const VehicleState& own,
                                  SimTime now, const EstimatorParams& params) {
  const double offset = (now - previous.anchor_time) / previous.step;
  const auto skip = static_cast<std::size_t>(std::max(0.0, std::round(offset)));

  TrajectoryEstimate est;
  est.anchor_time = now;
  est.step = params.prediction_step;
  est.anchor_speed = own.speed;
  est.anchor_position = own.position;
  est.speeds.reserve(params.horizon_len);
  for (std::size_t k = skip + 1; k <= previous.horizon() && est.speeds.size() < params.horizon_len;
       ++k) {
    est.speeds.push_back(previous.speed_at(k));
  }
  const double tail = est.speeds.empty() ? previous.speed_at(previous.horizon())
                                         : est.speeds.back();
  est.speeds.resize(params.horizon_len, tail);
  est.positions = integrate_position(own.position, own.speed, est.speeds, est.step);
  return est;
}

TrajectoryEstimate refresh_estimate(EstimatorState& state, const VehicleState& own,
                                    const std::optional<FollowerLink>& link, SimTime now,
                                    const EstimatorParams& params, ColdStartPolicy policy) {
  TrajectoryEstimate est;
  if (!link) {
    est = estimate_leader(own, now, params);
  } else if (state.unconsumed && state.last_target_beacon) {
    est = estimate_follower(own, now, *state.last_target_beacon, *link, params);
    state.unconsumed = false;
  } else if (state.own_estimate && state.last_target_beacon) {
    est = shift_estimate(*state.own_estimate, own, now, params);
  } else if (policy == ColdStartPolicy::kDriveAsHead) {
    est = estimate_leader(own, now, params);
  } else {
    throw ColdStart(fmt::format("follower of vehicle {} has no estimate and no beacon",
                                link->target.value));
  }
  state.own_estimate = est;
  return est;
}

std::map<VehicleId, TrajectoryEstimate> update_estimates(
    std::span<const VehicleId> chain, std::map<VehicleId, EstimatorState>& states,
    const std::map<VehicleId, VehicleState>& ground_truth,
    const std::map<VehicleId, FollowerLink>& links, const EstimatorParams& params,
    SimTime now, const EstimateCallback& on_estimate, ColdStartPolicy policy) {
  std::map<VehicleId, TrajectoryEstimate> out;
  for (std::size_t n = 0; n < chain.size(); ++n) {
    const VehicleId id = chain[n];
    std::optional<FollowerLink> link;
    if (n > 0) {
      if (auto it = links.find(id); it != links.end()) link = it->second;
    }
    auto& est = out[id] = refresh_estimate(states[id], ground_truth.at(id), link, now, params,
                                           policy);
    if (on_estimate) on_estimate(n, id, est);
  }
  return out;
}

TargetMotion target_motion_for_control(const EstimatorState& state, const FollowerLink& link,
                                       SimTime now) {
  if (!state.last_target_beacon) {
    throw ColdStart(fmt::format("no beacon received from vehicle {}", link.target.value));
  }
  const Beacon& beacon = *state.last_target_beacon;
  const TrajectoryEstimate& est = beacon.estimate;

  TargetMotion out;
  out.view.length = beacon.state.length;
  out.view.time_gap = link.time_gap;

  if (state.link_up || !(now > est.anchor_time)) {
    const auto adj = compensate_delay(est, 1, std::max(0.0, now - beacon.send_time));
    out.view.speed = adj.speed;
    out.view.position = adj.position;
    out.live = true;
    return out;
  }
  if (beyond_horizon(est, now)) {
    const double v_end = est.speed_at(est.horizon());
    out.view.speed = v_end;
    out.view.position = est.position_at(est.horizon()) + v_end * (now - est.end_time());
    out.horizon_exhausted = true;
    return out;
  }
  const auto sample = lerp_trajectory(est, now);
  out.view.speed = sample.speed;
  out.view.position = sample.position;
  return out;
}

}  // namespace cavsim
