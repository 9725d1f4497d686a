#include "cavsim/engine.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "cavsim/errors.h"

namespace cavsim {
namespace {

constexpr double kRatioTolerance = 1e-6;

// Integer n with a == n * b, if there is one.
std::optional<long long> integer_ratio(double a, double b) {
  const double r = a / b;
  const double n = std::round(r);
  if (n < 1.0 || std::abs(r - n) > kRatioTolerance * n) return std::nullopt;
  return static_cast<long long>(n);
}

std::size_t step_count(const EngineConfig& engine) {
  const double x = engine.duration / engine.sim_step;
  const double n = std::round(x);
  return static_cast<std::size_t>(std::abs(x - n) < 1e-9 ? n : std::floor(x));
}

struct Vehicle {
  VehicleId id;
  std::vector<RouteStep> route;
  std::size_t segment = 0;
  std::size_t intersection = 0;  // index into config.intersections
  VehicleState state;
  SimTime spawn_time = 0.0;
  std::optional<SimTime> entry_time;
  bool exited = false;  // past the crossing of its current intersection
  bool active = true;
  std::optional<double> pending_cmd;
  EstimatorState est;
  std::optional<FollowerLink> link;

  // per-run aggregates
  double max_abs_err = 0.0;
  double sum_sq_err = 0.0;
  std::size_t err_samples = 0;
  std::optional<double> min_speed_in_zone;
  bool full_stop = false;
  std::size_t exhausted_steps = 0;
  std::optional<SimTime> cross_time;
};

class Simulation {
 public:
  Simulation(const ScenarioConfig& config, const RunHooks& hooks)
      : config_(config),
        hooks_(hooks),
        params_(config.estimator.params()),
        channel_([&] {
          ChannelModel m = config.channel;
          m.seed = config.engine.seed;
          return m;
        }()),
        sequences_(config.intersections.size()),
        sequence_changed_(config.intersections.size(), true) {
    for (std::size_t i = 0; i < config.intersections.size(); ++i) {
      intersection_index_[config.intersections[i].id] = i;
    }
    pending_spawns_ =
        expand_spawn_plan(config.spawns, config.intersections, config.engine.seed);
    const double dt = config.engine.sim_step;
    if (params_.prediction_step >= dt) {
      refresh_every_ = static_cast<std::size_t>(
          integer_ratio(params_.prediction_step, dt).value_or(1));
    }
  }

  RunResult run() {
    const std::size_t steps = step_count(config_.engine);
    double wall_total = 0.0;
    for (std::size_t s = 0; s < steps; ++s) {
      const auto start = std::chrono::steady_clock::now();
      step(s);
      const auto stop = std::chrono::steady_clock::now();
      const double ms = std::chrono::duration<double, std::milli>(stop - start).count();
      wall_total += ms;
      result_.summary.max_step_wallclock_ms = std::max(result_.summary.max_step_wallclock_ms, ms);
      record(s);
    }
    finalize(steps, wall_total);
    return std::move(result_);
  }

 private:
  SimTime time_of(std::size_t s) const { return static_cast<double>(s) * config_.engine.sim_step; }

  const IntersectionSpec& spec_of(const Vehicle& v) const {
    return config_.intersections[v.intersection];
  }

  Vehicle* find(VehicleId id) {
    if (id.value >= vehicles_.size()) return nullptr;
    auto& v = vehicles_[id.value];
    return v.active ? &v : nullptr;
  }

  void warn(std::string message) {
    spdlog::warn("{}", message);
    result_.summary.warnings.push_back(std::move(message));
  }

  void step(std::size_t s) {
    const SimTime t = time_of(s);
    for (auto& v : vehicles_) v.est.link_up = false;

    spawn_due(t);
    advance_plant(s);
    update_sequencing(t);
    estimate_and_transmit(s, t);
    dispatch(t);
    compute_commands(s, t);
    check_safety(t);
  }

  void spawn_due(SimTime t) {
    const double eps = 1e-9;
    std::vector<SpawnEvent> deferred;
    for (auto it = pending_spawns_.begin(); it != pending_spawns_.end();) {
      if (it->time > t + eps) break;
      if (!try_spawn(*it, t)) {
        deferred.push_back(std::move(*it));
      }
      it = pending_spawns_.erase(it);
    }
    pending_spawns_.insert(pending_spawns_.begin(), std::make_move_iterator(deferred.begin()),
                           std::make_move_iterator(deferred.end()));
  }

  bool try_spawn(const SpawnEvent& ev, SimTime t) {
    const auto& first = ev.route.front();
    const std::size_t xi = intersection_index_.at(first.intersection);
    const auto& spec = config_.intersections[xi];
    const double distance = ev.distance.value_or(spec.find_leg(first.leg)->approach_length);
    const double front = project_to_virtual_lane(distance, spec);
    const double rear = front - ev.length;
    const double gap = config_.spawns.min_spawn_gap;
    for (const auto& other : vehicles_) {
      if (!other.active || other.intersection != xi || other.state.leg != first.leg) continue;
      const double o_front = other.state.position;
      const double o_rear = o_front - other.state.length;
      if (front + gap > o_rear && rear < o_front + gap) return false;
    }

    Vehicle v;
    v.id = VehicleId{static_cast<std::uint32_t>(vehicles_.size())};
    v.route = ev.route;
    v.intersection = xi;
    v.state.position = front;
    v.state.speed = ev.speed;
    v.state.length = ev.length;
    v.state.leg = first.leg;
    v.spawn_time = t;
    spdlog::debug("t={:.3f} spawn vehicle {} on {}/{} at d={:.2f}", t, v.id.value,
                  first.intersection, first.leg, distance);
    vehicles_.push_back(std::move(v));
    ++result_.summary.vehicles_spawned;
    return true;
  }

  void advance_plant(std::size_t s) {
    for (auto& v : vehicles_) {
      if (!v.active || !v.pending_cmd) continue;
      try {
        v.state = step_vehicle(v.state, *v.pending_cmd, config_.engine.sim_step, config_.dynamics);
      } catch (const NumericFault& e) {
        throw NumericFault(fmt::format("step {} vehicle {}: {}", s, v.id.value, e.what()));
      }
      v.pending_cmd.reset();
    }
  }

  void update_sequencing(SimTime t) {
    for (auto& v : vehicles_) {
      if (!v.active) continue;
      const auto* spec = &spec_of(v);
      if (!v.exited && v.state.position - v.state.length > spec->virtual_crossing) {
        sequences_[v.intersection].remove(v.id);
        sequence_changed_[v.intersection] = true;
        if (v.segment + 1 < v.route.size()) {
          // Rebase onto the next intersection's virtual lane.
          const double past = v.state.position - spec->virtual_crossing;
          ++v.segment;
          const auto& next = v.route[v.segment];
          v.intersection = intersection_index_.at(next.intersection);
          spec = &spec_of(v);
          const double approach = spec->find_leg(next.leg)->approach_length;
          v.state.position = project_to_virtual_lane(approach - past, *spec);
          v.state.leg = next.leg;
          v.entry_time.reset();
        } else {
          v.exited = true;
          v.cross_time = t;
          ++result_.summary.vehicles_crossed;
        }
      }
      if (v.exited && v.state.position > spec->virtual_crossing + config_.exit_length) {
        v.active = false;
        continue;
      }
      if (!v.exited && !v.entry_time &&
          distance_to_crossing(v.state.position, *spec) <= spec->control_zone_radius) {
        v.entry_time = t;
        sequences_[v.intersection].admit(v.id, t);
        sequence_changed_[v.intersection] = true;
      }
    }

    for (std::size_t xi = 0; xi < sequences_.size(); ++xi) {
      if (!sequence_changed_[xi]) continue;
      sequence_changed_[xi] = false;
      const auto targets = assign_targets(sequences_[xi]);
      for (const auto id : sequences_[xi].order()) {
        auto& v = vehicles_[id.value];
        const auto it = targets.find(id);
        if (it == targets.end()) {
          if (v.link) {
            spdlog::debug("t={:.3f} vehicle {} becomes chain head", t, id.value);
            v.link.reset();
            v.est.reset_target();
          }
          continue;
        }
        if (v.link && v.link->target == it->second) continue;
        associate(v, vehicles_[it->second.value], t);
      }
    }
    for (auto& v : vehicles_) {
      if (v.link && (!v.active || v.exited || !sequences_[v.intersection].contains(v.id))) {
        v.link.reset();
        v.est.reset_target();
      }
    }
  }

  void associate(Vehicle& ego, const Vehicle& target, SimTime t) {
    const double headway = target.state.position - ego.state.position;
    const auto lookup = lookup_gains(config_.control.gain_table, ego.state.speed,
                                     target.state.speed, headway);
    if (lookup.clamped) {
      warn(fmt::format("t={:.3f} gain lookup for {}->{} clamped (v_i={:.2f}, v_j={:.2f}, "
                       "headway={:.2f})",
                       t, ego.id.value, target.id.value, ego.state.speed, target.state.speed,
                       headway));
    }
    spdlog::debug("t={:.3f} vehicle {} targets {} (k={}, gamma={})", t, ego.id.value,
                  target.id.value, lookup.gains.k, lookup.gains.gamma);
    ego.link = FollowerLink{target.id, lookup.gains, config_.control.time_gap};
    ego.est.reset_target();
  }

  void dispatch(SimTime t) {
    for (auto& item : channel_.deliver_due(t)) {
      Vehicle* rx = find(item.receiver);
      if (rx == nullptr || !rx->link || rx->link->target != item.beacon.sender) continue;
      rx->est.accept(item.beacon);
    }
  }

  void estimate_and_transmit(std::size_t s, SimTime t) {
    if (s % refresh_every_ != 0) return;
    for (const auto& sequence : sequences_) {
      const auto chain = sequence.order();
      for (std::size_t n = 0; n < chain.size(); ++n) {
        dispatch(t);
        auto& v = vehicles_[chain[n].value];
        const std::optional<FollowerLink> link = n > 0 ? v.link : std::nullopt;
        const auto& est = refresh_estimate(v.est, v.state, link, t, params_,
                                           ColdStartPolicy::kDriveAsHead);
        if (hooks_.on_estimate) hooks_.on_estimate({s, t, v.id, n, v.state, est});
        if (n + 1 < chain.size()) {
          channel_.send(Beacon{v.id, t, v.state, est}, chain[n + 1], t);
        }
      }
    }
  }

  void compute_commands(std::size_t s, SimTime t) {
    for (auto& v : vehicles_) {
      if (!v.active) continue;
      double cmd = 0.0;
      std::optional<TargetMotion> motion;
      if (v.link && v.est.last_target_beacon) {
        motion = target_motion_for_control(v.est, *v.link, t);
        cmd = consensus_accel(v.state, motion->view, v.link->gains);
        const auto& truth = vehicles_[v.link->target.value].state;
        FollowerSample sample{t,
                              v.id,
                              v.link->target,
                              motion->view.position,
                              motion->view.position - truth.position,
                              motion->view.speed - truth.speed,
                              motion->live,
                              motion->horizon_exhausted};
        accumulate(v, sample);
        if (s % config_.engine.record_every == 0) result_.samples.push_back(sample);
      } else {
        cmd = free_road_accel(v.state.speed, params_);
      }
      if (!std::isfinite(cmd)) {
        throw NumericFault(fmt::format("step {} vehicle {}: non-finite command", s, v.id.value));
      }
      v.pending_cmd = cmd;
      if (hooks_.on_control) {
        hooks_.on_control({s, t, v.id,
                           v.link ? std::optional<VehicleId>(v.link->target) : std::nullopt,
                           v.state, v.est, motion ? &*motion : nullptr, cmd});
      }
      last_motion_[v.id.value] = motion;
    }
  }

  void accumulate(Vehicle& v, const FollowerSample& sample) {
    const double e = std::abs(sample.position_error);
    v.max_abs_err = std::max(v.max_abs_err, e);
    v.sum_sq_err += e * e;
    ++v.err_samples;
    if (sample.horizon_exhausted) ++v.exhausted_steps;
    auto& sum = result_.summary;
    sum.max_abs_pos_err = std::max(sum.max_abs_pos_err, e);
    total_sq_err_ += e * e;
    ++sum.error_samples;
    if (sample.horizon_exhausted) ++sum.horizon_exhausted_steps;
  }

  void check_safety(SimTime t) {
    for (std::size_t xi = 0; xi < config_.intersections.size(); ++xi) {
      safety_states_.clear();
      for (const auto& v : vehicles_) {
        if (v.active && v.intersection == xi) safety_states_.emplace_back(v.id, v.state);
      }
      for (auto& violation : safety_check(safety_states_, config_.intersections[xi])) {
        violation.time = t;
        auto& sum = result_.summary;
        ++sum.violation_count;
        if (violation.kind == ViolationKind::kRearEnd) {
          ++sum.rear_end_count;
        } else {
          ++sum.conflict_zone_count;
        }
        if (result_.violations.size() < kMaxStoredViolations) {
          result_.violations.push_back(violation);
        }
      }
    }
    for (auto& v : vehicles_) {
      if (!v.active || !v.entry_time || v.exited) continue;
      v.min_speed_in_zone = std::min(v.min_speed_in_zone.value_or(v.state.speed), v.state.speed);
      if (v.state.speed < config_.full_stop_speed) v.full_stop = true;
    }
  }

  void record(std::size_t s) {
    if (s % config_.engine.record_every != 0) return;
    const SimTime t = time_of(s);
    for (const auto& v : vehicles_) {
      if (!v.active) continue;
      TrajectoryRow row;
      row.time = t;
      row.id = v.id;
      row.leg = v.state.leg;
      row.virtual_position = v.state.position;
      row.speed = v.state.speed;
      row.acceleration = v.state.acceleration;
      if (const auto it = last_motion_.find(v.id.value);
          it != last_motion_.end() && it->second && v.link) {
        row.est_target_position = it->second->view.position;
        row.position_error =
            it->second->view.position - vehicles_[v.link->target.value].state.position;
        row.link_up = it->second->live;
      }
      result_.trajectory.push_back(std::move(row));
    }
  }

  void finalize(std::size_t steps, double wall_total) {
    auto& sum = result_.summary;
    sum.steps = steps;
    sum.mean_step_wallclock_ms = steps == 0 ? 0.0 : wall_total / static_cast<double>(steps);
    sum.rms_pos_err =
        sum.error_samples == 0 ? 0.0 : std::sqrt(total_sq_err_ / static_cast<double>(sum.error_samples));
    sum.channel = channel_.stats();
    for (const auto& v : vehicles_) {
      VehicleSummary vs;
      vs.id = v.id;
      vs.spawn_leg = v.route.front().leg;
      vs.spawn_time = v.spawn_time;
      vs.cross_time = v.cross_time;
      vs.max_abs_pos_err = v.max_abs_err;
      vs.rms_pos_err =
          v.err_samples == 0 ? 0.0 : std::sqrt(v.sum_sq_err / static_cast<double>(v.err_samples));
      vs.error_samples = v.err_samples;
      vs.min_speed_in_zone = v.min_speed_in_zone;
      vs.full_stop = v.full_stop;
      vs.horizon_exhausted_steps = v.exhausted_steps;
      if (v.full_stop) ++sum.full_stop_count;
      sum.vehicles.push_back(std::move(vs));
    }
  }

  const ScenarioConfig& config_;
  const RunHooks& hooks_;
  EstimatorParams params_;
  Channel channel_;
  std::vector<CrossingSequence> sequences_;
  std::vector<bool> sequence_changed_;
  std::vector<std::pair<VehicleId, VehicleState>> safety_states_;
  std::map<std::string, std::size_t> intersection_index_;
  std::vector<SpawnEvent> pending_spawns_;
  std::vector<Vehicle> vehicles_;
  std::map<std::uint32_t, std::optional<TargetMotion>> last_motion_;
  std::size_t refresh_every_ = 1;
  double total_sq_err_ = 0.0;
  RunResult result_;
};

ConfigError config_error(std::string path, const std::string& message) {
  return ConfigError(std::move(path), message);
}

}  // namespace

EstimatorParams EstimatorConfig::params() const {
  EstimatorParams p;
  p.prediction_step = prediction_step;
  p.horizon_len = static_cast<std::size_t>(std::max(1.0, std::round(horizon / prediction_step)));
  p.a_max = a_max;
  p.sigma = sigma;
  p.v_target = v_target;
  p.implicit_solve = implicit_solve;
  return p;
}

void validate(const ScenarioConfig& c) {
  const auto& e = c.engine;
  if (!(e.sim_step > 0.0)) throw config_error("engine.sim_step_s", "must be > 0");
  if (!(e.duration >= 0.0)) throw config_error("engine.duration_s", "must be >= 0");
  if (e.record_every < 1) throw config_error("engine.record_every", "must be >= 1");

  if (auto msg = c.channel.validate(); !msg.empty()) throw config_error("channel", msg);

  const auto& est = c.estimator;
  if (!(est.prediction_step > 0.0)) throw config_error("estimator.prediction_step_s", "must be > 0");
  const bool divisible = est.prediction_step >= e.sim_step
                             ? integer_ratio(est.prediction_step, e.sim_step).has_value()
                             : integer_ratio(e.sim_step, est.prediction_step).has_value();
  if (!divisible) {
    throw config_error("estimator.prediction_step_s",
                       fmt::format("{} and engine.sim_step_s {} must be integer multiples of "
                                   "one another",
                                   est.prediction_step, e.sim_step));
  }
  if (!(est.horizon >= est.prediction_step)) {
    throw config_error("estimator.horizon_s", "must cover at least one prediction step");
  }
  if (!(est.a_max > 0.0)) throw config_error("estimator.a_max", "must be > 0");
  if (!(est.sigma > 0.0)) throw config_error("estimator.sigma", "must be > 0");
  if (!(est.v_target > 0.0)) throw config_error("estimator.v_target", "must be > 0");

  if (!(c.control.time_gap > 0.0)) throw config_error("control.time_gap_s", "must be > 0");
  if (auto msg = c.control.gain_table.validate(); !msg.empty()) {
    throw config_error("control.gain_table", msg);
  }
  if (!c.dynamics.valid()) throw config_error("dynamics", "all limits must be > 0");

  if (c.intersections.empty()) throw config_error("intersections", "at least one is required");
  for (std::size_t i = 0; i < c.intersections.size(); ++i) {
    const auto& x = c.intersections[i];
    if (auto msg = x.validate(); !msg.empty()) {
      throw config_error(fmt::format("intersections[{}]", i), msg);
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (c.intersections[j].id == x.id) {
        throw config_error(fmt::format("intersections[{}].id", i), "duplicate id " + x.id);
      }
    }
  }

  const auto find_x = [&](const std::string& id) -> const IntersectionSpec* {
    for (const auto& x : c.intersections) {
      if (x.id == id) return &x;
    }
    return nullptr;
  };
  for (std::size_t i = 0; i < c.spawns.events.size(); ++i) {
    const auto& ev = c.spawns.events[i];
    const auto path = fmt::format("spawns.events[{}]", i);
    if (!(ev.time >= 0.0)) throw config_error(path + ".time_s", "must be >= 0");
    if (!(ev.speed >= 0.0)) throw config_error(path + ".speed_mps", "must be >= 0");
    if (!(ev.length > 0.0)) throw config_error(path + ".length_m", "must be > 0");
    if (ev.route.empty()) throw config_error(path + ".route", "must not be empty");
    for (std::size_t r = 0; r < ev.route.size(); ++r) {
      const auto* x = find_x(ev.route[r].intersection);
      if (x == nullptr) {
        throw config_error(fmt::format("{}.route[{}].intersection", path, r),
                           "unknown intersection " + ev.route[r].intersection);
      }
      if (x->find_leg(ev.route[r].leg) == nullptr) {
        throw config_error(fmt::format("{}.route[{}].leg", path, r),
                           "unknown leg " + ev.route[r].leg);
      }
    }
    if (ev.distance) {
      const auto* x = find_x(ev.route.front().intersection);
      const double approach = x->find_leg(ev.route.front().leg)->approach_length;
      if (!(*ev.distance > 0.0 && *ev.distance <= approach)) {
        throw config_error(path + ".distance_m", "must lie in (0, approach_length_m]");
      }
    }
  }
  if (c.spawns.random) {
    const auto& r = *c.spawns.random;
    const auto* x = find_x(r.intersection);
    if (x == nullptr) {
      throw config_error("spawns.random.intersection", "unknown intersection " + r.intersection);
    }
    for (std::size_t i = 0; i < r.legs.size(); ++i) {
      if (x->find_leg(r.legs[i]) == nullptr) {
        throw config_error(fmt::format("spawns.random.legs[{}]", i), "unknown leg " + r.legs[i]);
      }
    }
    if (!(r.rate_per_leg > 0.0)) throw config_error("spawns.random.rate_per_leg_vps", "must be > 0");
    if (!(r.speed_min >= 0.0 && r.speed_max >= r.speed_min)) {
      throw config_error("spawns.random.speed_max_mps", "need 0 <= speed_min <= speed_max");
    }
    if (!(r.length > 0.0)) throw config_error("spawns.random.length_m", "must be > 0");
    if (!(r.min_headway >= 0.0)) throw config_error("spawns.random.min_headway_s", "must be >= 0");
  }
  if (!(c.spawns.min_spawn_gap >= 0.0)) throw config_error("spawns.min_spawn_gap_m", "must be >= 0");
  if (!(c.exit_length > 0.0)) throw config_error("exit_length_m", "must be > 0");
  if (!(c.full_stop_speed >= 0.0)) throw config_error("full_stop_speed_mps", "must be >= 0");
}

RunResult run(const ScenarioConfig& config, const RunHooks& hooks) {
  validate(config);
  Simulation sim(config, hooks);
  return sim.run();
}

std::vector<SweepRow> sweep_prediction_step(const ScenarioConfig& config,
                                            const std::vector<double>& steps) {
  std::vector<SweepRow> rows;
  rows.reserve(steps.size());
  for (double dt : steps) {
    ScenarioConfig c = config;
    c.estimator.prediction_step = dt;
    SweepRow row;
    row.prediction_step = dt;
    row.result = run(c);
    row.max_abs_pos_err = row.result.summary.max_abs_pos_err;
    row.rms_pos_err = row.result.summary.rms_pos_err;
    row.mean_step_wallclock_ms = row.result.summary.mean_step_wallclock_ms;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace cavsim
