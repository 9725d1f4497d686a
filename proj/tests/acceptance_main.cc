// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "cavsim/config.h"
#include "cavsim/engine.h"
#include "cavsim/estimation.h"
#include "cavsim/network.h"
#include "cavsim/output.h"

namespace cavsim {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

ScenarioConfig Scenario(const std::string& name) {
  return load_config(std::string(CAVSIM_SCENARIO_DIR) + "/" + name + ".json");
}

ScenarioConfig PerfectComms(ScenarioConfig c) {
  c.channel.delay_mean = 0.0;
  c.channel.delay_std = 0.0;
  c.channel.loss_prob = 0.0;
  c.channel.nlos_windows.clear();
  return c;
}

std::string Csv(const RunResult& r) {
  std::ostringstream out;
  write_trajectory_csv(out, r.trajectory);
  return out.str();
}

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

// Two vehicles on different legs, target ahead by `gap` metres front to front.
ScenarioConfig TwoVehicle(double lead_speed, double ego_speed, double gap) {
  auto c = PerfectComms(Scenario("two_vehicle"));
  c.spawns.events = {{0.0, {{"X0", "north"}}, lead_speed, 4.5, 950.0},
                     {0.0, {{"X0", "east"}}, ego_speed, 4.5, 950.0 + gap}};
  return c;
}

// 1. One-step-ahead follower estimate equals next-step plant state.
Outcome PerfectCommunicationExactness() {
  const auto start = Clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> lead_speed(8.0, 13.0);
  std::uniform_real_distribution<double> speed_offset(-2.0, 2.0);
  std::uniform_real_distribution<double> gap_error(-3.0, 6.0);
  constexpr int kTrials = 40;
  double worst = 0.0;
  std::size_t compared = 0;
  std::size_t saturated = 0;
  for (int trial = 0; trial < kTrials; ++trial) {
    const double vj = lead_speed(rng);
    const double vi = vj + speed_offset(rng);
    auto c = TwoVehicle(vj, vi, 4.5 + vi * 1.5 + gap_error(rng));
    c.engine.sim_step = 0.1;
    c.estimator.prediction_step = 0.1;
    c.engine.duration = 20.0;
    std::map<std::size_t, SpeedPosition> predicted;
    std::map<std::size_t, SpeedPosition> truth;
    std::map<std::size_t, bool> unsaturated;
    RunHooks hooks;
    hooks.on_estimate = [&](const EstimateEvent& e) {
      if (e.id.value == 1) predicted[e.step] = {e.estimate.speed_at(1), e.estimate.position_at(1)};
    };
    hooks.on_control = [&](const ControlEvent& e) {
      if (e.id.value != 1) return;
      truth[e.step] = {e.own.speed, e.own.position};
      const double next_speed = e.own.speed + e.accel_cmd * c.engine.sim_step;
      unsaturated[e.step] = e.accel_cmd > -c.dynamics.decel_max &&
                            e.accel_cmd < c.dynamics.accel_max && next_speed > 0.0 &&
                            next_speed < c.dynamics.speed_max;
    };
    run(c, hooks);
    for (const auto& [s, p] : predicted) {
      const auto next = truth.find(s + 1);
      if (next == truth.end()) continue;
      if (!unsaturated[s]) {
        ++saturated;
        continue;
      }
      worst = std::max({worst, std::abs(p.speed - next->second.speed),
                        std::abs(p.position - next->second.position)});
      ++compared;
    }
  }
  const double elapsed = Seconds(start);
  const bool pass = compared > 0 && worst <= 1e-9 && elapsed < 1.0;
  return {pass, fmt::format("max |estimate - plant| = {:.3g} over {} steps ({} saturated steps "
                            "skipped), {} runs in {:.3f} s (limits 1e-9, 1 s)",
                            worst, compared, saturated, kTrials, elapsed)};
}

// 2. Error cap over at least 20 seeds.
Outcome ErrorCap() {
  const auto start = Clock::now();
  const auto base = Scenario("chain5");
  std::vector<double> per_seed;
  for (std::uint64_t seed = 1; seed <= 21; ++seed) {
    auto c = base;
    c.engine.seed = seed;
    per_seed.push_back(run(c).summary.max_abs_pos_err);
  }
  const double elapsed = Seconds(start);
  std::sort(per_seed.begin(), per_seed.end());
  const double worst = per_seed.back();
  const double median = per_seed[per_seed.size() / 2];
  const bool pass = worst <= 0.5 && median <= 0.25 && elapsed < 30.0;
  return {pass, fmt::format("{} seeds: max {:.4f} m (limit 0.5), median {:.4f} m (limit 0.25), "
                            "{:.2f} s (limit 30 s)",
                            per_seed.size(), worst, median, elapsed)};
}

// 3. Max error strictly increasing in the prediction step.
Outcome ErrorMonotonicity() {
  const auto start = Clock::now();
  const auto rows = sweep_prediction_step(Scenario("chain5"), {0.01, 0.1, 0.5, 1.0});
  const double elapsed = Seconds(start);
  bool increasing = true;
  std::string values;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    values += fmt::format("{}{} s: {:.4f}", i ? ", " : "", rows[i].prediction_step,
                          rows[i].max_abs_pos_err);
    if (i > 0 && !(rows[i].max_abs_pos_err > rows[i - 1].max_abs_pos_err)) increasing = false;
  }
  const double at_one = rows.back().max_abs_pos_err;
  const bool in_band = at_one >= 2.0 && at_one <= 10.0;
  const bool pass = increasing && in_band && elapsed < 60.0;
  return {pass, fmt::format("max error [{}] m; strictly increasing={}, 1.0 s value in [2, 10]={}, "
                            "{:.2f} s (limit 60 s)",
                            values, increasing, in_band, elapsed)};
}

// 4. Control input replays the last received estimate under total loss.
Outcome EstimateHold() {
  const auto c = Scenario("total_loss");
  const double outage_start = c.channel.nlos_windows.front().start;
  const ControlGains gains = c.control.gain_table.entries.front();
  std::size_t traced = 0, held = 0, mismatches = 0, late_live = 0;
  std::optional<SimTime> held_send_time;
  RunHooks hooks;
  hooks.on_control = [&](const ControlEvent& e) {
    if (e.id.value != 1 || e.target_motion == nullptr || e.time < outage_start) return;
    const auto& m = *e.target_motion;
    const auto& beacon = *e.estimator.last_target_beacon;
    if (consensus_accel(e.own, m.view, gains) != e.accel_cmd) ++mismatches;
    if (m.live) {
      // Beacons sent just before the outage may still be in flight.
      if (beacon.send_time >= outage_start) ++late_live;
      held_send_time.reset();
      return;
    }
    if (held_send_time && *held_send_time != beacon.send_time) ++mismatches;
    held_send_time = beacon.send_time;
    const auto& est = beacon.estimate;
    if (!beyond_horizon(est, e.time)) {
      const auto sample = lerp_trajectory(est, e.time);
      if (sample.speed != m.view.speed || sample.position != m.view.position ||
          m.horizon_exhausted) {
        ++mismatches;
      }
      ++traced;
    } else {
      const double v_end = est.speed_at(est.horizon());
      if (m.view.speed != v_end || !m.horizon_exhausted) ++mismatches;
      ++held;
    }
  };
  run(c, hooks);
  const bool pass = traced > 0 && held > 0 && mismatches == 0 && late_live == 0;
  return {pass, fmt::format("{} steps traced the held estimate bitwise, {} steps held the final "
                            "speed with the flag set, {} mismatches, {} live views from "
                            "post-outage beacons",
                            traced, held, mismatches, late_live)};
}

// 5. Closed-loop convergence of speed and spacing under perfect comms.
Outcome ConsensusConvergence() {
  const double tg = 1.5, l = 4.5, lead = 10.0;
  double worst_dv = 0.0, worst_gap = 0.0;
  std::size_t cases = 0, skipped = 0;
  for (double gap_error : {-10.0, -5.0, 0.0, 5.0, 10.0, 20.0}) {
    for (double dv : {-5.0, -2.5, 0.0, 2.5, 5.0}) {
      const double vi = lead + dv;
      const double gap = l + vi * tg + gap_error;
      if (gap - l < 2.0) {
        ++skipped;  // bumpers would overlap at spawn
        continue;
      }
      auto c = TwoVehicle(lead, vi, gap);
      c.engine.sim_step = 0.01;
      c.estimator.prediction_step = 0.01;
      c.engine.duration = 60.0 + c.engine.sim_step;
      c.engine.record_every = 100;
      const auto r = run(c);
      const TrajectoryRow* rj = nullptr;
      const TrajectoryRow* ri = nullptr;
      for (const auto& row : r.trajectory) {
        if (std::abs(row.time - 60.0) > 1e-6) continue;
        (row.id.value == 0 ? rj : ri) = &row;
      }
      if (rj == nullptr || ri == nullptr) return {false, "missing rows at t = 60 s"};
      worst_dv = std::max(worst_dv, std::abs(ri->speed - rj->speed));
      const double spacing = rj->virtual_position - ri->virtual_position;
      worst_gap = std::max(worst_gap, std::abs(spacing - (l + ri->speed * tg)));
      ++cases;
    }
  }
  const bool pass = worst_dv < 0.05 && worst_gap < 0.1;
  return {pass, fmt::format("{} initial conditions (gap error -10..+20 m, speed error +-5 m/s; {} "
                            "with overlapping bumpers skipped): max |dv| {:.2e} m/s (limit "
                            "0.05), max spacing error {:.2e} m (limit 0.1) at 60 s",
                            cases, skipped, worst_dv, worst_gap)};
}

// 6. Free-road leader law invariants.
Outcome LeaderInvariants() {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> target(5.0, 30.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::vector<double> steps{0.01, 0.05, 0.1};
  std::size_t violations = 0;
  double worst_fixed = 0.0;
  for (int i = 0; i < 1000; ++i) {
    EstimatorParams p;
    p.v_target = target(rng);
    p.prediction_step = steps[i % steps.size()];
    p.horizon_len = 200;
    const double v_now = 1.5 * p.v_target * unit(rng);
    const auto speeds = predict_leader_speed(p, v_now);
    double prev = v_now;
    for (double v : speeds) {
      const bool below = prev < p.v_target;
      const bool toward = below ? (v >= prev && v <= p.v_target) : (v <= prev && v >= p.v_target);
      const bool bounded = !below || v - prev <= p.a_max * p.prediction_step + 1e-15;
      if (!toward || !bounded) ++violations;
      prev = v;
    }
    for (double v : predict_leader_speed(p, p.v_target)) {
      worst_fixed = std::max(worst_fixed, std::abs(v - p.v_target));
    }
  }
  const bool pass = violations == 0 && worst_fixed <= 1e-12;
  return {pass, fmt::format("1000 (v_now, v_target) pairs, v_now in [0, 1.5 v_target], steps "
                            "0.01/0.05/0.1 s: {} monotonicity or rate violations, fixed point "
                            "drift {:.1e} (limit 1e-12)",
                            violations, worst_fixed)};
}

// 7. Channel statistics against their configured distributions.
Outcome ChannelStatistics() {
  ChannelModel m;  // defaults: Normal(0.040, 0.0259) clamped at 0, loss 0.1
  LinkStream stream(77, VehicleId{0}, VehicleId{1});
  constexpr int kSamples = 100000;
  std::size_t dropped = 0;
  double sum = 0.0, sum_sq = 0.0;
  std::size_t delivered = 0;
  for (int i = 0; i < kSamples; ++i) {
    const double t = i * 0.01;
    const auto at = transmit(m, Beacon{VehicleId{0}, t, {}, {}}, t, stream);
    if (!at) {
      ++dropped;
      continue;
    }
    const double d = *at - t;
    sum += d;
    sum_sq += d * d;
    ++delivered;
  }
  // Mean of max(0, X) for X ~ Normal(mu, sigma).
  const double mu = m.delay_mean, sigma = m.delay_std;
  const double z = mu / sigma;
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double expected_mean = mu * cdf + sigma * pdf;
  const double n = static_cast<double>(delivered);
  const double mean = sum / n;
  const double sd = std::sqrt(std::max(0.0, sum_sq / n - mean * mean));
  const double se_mean = sd / std::sqrt(n);
  const double drop_rate = static_cast<double>(dropped) / kSamples;
  const double se_drop = std::sqrt(m.loss_prob * (1.0 - m.loss_prob) / kSamples);

  ChannelModel blocked;
  blocked.loss_prob = 0.0;
  blocked.nlos_windows = {{4.0, 6.0}, {6.0, 8.0}};
  LinkStream s2(78, VehicleId{0}, VehicleId{1});
  std::size_t nlos_sent = 0, nlos_dropped = 0;
  for (int i = 0; i < kSamples; ++i) {
    const double t = 4.0 + 4.0 * i / kSamples;
    ++nlos_sent;
    if (!transmit(blocked, Beacon{VehicleId{0}, t, {}, {}}, t, s2)) ++nlos_dropped;
  }

  const bool mean_ok = std::abs(mean - expected_mean) <= 3.0 * se_mean;
  const bool drop_ok = std::abs(drop_rate - m.loss_prob) <= 3.0 * se_drop;
  const bool nlos_ok = nlos_dropped == nlos_sent;
  return {mean_ok && drop_ok && nlos_ok,
          fmt::format("mean delay {:.5f} s vs {:.5f} s (3 SE = {:.5f}); drop rate {:.4f} vs {:.2f} "
                      "(3 SE = {:.4f}); NLOS dropped {}/{}",
                      mean, expected_mean, 3.0 * se_mean, drop_rate, m.loss_prob, 3.0 * se_drop,
                      nlos_dropped, nlos_sent)};
}

// 8. No collisions or full stops in a mixed-leg 20-vehicle run.
Outcome ScenarioSafety() {
  const auto r = run(Scenario("nominal20"));
  const auto& s = r.summary;
  const bool pass = s.vehicles_spawned == 20 && s.rear_end_count == 0 &&
                    s.conflict_zone_count == 0 && s.full_stop_count == 0;
  double min_speed = 1e9;
  for (const auto& v : s.vehicles) {
    if (v.min_speed_in_zone) min_speed = std::min(min_speed, *v.min_speed_in_zone);
  }
  return {pass, fmt::format("{} spawned, {} crossed; rear-end {}, conflict-zone {}, full stops {}, "
                            "min in-zone speed {:.2f} m/s",
                            s.vehicles_spawned, s.vehicles_crossed, s.rear_end_count,
                            s.conflict_zone_count, s.full_stop_count, min_speed)};
}

// 9. Byte-identical trajectories for repeated runs.
Outcome Determinism() {
  std::vector<std::pair<std::string, ScenarioConfig>> runs;
  runs.emplace_back("chain5", Scenario("chain5"));
  auto coarse = Scenario("chain5");
  coarse.estimator.prediction_step = 1.0;
  runs.emplace_back("chain5 step 1.0", coarse);
  runs.emplace_back("total_loss", Scenario("total_loss"));
  runs.emplace_back("nominal20", Scenario("nominal20"));
  runs.emplace_back("two_vehicle", Scenario("two_vehicle"));
  std::string differing;
  for (const auto& [name, c] : runs) {
    if (Csv(run(c)) != Csv(run(c))) differing += " " + name;
  }
  return {differing.empty(),
          differing.empty() ? fmt::format("{} scenarios repeated byte-identically", runs.size())
                            : "differing:" + differing};
}

// Mean step cost rises as the prediction step shrinks. Each round visits
// every step size, alternating direction so slow machine drift and ordering
// effects hit all of them alike. Runs at coarse steps are short, so they are
// repeated more often within a round. The per-step-size median is compared.
Outcome WallClockTrend() {
  const std::vector<double> steps{1.0, 0.5, 0.1, 0.01};
  const std::vector<int> runs_per_round{6, 6, 6, 1};
  constexpr int kRounds = 15;
  const auto base = Scenario("nominal20");
  std::vector<std::vector<double>> samples(steps.size());
  for (int round = 0; round < kRounds; ++round) {
    for (int r = 0; r < 6; ++r) {
      for (std::size_t j = 0; j < steps.size(); ++j) {
        const std::size_t i = (round + r) % 2 == 0 ? j : steps.size() - 1 - j;
        if (r >= runs_per_round[i]) continue;
        auto c = base;
        c.estimator.prediction_step = steps[i];
        samples[i].push_back(run(c).summary.mean_step_wallclock_ms);
      }
    }
  }
  bool increasing = true;
  std::string values;
  double previous = 0.0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    auto& v = samples[i];
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    const double median = v[v.size() / 2];
    values += fmt::format("{}{} s: {:.5f}", i ? ", " : "", steps[i], median);
    if (i > 0 && !(median > previous)) increasing = false;
    previous = median;
  }
  return {increasing, fmt::format("nominal20, {} interleaved rounds, median mean step cost [{}] "
                                  "ms; strictly increasing as the step shrinks={}",
                                  kRounds, values, increasing)};
}

}  // namespace
}  // namespace cavsim

int main() {
  using namespace cavsim;
  struct Entry {
    const char* name;
    Outcome (*fn)();
  };
  const Entry criteria[] = {
      {"1 perfect-communication exactness", PerfectCommunicationExactness},
      {"2 error cap over seeds", ErrorCap},
      {"3 error monotonicity in prediction step", ErrorMonotonicity},
      {"4 estimate hold under total loss", EstimateHold},
      {"5 consensus convergence", ConsensusConvergence},
      {"6 free-road leader invariants", LeaderInvariants},
      {"7 channel statistics", ChannelStatistics},
      {"8 scenario safety", ScenarioSafety},
      {"9 determinism", Determinism},
      {"wall-clock trend", WallClockTrend},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
