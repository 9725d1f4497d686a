#include <benchmark/benchmark.h>

#include "cavsim/estimation.h"

namespace cavsim {
namespace {

EstimatorParams Params(benchmark::State& state) {
  EstimatorParams params;
  params.horizon_len = static_cast<std::size_t>(state.range(0));
  return params;
}

VehicleState Vehicle(double position, double speed) {
  VehicleState v;
  v.position = position;
  v.speed = speed;
  v.leg = "north";
  return v;
}

void BM_EstimateLeader(benchmark::State& state) {
  const auto params = Params(state);
  const auto own = Vehicle(100.0, 11.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate_leader(own, 1.0, params));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EstimateLeader)->Arg(100)->Arg(500)->Arg(2000);

void BM_EstimateFollower(benchmark::State& state) {
  const auto params = Params(state);
  const Beacon beacon{VehicleId{0}, 1.0, Vehicle(100.0, 11.0),
                      estimate_leader(Vehicle(100.0, 11.0), 1.0, params)};
  const FollowerLink link{VehicleId{0}, ControlGains{}, 1.5};
  const auto own = Vehicle(70.0, 9.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate_follower(own, 1.04, beacon, link, params));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EstimateFollower)->Arg(100)->Arg(500)->Arg(2000);

void BM_TargetMotionHeld(benchmark::State& state) {
  const auto params = Params(state);
  EstimatorState est;
  est.accept({VehicleId{0}, 1.0, Vehicle(100.0, 11.0),
              estimate_leader(Vehicle(100.0, 11.0), 1.0, params)});
  est.link_up = false;
  const FollowerLink link{VehicleId{0}, ControlGains{}, 1.5};
  double t = 1.0;
  for (auto _ : state) {
    t = t < 2.0 ? t + 0.001 : 1.001;
    benchmark::DoNotOptimize(target_motion_for_control(est, link, t));
  }
}
BENCHMARK(BM_TargetMotionHeld)->Arg(500);

}  // namespace
}  // namespace cavsim
