#include <string>

#include <benchmark/benchmark.h>

#include "cavsim/config.h"
#include "cavsim/engine.h"

namespace cavsim {
namespace {

// Full nominal20 run at a prediction step of range(0) milliseconds. The
// step_us counter is the engine's own mean per-step wall-clock cost.
void BM_RunNominal20(benchmark::State& state) {
  auto config = load_config(std::string(CAVSIM_SCENARIO_DIR) + "/nominal20.json");
  config.estimator.prediction_step = static_cast<double>(state.range(0)) / 1000.0;
  double step_ms = 0.0;
  for (auto _ : state) {
    const auto result = run(config);
    step_ms = result.summary.mean_step_wallclock_ms;
    benchmark::DoNotOptimize(result.summary.max_abs_pos_err);
  }
  state.counters["step_us"] = step_ms * 1000.0;
}
BENCHMARK(BM_RunNominal20)->Arg(1000)->Arg(500)->Arg(100)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace cavsim
