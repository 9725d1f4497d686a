#pragma once

#include <filesystem>
#include <ostream>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cavsim/engine.h"

namespace cavsim {

// Canonical text artifacts. Numbers use fixed six-decimal formatting so the
// files diff cleanly across runs.
void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRow>& rows);
void write_metrics_csv(std::ostream& out, const std::vector<FollowerSample>& samples);
nlohmann::json summary_json(const RunResult& result);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

// Writes trajectory.csv, metrics.csv and summary.json into `dir`, creating it.
void write_run(const std::filesystem::path& dir, const RunResult& result);

// Subdirectory name used for one prediction step in a sweep, e.g. "dt_0.100000".
std::string sweep_dir_name(double prediction_step);

// Applies a CAVSIM_LOG level ("off", "info" or "debug"); returns false for
// anything else, leaving the level untouched.
bool set_log_level(std::string_view level);

// Reads CAVSIM_LOG from the environment; unset means "off".
void configure_logging_from_env();

}  // namespace cavsim
