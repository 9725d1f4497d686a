#include "cavsim/output.h"

#include <cstdlib>
#include <fstream>

#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cavsim/errors.h"

namespace cavsim {
namespace {

std::string fixed(double v) { return fmt::format("{:.6f}", v); }

std::string optional_fixed(const std::optional<double>& v) { return v ? fixed(*v) : std::string(); }

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SimError("cannot write " + path.string());
  return out;
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRow>& rows) {
  out << "time_s,vehicle_id,leg,virtual_pos_m,speed_mps,accel_mps2,est_target_pos_m,"
         "pos_est_err_m,link_up\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{},{},{},{},{},{}\n", fixed(r.time), r.id.value, r.leg,
                       fixed(r.virtual_position), fixed(r.speed), fixed(r.acceleration),
                       optional_fixed(r.est_target_position), optional_fixed(r.position_error),
                       r.link_up ? 1 : 0);
  }
}

void write_metrics_csv(std::ostream& out, const std::vector<FollowerSample>& samples) {
  out << "time_s,vehicle_id,target_id,pos_est_err_m,speed_est_err_mps,link_up,horizon_exhausted\n";
  for (const auto& s : samples) {
    out << fmt::format("{},{},{},{},{},{},{}\n", fixed(s.time), s.id.value, s.target.value,
                       fixed(s.position_error), fixed(s.speed_error), s.link_up ? 1 : 0,
                       s.horizon_exhausted ? 1 : 0);
  }
}

nlohmann::json summary_json(const RunResult& result) {
  const auto& m = result.summary;
  nlohmann::json vehicles = nlohmann::json::array();
  for (const auto& v : m.vehicles) {
    nlohmann::json j = {{"vehicle_id", v.id.value},
                        {"spawn_leg", v.spawn_leg},
                        {"spawn_time_s", v.spawn_time},
                        {"cross_time_s", nullptr},
                        {"max_abs_pos_err_m", v.max_abs_pos_err},
                        {"rms_pos_err_m", v.rms_pos_err},
                        {"error_samples", v.error_samples},
                        {"min_speed_in_zone_mps", nullptr},
                        {"full_stop", v.full_stop},
                        {"horizon_exhausted_steps", v.horizon_exhausted_steps}};
    if (v.cross_time) j["cross_time_s"] = *v.cross_time;
    if (v.min_speed_in_zone) j["min_speed_in_zone_mps"] = *v.min_speed_in_zone;
    vehicles.push_back(std::move(j));
  }
  nlohmann::json violations = nlohmann::json::array();
  for (const auto& v : result.violations) {
    violations.push_back({{"kind", to_string(v.kind)},
                          {"time_s", v.time},
                          {"first", v.first.value},
                          {"second", v.second.value},
                          {"intersection", v.intersection}});
  }
  return {{"max_abs_pos_err_m", m.max_abs_pos_err},
          {"rms_pos_err_m", m.rms_pos_err},
          {"error_samples", m.error_samples},
          {"violation_count", m.violation_count},
          {"rear_end_count", m.rear_end_count},
          {"conflict_zone_count", m.conflict_zone_count},
          {"full_stop_count", m.full_stop_count},
          {"horizon_exhausted_steps", m.horizon_exhausted_steps},
          {"steps", m.steps},
          {"mean_step_wallclock_ms", m.mean_step_wallclock_ms},
          {"max_step_wallclock_ms", m.max_step_wallclock_ms},
          {"vehicles_spawned", m.vehicles_spawned},
          {"vehicles_crossed", m.vehicles_crossed},
          {"channel",
           {{"sent", m.channel.sent},
            {"dropped_nlos", m.channel.dropped_nlos},
            {"dropped_random", m.channel.dropped_random},
            {"delivered", m.channel.delivered}}},
          {"warnings", m.warnings},
          {"violations", violations},
          {"vehicles", vehicles}};
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "prediction_step_s,max_abs_pos_err_m,rms_pos_err_m,mean_step_wallclock_ms\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{}\n", fixed(r.prediction_step), fixed(r.max_abs_pos_err),
                       fixed(r.rms_pos_err), fixed(r.mean_step_wallclock_ms));
  }
}

void write_run(const std::filesystem::path& dir, const RunResult& result) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_for_write(dir / "trajectory.csv");
    write_trajectory_csv(out, result.trajectory);
  }
  {
    auto out = open_for_write(dir / "metrics.csv");
    write_metrics_csv(out, result.samples);
  }
  auto out = open_for_write(dir / "summary.json");
  out << summary_json(result).dump(2) << '\n';
}

std::string sweep_dir_name(double prediction_step) { return "dt_" + fixed(prediction_step); }

bool set_log_level(std::string_view level) {
  if (level == "off") {
    spdlog::set_level(spdlog::level::off);
  } else if (level == "info") {
    spdlog::set_level(spdlog::level::info);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    return false;
  }
  return true;
}

void configure_logging_from_env() {
  const char* env = std::getenv("CAVSIM_LOG");
  auto logger = spdlog::get("cavsim");
  if (!logger) logger = spdlog::stderr_color_st("cavsim");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  if (env == nullptr || !set_log_level(env)) {
    if (env != nullptr) spdlog::warn("CAVSIM_LOG='{}' is not one of off|info|debug", env);
    set_log_level("off");
  }
}

}  // namespace cavsim
