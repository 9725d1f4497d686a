#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cavsim/config.h"
#include "cavsim/engine.h"
#include "cavsim/errors.h"
#include "cavsim/output.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitOther = 1;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::string steps;
};

std::vector<double> parse_steps(const std::string& list) {
  std::vector<double> steps;
  std::size_t start = 0;
  while (start <= list.size()) {
    const auto comma = list.find(',', start);
    const auto item = list.substr(start, comma == std::string::npos ? std::string::npos
                                                                    : comma - start);
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (item.empty() || used != item.size()) {
      throw cavsim::ConfigError("--steps", "'" + item + "' is not a number");
    }
    steps.push_back(value);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (steps.empty()) throw cavsim::ConfigError("--steps", "empty list");
  return steps;
}

int cmd_run(const Options& o) {
  auto config = cavsim::load_config(o.config);
  if (o.seed) config.engine.seed = *o.seed;
  const auto result = cavsim::run(config);
  cavsim::write_run(o.out, result);
  std::cout << "max_abs_pos_err_m=" << result.summary.max_abs_pos_err
            << " violations=" << result.summary.violation_count
            << " full_stops=" << result.summary.full_stop_count << '\n';
  return kExitOk;
}

int cmd_sweep(const Options& o) {
  if (o.steps.empty()) throw cavsim::ConfigError("--steps", "empty list");
  const auto steps = parse_steps(o.steps);
  auto config = cavsim::load_config(o.config);
  if (o.seed) config.engine.seed = *o.seed;
  for (double dt : steps) {
    auto c = config;
    c.estimator.prediction_step = dt;
    cavsim::validate(c);
  }
  const auto rows = cavsim::sweep_prediction_step(config, steps);
  const std::filesystem::path out(o.out);
  std::filesystem::create_directories(out);
  for (const auto& row : rows) {
    cavsim::write_run(out / cavsim::sweep_dir_name(row.prediction_step), row.result);
  }
  std::ofstream csv(out / "sweep.csv", std::ios::binary);
  cavsim::write_sweep_csv(csv, rows);
  cavsim::write_sweep_csv(std::cout, rows);
  return kExitOk;
}

int cmd_validate(const Options& o) {
  const auto config = cavsim::load_config(o.config);
  std::cout << cavsim::to_json(config).dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  cavsim::configure_logging_from_env();

  CLI::App app{"Consensus-controlled intersection traffic simulator"};
  app.require_subcommand(1);
  Options o;

  auto* run = app.add_subcommand("run", "Run one scenario and write its artifacts");
  run->add_option("--config", o.config, "Scenario JSON file")->required();
  run->add_option("--seed", o.seed, "Override the scenario seed");
  run->add_option("--out", o.out, "Output directory");

  auto* sweep = app.add_subcommand("sweep", "Run one scenario per prediction step");
  sweep->add_option("--config", o.config, "Scenario JSON file")->required();
  sweep->add_option("--steps", o.steps, "Comma-separated prediction steps in seconds")
      ->required();
  sweep->add_option("--seed", o.seed, "Override the scenario seed");
  sweep->add_option("--out", o.out, "Output directory");

  auto* validate = app.add_subcommand("validate", "Check a scenario and print it resolved");
  validate->add_option("--config", o.config, "Scenario JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*run) return cmd_run(o);
    if (*sweep) return cmd_sweep(o);
    return cmd_validate(o);
  } catch (const cavsim::ConfigError& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const cavsim::NumericFault& e) {
    std::cerr << "numeric fault: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitOther;
  }
}
