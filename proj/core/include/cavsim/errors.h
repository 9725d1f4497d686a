#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace cavsim {

// Base of every error the simulator raises.
class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A non-finite value reached the plant or a control law.
class NumericFault : public SimError {
 public:
  using SimError::SimError;
};

// A trajectory query fell past the end of the prediction horizon.
class HorizonExhausted : public SimError {
 public:
  using SimError::SimError;
};

// A follower has neither a previous estimate nor a received beacon.
class ColdStart : public SimError {
 public:
  using SimError::SimError;
};

// Inconsistent or malformed scenario configuration. `path()` names the
// offending field, e.g. "channel.nlos_windows[1]".
class ConfigError : public SimError {
 public:
  ConfigError(std::string path, const std::string& message)
      : SimError(path.empty() ? message : path + ": " + message),
        path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace cavsim
