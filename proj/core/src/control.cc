#include "cavsim/control.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "cavsim/errors.h"

namespace cavsim {
namespace {

struct BucketIndex {
  std::size_t index = 0;
  bool clamped = false;
};

BucketIndex locate(const BucketAxis& axis, double value) {
  const auto& e = axis.edges;
  if (value < e.front()) return {0, true};
  if (!(value < e.back())) return {axis.buckets() - 1, true};
  // First edge strictly greater than value closes the containing bucket.
  const auto it = std::upper_bound(e.begin(), e.end(), value);
  return {static_cast<std::size_t>(it - e.begin()) - 1, false};
}

std::string check_axis(const BucketAxis& axis, const char* name) {
  if (axis.edges.size() < 2) return fmt::format("{}: need at least two edges", name);
  for (std::size_t i = 1; i < axis.edges.size(); ++i) {
    if (!(axis.edges[i] > axis.edges[i - 1])) {
      return fmt::format("{}: edges must be strictly increasing", name);
    }
  }
  return {};
}

}  // namespace

double consensus_accel(double ego_position, double ego_speed, double target_position,
                       double target_speed, double target_length, double time_gap,
                       const ControlGains& gains) {
  const double spacing_error =
      ego_position - target_position + target_length + ego_speed * time_gap;
  const double accel =
      -gains.alpha * gains.k * (spacing_error + gains.gamma * (ego_speed - target_speed));
  if (!std::isfinite(accel)) {
    throw NumericFault(fmt::format(
        "consensus_accel: non-finite result (r_i={}, v_i={}, r_j={}, v_j={})", ego_position,
        ego_speed, target_position, target_speed));
  }
  return accel;
}

double consensus_accel(const VehicleState& ego, const TargetView& target,
                       const ControlGains& gains) {
  return consensus_accel(ego.position, ego.speed, target.position, target.speed,
                         target.length, target.time_gap, gains);
}

GainTable GainTable::uniform(const ControlGains& gains) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  GainTable table;
  table.ego_speed.edges = {0.0, kInf};
  table.target_speed.edges = {0.0, kInf};
  table.headway.edges = {-kInf, kInf};
  table.entries = {gains};
  return table;
}

std::string GainTable::validate() const {
  for (auto msg : {check_axis(ego_speed, "ego_speed"), check_axis(target_speed, "target_speed"),
                   check_axis(headway, "headway")}) {
    if (!msg.empty()) return msg;
  }
  const std::size_t expected = ego_speed.buckets() * target_speed.buckets() * headway.buckets();
  if (entries.size() != expected) {
    return fmt::format("gains: expected {} entries, got {}", expected, entries.size());
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!entries[i].valid()) return fmt::format("gains[{}]: need k > 0 and gamma >= 0", i);
  }
  return {};
}

GainLookup lookup_gains(const GainTable& table, double ego_speed0, double target_speed0,
                        double headway0) {
  const auto bi = locate(table.ego_speed, ego_speed0);
  const auto bj = locate(table.target_speed, target_speed0);
  const auto bh = locate(table.headway, headway0);
  const std::size_t flat =
      (bi.index * table.target_speed.buckets() + bj.index) * table.headway.buckets() +
      bh.index;
  return {table.entries.at(flat), bi.clamped || bj.clamped || bh.clamped};
}

}  // namespace cavsim
