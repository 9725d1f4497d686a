#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cavsim/types.h"

namespace cavsim {

struct LegSpec {
  std::string id;
  double approach_length = 200.0;  // m from spawn point to the crossing point
};

// One unsignalized intersection. Every leg maps onto a shared virtual lane
// on which the crossing point sits at `virtual_crossing`.
struct IntersectionSpec {
  std::string id = "X0";
  std::vector<LegSpec> legs;
  double virtual_crossing = 1000.0;     // m
  double control_zone_radius = 150.0;   // m
  double conflict_zone_length = 12.0;   // m, centred on the crossing point

  const LegSpec* find_leg(const std::string& leg) const;
  std::string validate() const;
};

// Virtual-lane coordinate of a vehicle `distance_to_crossing` metres short
// of the crossing point. Leg-blind by construction.
double project_to_virtual_lane(double distance_to_crossing, const IntersectionSpec& spec);

inline double distance_to_crossing(double virtual_position, const IntersectionSpec& spec) {
  return spec.virtual_crossing - virtual_position;
}

struct RouteStep {
  std::string intersection;
  std::string leg;
};

struct SpawnEvent {
  double time = 0.0;
  std::vector<RouteStep> route;     // first entry is where the vehicle appears
  double speed = 10.0;              // m/s
  double length = 4.5;              // m
  std::optional<double> distance;   // m to the crossing; defaults to the approach length
};

// Poisson arrivals on every listed leg of one intersection.
struct RandomSpawnSpec {
  std::string intersection;
  std::vector<std::string> legs;  // empty selects every leg
  double rate_per_leg = 0.1;      // vehicles per second per leg
  double speed_min = 10.0;
  double speed_max = 12.0;
  double length = 4.5;
  double min_headway = 2.0;       // s between consecutive spawns across all legs
  double until = 60.0;            // s
  std::size_t max_vehicles = 0;   // 0 = unlimited
};

struct SpawnPlan {
  std::vector<SpawnEvent> events;
  std::optional<RandomSpawnSpec> random;
  double min_spawn_gap = 2.0;  // m, bumper gap required behind a same-leg vehicle
};

// Explicit events plus the random generator's draws, ordered by time and
// then by distance to the crossing (nearer first).
std::vector<SpawnEvent> expand_spawn_plan(const SpawnPlan& plan,
                                          std::span<const IntersectionSpec> intersections,
                                          std::uint64_t seed);

struct CrossingEntry {
  VehicleId id;
  SimTime entry_time = 0.0;
};

// First-come-first-served crossing order: control-zone entry time, ties
// broken by id.
class CrossingSequence {
 public:
  void admit(VehicleId id, SimTime entry_time);
  void remove(VehicleId id);
  bool contains(VehicleId id) const;

  const std::vector<CrossingEntry>& entries() const noexcept { return entries_; }
  std::vector<VehicleId> order() const;

 private:
  std::vector<CrossingEntry> entries_;
};

// Each vehicle targets its immediate predecessor; the head has no entry.
std::map<VehicleId, VehicleId> assign_targets(const CrossingSequence& sequence);

enum class ViolationKind { kRearEnd, kConflictZone };

struct Violation {
  ViolationKind kind;
  VehicleId first;   // leader (rear-end) or lower id (conflict zone)
  VehicleId second;
  SimTime time = 0.0;
  std::string intersection;
};

std::string to_string(ViolationKind kind);

// Rear-end overlap between consecutive same-leg vehicles and simultaneous
// occupancy of the conflict zone by vehicles from different legs. All
// positions must be on `spec`'s virtual lane.
std::vector<Violation> safety_check(std::span<const std::pair<VehicleId, VehicleState>> states,
                                    const IntersectionSpec& spec);

}  // namespace cavsim
