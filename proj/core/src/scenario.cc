#include "cavsim/scenario.h"

#include <algorithm>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

namespace cavsim {

const LegSpec* IntersectionSpec::find_leg(const std::string& leg) const {
  for (const auto& l : legs) {
    if (l.id == leg) return &l;
  }
  return nullptr;
}

std::string IntersectionSpec::validate() const {
  if (legs.empty()) return "at least one leg is required";
  if (!(control_zone_radius > 0.0)) return "control_zone_radius_m must be > 0";
  if (!(conflict_zone_length > 0.0)) return "conflict_zone_m must be > 0";
  for (std::size_t i = 0; i < legs.size(); ++i) {
    if (legs[i].approach_length < control_zone_radius) {
      return fmt::format("legs[{}]: approach_length_m must be >= control_zone_radius_m", i);
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (legs[j].id == legs[i].id) return fmt::format("legs[{}]: duplicate id '{}'", i, legs[i].id);
    }
  }
  return {};
}

double project_to_virtual_lane(double distance_to_crossing, const IntersectionSpec& spec) {
  return spec.virtual_crossing - distance_to_crossing;
}

std::vector<SpawnEvent> expand_spawn_plan(const SpawnPlan& plan,
                                          std::span<const IntersectionSpec> intersections,
                                          std::uint64_t seed) {
  std::vector<SpawnEvent> events = plan.events;

  if (plan.random) {
    const auto& spec = *plan.random;
    const auto it = std::find_if(intersections.begin(), intersections.end(),
                                 [&](const IntersectionSpec& x) { return x.id == spec.intersection; });
    if (it == intersections.end()) {
      throw std::invalid_argument("random spawn: unknown intersection " + spec.intersection);
    }
    std::vector<std::string> legs = spec.legs;
    if (legs.empty()) {
      for (const auto& l : it->legs) legs.push_back(l.id);
    }

    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      0x59a7u};
    std::mt19937_64 rng(seq);
    std::exponential_distribution<double> gap(spec.rate_per_leg);
    std::uniform_real_distribution<double> speed(spec.speed_min, spec.speed_max);

    std::vector<SpawnEvent> drawn;
    for (const auto& leg : legs) {
      double t = gap(rng);
      while (t < spec.until) {
        SpawnEvent ev;
        ev.time = t;
        ev.route = {{spec.intersection, leg}};
        ev.speed = speed(rng);
        ev.length = spec.length;
        drawn.push_back(std::move(ev));
        t += gap(rng);
      }
    }
    std::stable_sort(drawn.begin(), drawn.end(),
                     [](const SpawnEvent& a, const SpawnEvent& b) { return a.time < b.time; });
    double last = -spec.min_headway;
    std::size_t kept = 0;
    for (auto& ev : drawn) {
      if (spec.max_vehicles != 0 && kept == spec.max_vehicles) break;
      ev.time = std::max(ev.time, last + spec.min_headway);
      if (ev.time >= spec.until) break;
      last = ev.time;
      events.push_back(std::move(ev));
      ++kept;
    }
  }

  const auto distance_of = [&](const SpawnEvent& ev) {
    if (ev.distance) return *ev.distance;
    for (const auto& x : intersections) {
      if (x.id != ev.route.front().intersection) continue;
      if (const auto* leg = x.find_leg(ev.route.front().leg)) return leg->approach_length;
    }
    return 0.0;
  };
  std::stable_sort(events.begin(), events.end(), [&](const SpawnEvent& a, const SpawnEvent& b) {
    if (a.time != b.time) return a.time < b.time;
    return distance_of(a) < distance_of(b);
  });
  return events;
}

void CrossingSequence::admit(VehicleId id, SimTime entry_time) {
  if (contains(id)) return;
  const CrossingEntry entry{id, entry_time};
  const auto pos = std::upper_bound(
      entries_.begin(), entries_.end(), entry, [](const CrossingEntry& a, const CrossingEntry& b) {
        if (a.entry_time != b.entry_time) return a.entry_time < b.entry_time;
        return a.id < b.id;
      });
  entries_.insert(pos, entry);
}

void CrossingSequence::remove(VehicleId id) {
  std::erase_if(entries_, [id](const CrossingEntry& e) { return e.id == id; });
}

bool CrossingSequence::contains(VehicleId id) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [id](const CrossingEntry& e) { return e.id == id; });
}

std::vector<VehicleId> CrossingSequence::order() const {
  std::vector<VehicleId> ids;
  ids.reserve(entries_.size());
  for (const auto& e : entries_) ids.push_back(e.id);
  return ids;
}

std::map<VehicleId, VehicleId> assign_targets(const CrossingSequence& sequence) {
  std::map<VehicleId, VehicleId> targets;
  const auto& e = sequence.entries();
  for (std::size_t i = 1; i < e.size(); ++i) targets.emplace(e[i].id, e[i - 1].id);
  return targets;
}

std::string to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kRearEnd:
      return "rear_end";
    case ViolationKind::kConflictZone:
      return "conflict_zone";
  }
  return "unknown";
}

std::vector<Violation> safety_check(std::span<const std::pair<VehicleId, VehicleState>> states,
                                    const IntersectionSpec& spec) {
  std::vector<Violation> out;

  std::vector<const std::pair<VehicleId, VehicleState>*> sorted;
  sorted.reserve(states.size());
  for (const auto& s : states) sorted.push_back(&s);
  std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
    if (a->second.leg != b->second.leg) return a->second.leg < b->second.leg;
    return a->second.position > b->second.position;
  });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    const auto& lead = *sorted[i - 1];
    const auto& follow = *sorted[i];
    if (lead.second.leg != follow.second.leg) continue;
    const double gap = lead.second.position - lead.second.length - follow.second.position;
    if (gap < 0.0) {
      out.push_back({ViolationKind::kRearEnd, lead.first, follow.first, 0.0, spec.id});
    }
  }

  const double lo = spec.virtual_crossing - 0.5 * spec.conflict_zone_length;
  const double hi = spec.virtual_crossing + 0.5 * spec.conflict_zone_length;
  std::vector<const std::pair<VehicleId, VehicleState>*> inside;
  for (const auto& s : states) {
    if (s.second.position > lo && s.second.position - s.second.length < hi) inside.push_back(&s);
  }
  for (std::size_t i = 0; i < inside.size(); ++i) {
    for (std::size_t j = i + 1; j < inside.size(); ++j) {
      if (inside[i]->second.leg == inside[j]->second.leg) continue;
      const auto [a, b] = std::minmax(inside[i]->first, inside[j]->first);
      out.push_back({ViolationKind::kConflictZone, a, b, 0.0, spec.id});
    }
  }
  return out;
}

}  // namespace cavsim
