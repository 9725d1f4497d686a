#include "cavsim/config.h"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "cavsim/errors.h"

namespace cavsim {
namespace {

using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Reads one JSON object, remembering which keys were consumed so that
// anything left over can be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_, "expected an object");
  }
  ObjectReader(const ObjectReader&) = delete;
  ObjectReader& operator=(const ObjectReader&) = delete;

  ~ObjectReader() noexcept(false) {
    if (std::uncaught_exceptions() == 0) finish();
  }

  std::string child(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  double number(const std::string& key, double fallback) {
    const json* v = find(key);
    if (v == nullptr) return fallback;
    if (!v->is_number()) throw ConfigError(child(key), "expected a number");
    const double d = v->get<double>();
    if (!std::isfinite(d)) throw ConfigError(child(key), "must be finite");
    return d;
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    const json* v = find(key);
    if (v == nullptr) return fallback;
    if (!v->is_number_integer() || (!v->is_number_unsigned() && v->get<std::int64_t>() < 0)) {
      throw ConfigError(child(key), "expected a non-negative integer");
    }
    return v->get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    const json* v = find(key);
    if (v == nullptr) return fallback;
    if (!v->is_boolean()) throw ConfigError(child(key), "expected true or false");
    return v->get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    const json* v = find(key);
    if (v == nullptr) return fallback;
    if (!v->is_string()) throw ConfigError(child(key), "expected a string");
    return v->get<std::string>();
  }

  const json* array(const std::string& key) {
    const json* v = find(key);
    if (v != nullptr && !v->is_array()) throw ConfigError(child(key), "expected an array");
    return v;
  }

  void finish() {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.contains(key)) throw ConfigError(child(key), "unknown key '" + key + "'");
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string index_path(const std::string& base, std::size_t i) {
  return fmt::format("{}[{}]", base, i);
}

ControlGains parse_gains(const json& j, const std::string& path, const ControlGains& fallback) {
  ObjectReader r(j, path);
  ControlGains g;
  g.k = r.number("k", fallback.k);
  g.gamma = r.number("gamma", fallback.gamma);
  g.alpha = static_cast<int>(r.unsigned_integer("alpha", static_cast<std::uint64_t>(fallback.alpha)));
  if (!g.valid()) throw ConfigError(path, "need k > 0, gamma >= 0, alpha in {0, 1}");
  return g;
}

BucketAxis parse_axis(const json* arr, const std::string& path) {
  BucketAxis axis;
  if (arr == nullptr) throw ConfigError(path, "is required");
  for (std::size_t i = 0; i < arr->size(); ++i) {
    const auto& v = (*arr)[i];
    if (v.is_null()) {
      if (i == 0) {
        axis.edges.push_back(-kInf);
      } else if (i + 1 == arr->size()) {
        axis.edges.push_back(kInf);
      } else {
        throw ConfigError(index_path(path, i), "null is only allowed as the first or last edge");
      }
    } else if (v.is_number()) {
      axis.edges.push_back(v.get<double>());
    } else {
      throw ConfigError(index_path(path, i), "expected a number or null");
    }
  }
  return axis;
}

json axis_to_json(const BucketAxis& axis) {
  json arr = json::array();
  for (double e : axis.edges) {
    if (std::isinf(e)) {
      arr.push_back(nullptr);
    } else {
      arr.push_back(e);
    }
  }
  return arr;
}

void parse_engine(const json& j, EngineConfig& e) {
  ObjectReader r(j, "engine");
  e.sim_step = r.number("sim_step_s", e.sim_step);
  e.duration = r.number("duration_s", e.duration);
  e.seed = r.unsigned_integer("seed", e.seed);
  e.record_every = r.unsigned_integer("record_every", e.record_every);
}

void parse_channel(const json& j, ChannelModel& c) {
  ObjectReader r(j, "channel");
  c.delay_mean = r.number("delay_mean_s", c.delay_mean);
  c.delay_std = r.number("delay_std_s", c.delay_std);
  c.loss_prob = r.number("loss_prob", c.loss_prob);
  if (const json* windows = r.array("nlos_windows")) {
    c.nlos_windows.clear();
    for (std::size_t i = 0; i < windows->size(); ++i) {
      const auto& w = (*windows)[i];
      const auto path = index_path("channel.nlos_windows", i);
      if (!w.is_array() || w.size() != 2 || !w[0].is_number() || !w[1].is_number()) {
        throw ConfigError(path, "expected [start_s, end_s]");
      }
      c.nlos_windows.push_back({w[0].get<double>(), w[1].get<double>()});
    }
  }
  if (const json* b = r.find("burst")) {
    if (b->is_null()) {
      c.burst.reset();
    } else {
      ObjectReader br(*b, "channel.burst");
      GilbertElliott ge;
      ge.p_good_to_bad = br.number("p_good_to_bad", ge.p_good_to_bad);
      ge.p_bad_to_good = br.number("p_bad_to_good", ge.p_bad_to_good);
      ge.loss_in_bad = br.number("loss_in_bad", ge.loss_in_bad);
      c.burst = ge;
    }
  }
}

void parse_estimator(const json& j, EstimatorConfig& e) {
  ObjectReader r(j, "estimator");
  e.prediction_step = r.number("prediction_step_s", e.prediction_step);
  e.horizon = r.number("horizon_s", e.horizon);
  e.a_max = r.number("a_max", e.a_max);
  e.sigma = r.number("sigma", e.sigma);
  e.v_target = r.number("v_target", e.v_target);
  e.implicit_solve = r.boolean("implicit_solve", e.implicit_solve);
}

void parse_control(const json& j, ControlConfig& c) {
  ObjectReader r(j, "control");
  c.time_gap = r.number("time_gap_s", c.time_gap);
  ControlGains defaults = c.gain_table.entries.size() == 1 ? c.gain_table.entries.front()
                                                           : ControlGains{};
  if (const json* g = r.find("default_gains")) {
    defaults = parse_gains(*g, "control.default_gains", defaults);
  }
  const json* table = r.find("gain_table");
  if (table == nullptr || table->is_null()) {
    c.gain_table = GainTable::uniform(defaults);
    return;
  }
  ObjectReader tr(*table, "control.gain_table");
  GainTable t;
  t.ego_speed = parse_axis(tr.array("ego_speed_edges_mps"), "control.gain_table.ego_speed_edges_mps");
  t.target_speed =
      parse_axis(tr.array("target_speed_edges_mps"), "control.gain_table.target_speed_edges_mps");
  t.headway = parse_axis(tr.array("headway_edges_m"), "control.gain_table.headway_edges_m");
  const json* entries = tr.array("gains");
  if (entries == nullptr) throw ConfigError("control.gain_table.gains", "is required");
  for (std::size_t i = 0; i < entries->size(); ++i) {
    t.entries.push_back(parse_gains((*entries)[i], index_path("control.gain_table.gains", i), defaults));
  }
  if (auto msg = t.validate(); !msg.empty()) throw ConfigError("control.gain_table", msg);
  c.gain_table = std::move(t);
}

void parse_dynamics(const json& j, DynamicsLimits& d) {
  ObjectReader r(j, "dynamics");
  d.accel_max = r.number("accel_max_mps2", d.accel_max);
  d.decel_max = r.number("decel_max_mps2", d.decel_max);
  d.speed_max = r.number("speed_max_mps", d.speed_max);
}

IntersectionSpec parse_intersection(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  IntersectionSpec x;
  x.id = r.string("id", x.id);
  x.virtual_crossing = r.number("virtual_crossing_m", x.virtual_crossing);
  x.control_zone_radius = r.number("control_zone_radius_m", x.control_zone_radius);
  x.conflict_zone_length = r.number("conflict_zone_m", x.conflict_zone_length);
  const json* legs = r.array("legs");
  if (legs == nullptr) throw ConfigError(r.child("legs"), "is required");
  for (std::size_t i = 0; i < legs->size(); ++i) {
    ObjectReader lr((*legs)[i], index_path(r.child("legs"), i));
    LegSpec leg;
    leg.id = lr.string("id", "");
    if (leg.id.empty()) throw ConfigError(lr.child("id"), "is required");
    leg.approach_length = lr.number("approach_length_m", leg.approach_length);
    x.legs.push_back(std::move(leg));
  }
  return x;
}

SpawnEvent parse_event(const json& j, const std::string& path, const std::string& default_x) {
  ObjectReader r(j, path);
  SpawnEvent ev;
  ev.time = r.number("time_s", ev.time);
  ev.speed = r.number("speed_mps", ev.speed);
  ev.length = r.number("length_m", ev.length);
  if (const json* d = r.find("distance_m")) {
    if (!d->is_number()) throw ConfigError(r.child("distance_m"), "expected a number");
    ev.distance = d->get<double>();
  }
  const std::string intersection = r.string("intersection", default_x);
  const std::string leg = r.string("leg", "");
  if (const json* route = r.array("route")) {
    if (!leg.empty()) throw ConfigError(r.child("leg"), "give either leg or route, not both");
    for (std::size_t i = 0; i < route->size(); ++i) {
      ObjectReader rr((*route)[i], index_path(r.child("route"), i));
      RouteStep step;
      step.intersection = rr.string("intersection", default_x);
      step.leg = rr.string("leg", "");
      ev.route.push_back(std::move(step));
    }
  } else {
    if (leg.empty()) throw ConfigError(r.child("leg"), "is required");
    ev.route.push_back({intersection, leg});
  }
  return ev;
}

void parse_spawns(const json& j, SpawnPlan& plan, const std::string& default_x) {
  ObjectReader r(j, "spawns");
  plan.min_spawn_gap = r.number("min_spawn_gap_m", plan.min_spawn_gap);
  if (const json* events = r.array("events")) {
    plan.events.clear();
    for (std::size_t i = 0; i < events->size(); ++i) {
      plan.events.push_back(parse_event((*events)[i], index_path("spawns.events", i), default_x));
    }
  }
  if (const json* rnd = r.find("random"); rnd != nullptr && !rnd->is_null()) {
    ObjectReader rr(*rnd, "spawns.random");
    RandomSpawnSpec spec;
    spec.intersection = rr.string("intersection", default_x);
    if (const json* legs = rr.array("legs")) {
      for (std::size_t i = 0; i < legs->size(); ++i) {
        if (!(*legs)[i].is_string()) {
          throw ConfigError(index_path("spawns.random.legs", i), "expected a string");
        }
        spec.legs.push_back((*legs)[i].get<std::string>());
      }
    }
    spec.rate_per_leg = rr.number("rate_per_leg_vps", spec.rate_per_leg);
    spec.speed_min = rr.number("speed_min_mps", spec.speed_min);
    spec.speed_max = rr.number("speed_max_mps", spec.speed_max);
    spec.length = rr.number("length_m", spec.length);
    spec.min_headway = rr.number("min_headway_s", spec.min_headway);
    spec.until = rr.number("until_s", spec.until);
    spec.max_vehicles = rr.unsigned_integer("max_vehicles", spec.max_vehicles);
    plan.random = std::move(spec);
  }
}

}  // namespace

ScenarioConfig parse_config(const json& doc) {
  ScenarioConfig c;
  {
    ObjectReader r(doc, "");
    if (const json* j = r.find("engine")) parse_engine(*j, c.engine);
    if (const json* j = r.find("channel")) parse_channel(*j, c.channel);
    if (const json* j = r.find("estimator")) parse_estimator(*j, c.estimator);
    if (const json* j = r.find("control")) parse_control(*j, c.control);
    if (const json* j = r.find("dynamics")) parse_dynamics(*j, c.dynamics);
    const json* xs = r.array("intersections");
    if (xs == nullptr) throw ConfigError("intersections", "is required");
    for (std::size_t i = 0; i < xs->size(); ++i) {
      c.intersections.push_back(parse_intersection((*xs)[i], index_path("intersections", i)));
    }
    const std::string default_x = c.intersections.empty() ? "" : c.intersections.front().id;
    if (const json* j = r.find("spawns")) parse_spawns(*j, c.spawns, default_x);
    c.exit_length = r.number("exit_length_m", c.exit_length);
    c.full_stop_speed = r.number("full_stop_speed_mps", c.full_stop_speed);
  }
  validate(c);
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", fmt::format("{}: {}", path.string(), e.what()));
  }
  return parse_config(doc);
}

json to_json(const ScenarioConfig& c) {
  json doc;
  doc["engine"] = {{"sim_step_s", c.engine.sim_step},
                   {"duration_s", c.engine.duration},
                   {"seed", c.engine.seed},
                   {"record_every", c.engine.record_every}};

  json windows = json::array();
  for (const auto& w : c.channel.nlos_windows) windows.push_back({w.start, w.end});
  doc["channel"] = {{"delay_mean_s", c.channel.delay_mean},
                    {"delay_std_s", c.channel.delay_std},
                    {"loss_prob", c.channel.loss_prob},
                    {"nlos_windows", windows}};
  if (c.channel.burst) {
    doc["channel"]["burst"] = {{"p_good_to_bad", c.channel.burst->p_good_to_bad},
                               {"p_bad_to_good", c.channel.burst->p_bad_to_good},
                               {"loss_in_bad", c.channel.burst->loss_in_bad}};
  }

  doc["estimator"] = {{"prediction_step_s", c.estimator.prediction_step},
                      {"horizon_s", c.estimator.horizon},
                      {"a_max", c.estimator.a_max},
                      {"sigma", c.estimator.sigma},
                      {"v_target", c.estimator.v_target},
                      {"implicit_solve", c.estimator.implicit_solve}};

  const auto gains_json = [](const ControlGains& g) {
    return json{{"k", g.k}, {"gamma", g.gamma}, {"alpha", g.alpha}};
  };
  json entries = json::array();
  for (const auto& g : c.control.gain_table.entries) entries.push_back(gains_json(g));
  doc["control"] = {{"time_gap_s", c.control.time_gap},
                    {"gain_table",
                     {{"ego_speed_edges_mps", axis_to_json(c.control.gain_table.ego_speed)},
                      {"target_speed_edges_mps", axis_to_json(c.control.gain_table.target_speed)},
                      {"headway_edges_m", axis_to_json(c.control.gain_table.headway)},
                      {"gains", entries}}}};

  doc["dynamics"] = {{"accel_max_mps2", c.dynamics.accel_max},
                     {"decel_max_mps2", c.dynamics.decel_max},
                     {"speed_max_mps", c.dynamics.speed_max}};

  json xs = json::array();
  for (const auto& x : c.intersections) {
    json legs = json::array();
    for (const auto& l : x.legs) legs.push_back({{"id", l.id}, {"approach_length_m", l.approach_length}});
    xs.push_back({{"id", x.id},
                  {"virtual_crossing_m", x.virtual_crossing},
                  {"control_zone_radius_m", x.control_zone_radius},
                  {"conflict_zone_m", x.conflict_zone_length},
                  {"legs", legs}});
  }
  doc["intersections"] = xs;

  json events = json::array();
  for (const auto& ev : c.spawns.events) {
    json route = json::array();
    for (const auto& r : ev.route) route.push_back({{"intersection", r.intersection}, {"leg", r.leg}});
    json e = {{"time_s", ev.time}, {"speed_mps", ev.speed}, {"length_m", ev.length}, {"route", route}};
    if (ev.distance) e["distance_m"] = *ev.distance;
    events.push_back(std::move(e));
  }
  doc["spawns"] = {{"min_spawn_gap_m", c.spawns.min_spawn_gap}, {"events", events}};
  if (c.spawns.random) {
    const auto& r = *c.spawns.random;
    doc["spawns"]["random"] = {{"intersection", r.intersection},
                               {"legs", r.legs},
                               {"rate_per_leg_vps", r.rate_per_leg},
                               {"speed_min_mps", r.speed_min},
                               {"speed_max_mps", r.speed_max},
                               {"length_m", r.length},
                               {"min_headway_s", r.min_headway},
                               {"until_s", r.until},
                               {"max_vehicles", r.max_vehicles}};
  }
  doc["exit_length_m"] = c.exit_length;
  doc["full_stop_speed_mps"] = c.full_stop_speed;
  return doc;
}

}  // namespace cavsim
