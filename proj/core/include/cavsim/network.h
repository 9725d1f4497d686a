#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cavsim/types.h"

namespace cavsim {

// Half-open interval [start, end) of total loss (non-line-of-sight).
struct LossWindow {
  double start = 0.0;
  double end = 0.0;

  bool contains(SimTime t) const noexcept { return t >= start && t < end; }
};

// Optional two-state burst-loss model layered on top of the Bernoulli loss.
struct GilbertElliott {
  double p_good_to_bad = 0.0;
  double p_bad_to_good = 1.0;
  double loss_in_bad = 1.0;
};

struct ChannelModel {
  double delay_mean = 0.040;  // s
  double delay_std = 0.0259;  // s
  double loss_prob = 0.1;
  std::vector<LossWindow> nlos_windows;
  std::uint64_t seed = 1;
  std::optional<GilbertElliott> burst;

  // Empty when valid, otherwise a description of the first violation.
  std::string validate() const;

  bool in_nlos(SimTime t) const noexcept;
};

// Randomness owned by one directed sender->receiver link.
class LinkStream {
 public:
  LinkStream(std::uint64_t seed, VehicleId sender, VehicleId receiver);

  std::mt19937_64& engine() noexcept { return engine_; }
  bool bad_state = false;

 private:
  std::mt19937_64 engine_;
};

// Decides the fate of one beacon sent at `now`: std::nullopt when dropped,
// otherwise its delivery time. Negative delay draws clamp to zero.
std::optional<SimTime> transmit(const ChannelModel& channel, const Beacon& beacon, SimTime now,
                                LinkStream& stream);

struct InFlight {
  SimTime delivery_time = 0.0;
  VehicleId receiver;
  Beacon beacon;
};

// Beacons in transit, popped in (delivery time, sender, send time, receiver)
// order so delivery is reproducible for identical inputs.
class InFlightQueue {
 public:
  void push(SimTime delivery_time, VehicleId receiver, Beacon beacon);

  // Removes and returns every entry with delivery_time <= now.
  std::vector<InFlight> deliver_due(SimTime now);

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

 private:
  struct Key {
    SimTime delivery_time;
    std::uint32_t sender;
    SimTime send_time;
    std::uint32_t receiver;
    std::uint64_t sequence;

    auto operator<=>(const Key&) const = default;
  };
  std::map<Key, InFlight> entries_;
  std::uint64_t next_sequence_ = 0;
};

struct ChannelStats {
  std::uint64_t sent = 0;
  std::uint64_t dropped_nlos = 0;
  std::uint64_t dropped_random = 0;
  std::uint64_t delivered = 0;
};

// Engine-owned channel: the model, one stream per directed link, and the
// in-flight queue.
class Channel {
 public:
  explicit Channel(ChannelModel model);

  // Returns true when the beacon was queued for delivery.
  bool send(const Beacon& beacon, VehicleId receiver, SimTime now);
  std::vector<InFlight> deliver_due(SimTime now) { return queue_.deliver_due(now); }

  const ChannelModel& model() const noexcept { return model_; }
  const ChannelStats& stats() const noexcept { return stats_; }
  std::size_t in_flight() const noexcept { return queue_.size(); }

 private:
  ChannelModel model_;
  std::map<std::pair<std::uint32_t, std::uint32_t>, LinkStream> links_;
  InFlightQueue queue_;
  ChannelStats stats_;
};

}  // namespace cavsim
