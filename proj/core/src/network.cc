#include "cavsim/network.h"

#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>

namespace cavsim {

std::string ChannelModel::validate() const {
  if (!(delay_mean >= 0.0)) return "delay_mean_s must be >= 0";
  if (!(delay_std >= 0.0)) return "delay_std_s must be >= 0";
  if (!(loss_prob >= 0.0 && loss_prob <= 1.0)) return "loss_prob must lie in [0, 1]";
  for (std::size_t i = 0; i < nlos_windows.size(); ++i) {
    const auto& w = nlos_windows[i];
    if (!(w.start < w.end)) return fmt::format("nlos_windows[{}]: start must be < end", i);
  }
  auto sorted = nlos_windows;
  std::sort(sorted.begin(), sorted.end(),
            [](const LossWindow& a, const LossWindow& b) { return a.start < b.start; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].start < sorted[i - 1].end) {
      return fmt::format("nlos_windows: [{}, {}) overlaps [{}, {})", sorted[i - 1].start,
                         sorted[i - 1].end, sorted[i].start, sorted[i].end);
    }
  }
  if (burst) {
    const auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!in_unit(burst->p_good_to_bad) || !in_unit(burst->p_bad_to_good) ||
        !in_unit(burst->loss_in_bad)) {
      return "burst: probabilities must lie in [0, 1]";
    }
  }
  return {};
}

bool ChannelModel::in_nlos(SimTime t) const noexcept {
  return std::any_of(nlos_windows.begin(), nlos_windows.end(),
                     [t](const LossWindow& w) { return w.contains(t); });
}

LinkStream::LinkStream(std::uint64_t seed, VehicleId sender, VehicleId receiver) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    sender.value, receiver.value, 0x5eedu};
  engine_.seed(seq);
}

std::optional<SimTime> transmit(const ChannelModel& channel, const Beacon& beacon, SimTime now,
                                LinkStream& stream) {
  if (beacon.send_time != now) {
    throw std::invalid_argument("transmit: beacon send_time must equal now");
  }
  if (channel.in_nlos(now)) return std::nullopt;

  auto& rng = stream.engine();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double loss = channel.loss_prob;
  if (channel.burst) {
    const auto& ge = *channel.burst;
    const double flip = unit(rng);
    stream.bad_state = stream.bad_state ? !(flip < ge.p_bad_to_good) : flip < ge.p_good_to_bad;
    if (stream.bad_state) loss = std::max(loss, ge.loss_in_bad);
  }
  if (unit(rng) < loss) return std::nullopt;

  double delay = channel.delay_mean;
  if (channel.delay_std > 0.0) {
    std::normal_distribution<double> normal(channel.delay_mean, channel.delay_std);
    delay = normal(rng);
  }
  return now + std::max(0.0, delay);
}

void InFlightQueue::push(SimTime delivery_time, VehicleId receiver, Beacon beacon) {
  Key key{delivery_time, beacon.sender.value, beacon.send_time, receiver.value,
          next_sequence_++};
  entries_.emplace(key, InFlight{delivery_time, receiver, std::move(beacon)});
}

std::vector<InFlight> InFlightQueue::deliver_due(SimTime now) {
  std::vector<InFlight> due;
  auto it = entries_.begin();
  while (it != entries_.end() && it->first.delivery_time <= now) {
    due.push_back(std::move(it->second));
    it = entries_.erase(it);
  }
  return due;
}

Channel::Channel(ChannelModel model) : model_(std::move(model)) {}

bool Channel::send(const Beacon& beacon, VehicleId receiver, SimTime now) {
  ++stats_.sent;
  const auto key = std::make_pair(beacon.sender.value, receiver.value);
  auto it = links_.find(key);
  if (it == links_.end()) {
    it = links_.emplace(key, LinkStream(model_.seed, beacon.sender, receiver)).first;
  }
  const auto delivery = transmit(model_, beacon, now, it->second);
  if (!delivery) {
    if (model_.in_nlos(now)) {
      ++stats_.dropped_nlos;
    } else {
      ++stats_.dropped_random;
    }
    return false;
  }
  ++stats_.delivered;
  queue_.push(*delivery, receiver, beacon);
  return true;
}

}  // namespace cavsim
