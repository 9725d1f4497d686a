#include "cavsim/network.h"

#include <cmath>

#include <gtest/gtest.h>

namespace cavsim {
namespace {

Beacon BeaconAt(std::uint32_t sender, SimTime t) { return Beacon{VehicleId{sender}, t, {}, {}}; }

ChannelModel Perfect() {
  ChannelModel m;
  m.delay_mean = 0.0;
  m.delay_std = 0.0;
  m.loss_prob = 0.0;
  return m;
}

TEST(TransmitTest, DroppedInsideNlosWindow) {
  auto m = Perfect();
  m.nlos_windows = {{4.0, 6.0}};
  LinkStream stream(1, VehicleId{0}, VehicleId{1});
  EXPECT_FALSE(transmit(m, BeaconAt(0, 5.0), 5.0, stream).has_value());
  EXPECT_TRUE(transmit(m, BeaconAt(0, 6.0), 6.0, stream).has_value());
  EXPECT_FALSE(transmit(m, BeaconAt(0, 4.0), 4.0, stream).has_value());
}

TEST(TransmitTest, FixedDelayPassThrough) {
  auto m = Perfect();
  m.delay_mean = 0.040;
  LinkStream stream(1, VehicleId{0}, VehicleId{1});
  const auto t = transmit(m, BeaconAt(0, 2.0), 2.0, stream);
  ASSERT_TRUE(t.has_value());
  EXPECT_DOUBLE_EQ(*t, 2.040);
}

TEST(TransmitTest, NegativeDelayClampsToZero) {
  auto m = Perfect();
  m.delay_mean = -0.005;
  LinkStream stream(1, VehicleId{0}, VehicleId{1});
  EXPECT_EQ(*transmit(m, BeaconAt(0, 3.0), 3.0, stream), 3.0);
}

TEST(TransmitTest, FullLossDropsEverything) {
  auto m = Perfect();
  m.loss_prob = 1.0;
  LinkStream stream(1, VehicleId{0}, VehicleId{1});
  for (int i = 0; i < 100; ++i) {
    EXPECT_FALSE(transmit(m, BeaconAt(0, i * 0.1), i * 0.1, stream).has_value());
  }
}

TEST(TransmitTest, SameSeedSameDraws) {
  ChannelModel m;
  LinkStream a(42, VehicleId{0}, VehicleId{1});
  LinkStream b(42, VehicleId{0}, VehicleId{1});
  LinkStream other_link(42, VehicleId{1}, VehicleId{2});
  int differ = 0;
  for (int i = 0; i < 200; ++i) {
    const double t = i * 0.01;
    const auto x = transmit(m, BeaconAt(0, t), t, a);
    const auto y = transmit(m, BeaconAt(0, t), t, b);
    const auto z = transmit(m, BeaconAt(1, t), t, other_link);
    ASSERT_EQ(x, y);
    if (x != z) ++differ;
  }
  EXPECT_GT(differ, 0);
}

TEST(TransmitTest, BurstModelCanOnlyAddLoss) {
  auto m = Perfect();
  m.burst = GilbertElliott{0.2, 0.3, 1.0};
  LinkStream stream(5, VehicleId{0}, VehicleId{1});
  int dropped = 0;
  for (int i = 0; i < 10000; ++i) {
    if (!transmit(m, BeaconAt(0, i * 0.01), i * 0.01, stream)) ++dropped;
  }
  // Stationary bad-state share is 0.2 / (0.2 + 0.3) = 0.4.
  EXPECT_NEAR(dropped / 10000.0, 0.4, 0.03);
}

TEST(ChannelModelTest, ValidateRejectsOverlappingWindows) {
  auto m = Perfect();
  m.nlos_windows = {{4.0, 6.0}, {5.0, 8.0}};
  EXPECT_FALSE(m.validate().empty());
  m.nlos_windows = {{4.0, 6.0}, {6.0, 8.0}};
  EXPECT_TRUE(m.validate().empty());
  m.nlos_windows = {{6.0, 4.0}};
  EXPECT_FALSE(m.validate().empty());
  m.nlos_windows.clear();
  m.loss_prob = 1.5;
  EXPECT_FALSE(m.validate().empty());
}

TEST(InFlightQueueTest, OrderedByDeliveryTime) {
  InFlightQueue q;
  q.push(5.03, VehicleId{1}, BeaconAt(0, 5.0));
  q.push(5.01, VehicleId{1}, BeaconAt(0, 4.99));
  q.push(5.20, VehicleId{1}, BeaconAt(0, 5.1));
  const auto due = q.deliver_due(5.05);
  ASSERT_EQ(due.size(), 2u);
  EXPECT_EQ(due[0].delivery_time, 5.01);
  EXPECT_EQ(due[1].delivery_time, 5.03);
  EXPECT_EQ(q.size(), 1u);
}

TEST(InFlightQueueTest, EmptyQueueReturnsNothing) {
  InFlightQueue q;
  EXPECT_TRUE(q.deliver_due(100.0).empty());
}

TEST(InFlightQueueTest, ReceiverKeepsFreshestOfSameStep) {
  InFlightQueue q;
  q.push(5.0, VehicleId{1}, BeaconAt(0, 5.0));
  q.push(5.0, VehicleId{1}, BeaconAt(0, 4.9));
  std::optional<SimTime> held;
  for (const auto& item : q.deliver_due(5.0)) {
    if (!held || item.beacon.send_time > *held) held = item.beacon.send_time;
  }
  EXPECT_EQ(held, 5.0);
}

TEST(ChannelTest, StatsCountEachOutcome) {
  auto m = Perfect();
  m.nlos_windows = {{1.0, 2.0}};
  Channel ch(m);
  EXPECT_TRUE(ch.send(BeaconAt(0, 0.5), VehicleId{1}, 0.5));
  EXPECT_FALSE(ch.send(BeaconAt(0, 1.5), VehicleId{1}, 1.5));
  EXPECT_EQ(ch.stats().sent, 2u);
  EXPECT_EQ(ch.stats().dropped_nlos, 1u);
  EXPECT_EQ(ch.stats().delivered, 1u);
  EXPECT_EQ(ch.deliver_due(0.5).size(), 1u);
}

}  // namespace
}  // namespace cavsim
