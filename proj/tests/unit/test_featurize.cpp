// Copyright 2026 The culture_bridge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <random>

#include "culture_bridge/featurize.hpp"
#include "culture_bridge/synth.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace cb = culture_bridge;
using cb::Direction;

namespace
{

cb::TrajectoryDataset hand_scene(const std::vector<cb_oracle::Car> & cars) { return cb_oracle::scene_dataset(cars); }

cb::NeighborSlot slot(double dx, double dvx, double dy = 0.0, double dvy = 0.0)
{
  cb::NeighborSlot s;
  s.occupant = 7;
  s.d_x = dx;
  s.dv_x = dvx;
  s.d_y = dy;
  s.dv_y = dvy;
  return s;
}

}  // namespace

TEST(Neighbors, LoneVehicleHasEmptySlots)
{
  const auto ds = hand_scene({{1, 0, 0, 25, 0, 4.5, 1.8, 1}});
  const auto slots = cb::assign_neighbors(ds, 1, 0.0);
  for (const auto & s : slots) EXPECT_FALSE(s.occupied());
  EXPECT_FALSE(cb::total_ttc(slots).has_value());
}

TEST(Neighbors, LeadVehicleFillsFrontOnly)
{
  const auto ds = hand_scene({{1, 0, 0, 25, 0, 4.5, 1.8, 1}, {2, 20, 0, 25, 0, 4.5, 1.8, 1}});
  const auto slots = cb::assign_neighbors(ds, 1, 0.0);
  for (std::size_t k = 0; k < cb::kDirections; ++k) {
    EXPECT_EQ(slots[k].occupied(), static_cast<Direction>(k) == Direction::Front) << k;
  }
  EXPECT_DOUBLE_EQ(slots[0].d_x, 15.5);
}

TEST(Neighbors, EightHandPlacedVehiclesTakeTheirSlots)
{
  // Ego in the middle lane; lane 3 is on the left.
  const std::vector<cb_oracle::Car> cars = {
    {1, 0, 3.75, 25, 0, 4.5, 1.8, 2},   {10, 30, 3.75, 25, 0, 4.5, 1.8, 2},  {11, -30, 3.75, 25, 0, 4.5, 1.8, 2},
    {12, 1, 7.5, 25, 0, 4.5, 1.8, 3},   {13, -1, 0, 25, 0, 4.5, 1.8, 1},     {14, 25, 7.5, 25, 0, 4.5, 1.8, 3},
    {15, 25, 0, 25, 0, 4.5, 1.8, 1},    {16, -25, 7.5, 25, 0, 4.5, 1.8, 3},  {17, -25, 0, 25, 0, 4.5, 1.8, 1},
    {18, 60, 3.75, 25, 0, 4.5, 1.8, 2},  // farther than 10, not chosen
  };
  const auto slots = cb::assign_neighbors(hand_scene(cars), 1, 0.0);
  const std::array<cb::VehicleId, 8> want = {10, 11, 12, 13, 14, 15, 16, 17};
  for (std::size_t k = 0; k < 8; ++k) {
    ASSERT_TRUE(slots[k].occupied()) << cb::to_string(static_cast<Direction>(k));
    EXPECT_EQ(*slots[k].occupant, want[k]) << cb::to_string(static_cast<Direction>(k));
  }
}

TEST(Neighbors, UnknownVehicleAndTime)
{
  const auto ds = hand_scene({{1, 0, 0, 25, 0, 4.5, 1.8, 1}});
  EXPECT_CB_ERROR(cb::assign_neighbors(ds, 99, 0.0), UnknownVehicle);
  EXPECT_CB_ERROR(cb::assign_neighbors(ds, 1, 5.0), UnknownTime);
}

TEST(Neighbors, RandomScenesMatchBruteForce)
{
  std::mt19937_64 rng(17);
  for (int scene = 0; scene < 300; ++scene) {
    const auto cars = cb_oracle::random_scene(rng);
    const auto ds = cb_oracle::scene_dataset(cars);
    for (std::size_t e = 0; e < cars.size(); ++e) {
      const auto want = cb_oracle::ttc(cars, e);
      const auto slots = cb::assign_neighbors(ds, cars[e].id, 0.0);
      for (std::size_t d = 0; d < 8; ++d) {
        ASSERT_EQ(slots[d].occupant, want.occupant[d]) << "scene " << scene << " dir " << d;
        const auto got = cb::direction_ttc(slots[d]);
        ASSERT_EQ(got.has_value(), want.direction[d].has_value());
        if (got) {
          ASSERT_NEAR(*got, *want.direction[d], 1e-9);
        }
      }
      const auto total = cb::total_ttc(slots);
      ASSERT_EQ(total.has_value(), want.total.has_value());
      if (total) {
        ASSERT_NEAR(*total, *want.total, 1e-9);
      }
    }
  }
}

TEST(Neighbors, MirrorSwapsLeftAndRight)
{
  std::mt19937_64 rng(23);
  for (int scene = 0; scene < 100; ++scene) {
    auto cars = cb_oracle::random_scene(rng);
    auto mirrored = cars;
    for (auto & c : mirrored) {
      c.lane = 4 - c.lane;
      c.y = 7.5 - c.y;
      c.vy = -c.vy;
    }
    const auto a = cb::assign_neighbors(cb_oracle::scene_dataset(cars), cars[0].id, 0.0);
    const auto b = cb::assign_neighbors(cb_oracle::scene_dataset(mirrored), cars[0].id, 0.0);
    const auto swapped = [](Direction d) {
      switch (d) {
        case Direction::Left: return Direction::Right;
        case Direction::Right: return Direction::Left;
        case Direction::FrontLeft: return Direction::FrontRight;
        case Direction::FrontRight: return Direction::FrontLeft;
        case Direction::BackLeft: return Direction::BackRight;
        case Direction::BackRight: return Direction::BackLeft;
        default: return d;
      }
    };
    for (std::size_t k = 0; k < 8; ++k) {
      EXPECT_EQ(a[k].occupant, b[static_cast<std::size_t>(swapped(static_cast<Direction>(k)))].occupant);
    }
    const auto ta = cb::total_ttc(a), tb = cb::total_ttc(b);
    ASSERT_EQ(ta.has_value(), tb.has_value());
    if (ta) {
      EXPECT_NEAR(*ta, *tb, 1e-9);
    }
  }
}

TEST(Ttc, ClosingLongitudinalGap)
{
  EXPECT_DOUBLE_EQ(*cb::direction_ttc(slot(20.0, 5.0)), 4.0);
}

TEST(Ttc, EmptySlotIsAbsentAndEncodedMinusOne)
{
  const cb::NeighborSlot empty;
  EXPECT_FALSE(cb::direction_ttc(empty).has_value());
  cb::NeighborSlots slots;
  const auto s = cb::make_state(25, 0, 0, 0, slots);
  for (std::size_t k = 4; k < cb::kStateDim; ++k) EXPECT_EQ(s[k], cb::kAbsentTtc);
}

TEST(Ttc, OpeningOnBothAxesIsCap)
{
  EXPECT_DOUBLE_EQ(*cb::direction_ttc(slot(10.0, -2.0, 1.0, -0.5)), cb::kTtcCap);
}

TEST(Ttc, BothAxesClosingSum)
{
  EXPECT_DOUBLE_EQ(*cb::direction_ttc(slot(20.0, 5.0, 1.0, 0.5)), 6.0);
  EXPECT_DOUBLE_EQ(*cb::direction_ttc(slot(400.0, 2.0, 300.0, 2.0)), cb::kTtcCap);
}

TEST(Ttc, TotalIsMeanOfPresentDirections)
{
  cb::NeighborSlots slots;
  slots[0] = slot(20.0, 5.0);
  slots[1] = slot(10.0, -1.0);
  EXPECT_DOUBLE_EQ(*cb::total_ttc(slots), 52.0);
  cb::NeighborSlots one;
  one[3] = slot(15.0, 2.0);
  EXPECT_DOUBLE_EQ(*cb::total_ttc(one), 7.5);
}

TEST(Samples, FiveFramesGiveOneSampleAndFourGiveNone)
{
  const auto make = [](int n) {
    cb::TrajectoryDataset ds;
    ds.dt = 0.2;
    ds.lane_count = 1;
    ds.lane_centers_y = {0.0};
    cb::VehicleTrack tr;
    tr.vehicle_id = 1;
    for (int k = 0; k < n; ++k) tr.frames.push_back({0.2 * k, 20.0 * 0.2 * k, 0, 20, 0, 0.1 * k, 0, 1});
    ds.tracks.push_back(tr);
    return ds;
  };
  EXPECT_EQ(cb::extract_samples(make(5)).size(), 1u);
  EXPECT_EQ(cb::extract_samples(make(4)).size(), 0u);
  const auto s = cb::extract_samples(make(5)).front();
  EXPECT_DOUBLE_EQ(s.target_ax, 0.4);          // frame 4
  EXPECT_DOUBLE_EQ(s.window.last()[2], 0.3);   // previous action
  EXPECT_DOUBLE_EQ(s.window.rows[0][2], 0.0);  // frame 0 acceleration
}

TEST(Samples, TwoTrackFixtureGivesTwelveInIdThenTimeOrder)
{
  const auto ds = cb::parse_canonical_csv(cb_test::fixture("canonical_2x10.csv"));
  const auto samples = cb::extract_samples(ds);
  ASSERT_EQ(samples.size(), 12u);
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const auto & a = samples[i - 1];
    const auto & b = samples[i];
    EXPECT_TRUE(a.vehicle_id < b.vehicle_id || (a.vehicle_id == b.vehicle_id && a.t < b.t));
  }
}

TEST(Samples, GeneratedWindowsSatisfyRanges)
{
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    cb::CultureSpec spec;
    spec.lane_change_rate = 0.6;
    const auto ds = cb::gen_world(spec, 40, 8.0, seed);
    const auto ids = ds.sample_ids();
    for (const auto & s : cb::extract_samples(ds, ids)) ASSERT_TRUE(cb::is_valid(s.window));
  }
}

TEST(Scaling, RiskMapsCapToZeroAndContactToOne)
{
  cb::StateVector s{};
  s[0] = 25.0;
  s[4] = 0.0;
  s[5] = cb::kTtcCap;
  s[6] = cb::kAbsentTtc;
  s[7] = 50.0;
  const auto z = cb::normalize_state(s);
  EXPECT_DOUBLE_EQ(z[0], 0.0);
  EXPECT_DOUBLE_EQ(z[4], 1.0);
  EXPECT_DOUBLE_EQ(z[5], 0.0);
  EXPECT_DOUBLE_EQ(z[6], 0.0);
  EXPECT_DOUBLE_EQ(z[7], 0.5);
}
