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

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "culture_bridge/synth.hpp"
#include "culture_bridge/trajectory.hpp"
#include "test_support.hpp"

namespace cb = culture_bridge;
using cb_test::fixture;

namespace
{

const std::string kHeader = "vehicle_id,t,x,y,vx,vy,ax,ay,lane_id,length,width\n";

std::string row(int id, double t, int lane = 1)
{
  return std::to_string(id) + "," + cb::csv::format_double(t) + "," + cb::csv::format_double(20.0 * t) +
         ",0,20,0,0,0," + std::to_string(lane) + ",4.5,1.8\n";
}

std::string rows(int id, int n, double t0 = 0.0)
{
  std::string s;
  for (int k = 0; k < n; ++k) s += row(id, t0 + 0.2 * k);
  return s;
}

}  // namespace

TEST(CanonicalCsv, TwoTrackFixtureHasTwoTracksAtFifthSecondSteps)
{
  const auto ds = cb::parse_canonical_csv(fixture("canonical_2x10.csv"));
  ASSERT_EQ(ds.tracks.size(), 2u);
  EXPECT_NEAR(ds.dt, 0.2, 1e-12);
  EXPECT_EQ(ds.tracks[0].frames.size(), 10u);
  EXPECT_EQ(ds.tracks[1].frames.size(), 10u);
  EXPECT_EQ(ds.lane_count, 2);
  EXPECT_EQ(ds.meta.source, "fixture");
}

TEST(CanonicalCsv, HeaderOnlyIsEmptyFile)
{
  cb_test::TempDir tmp;
  cb_test::write_text(tmp / "empty.csv", kHeader);
  EXPECT_CB_ERROR(cb::parse_canonical_csv(tmp / "empty.csv"), EmptyFile);
}

TEST(CanonicalCsv, BackwardsTimeIsNonMonotonic)
{
  cb_test::TempDir tmp;
  cb_test::write_text(tmp / "bad.csv", kHeader + row(1, 0.0) + row(1, 0.2) + row(1, 0.1) + row(1, 0.3) + row(1, 0.4));
  EXPECT_CB_ERROR(cb::parse_canonical_csv(tmp / "bad.csv"), NonMonotonicTime);
}

TEST(CanonicalCsv, MissingColumnIsReported)
{
  cb_test::TempDir tmp;
  cb_test::write_text(tmp / "bad.csv", "vehicle_id,t,x,y,vx,vy,ax,ay,length,width\n1,0,0,0,0,0,0,0,4,2\n");
  EXPECT_CB_ERROR(cb::parse_canonical_csv(tmp / "bad.csv"), MissingColumn);
}

TEST(CanonicalCsv, FrameGapIsInconsistentDt)
{
  cb_test::TempDir tmp;
  cb_test::write_text(tmp / "gap.csv", kHeader + rows(1, 6) + rows(2, 3) + row(2, 0.8) + row(2, 1.0));
  EXPECT_CB_ERROR(cb::parse_canonical_csv(tmp / "gap.csv"), InconsistentDt);
}

TEST(CanonicalCsv, ShortTracksAreDroppedAndCounted)
{
  cb_test::TempDir tmp;
  cb_test::write_text(tmp / "short.csv", kHeader + rows(1, 6) + rows(2, 4));
  const auto ds = cb::parse_canonical_csv(tmp / "short.csv");
  ASSERT_EQ(ds.tracks.size(), 1u);
  EXPECT_EQ(ds.meta.dropped_short_tracks, 1u);
}

TEST(CanonicalCsv, RoundTripReproducesEveryField)
{
  cb::CultureSpec spec;
  const auto ds = cb::gen_world(spec, 12, 6.0, 5);
  cb_test::TempDir tmp;
  cb::write_canonical_csv(ds, tmp / "w.csv");
  const auto back = cb::parse_canonical_csv(tmp / "w.csv");
  ASSERT_EQ(back.tracks.size(), ds.tracks.size());
  EXPECT_EQ(back.meta.ego_ids, ds.meta.ego_ids);
  EXPECT_EQ(back.lane_centers_y, ds.lane_centers_y);
  for (std::size_t i = 0; i < ds.tracks.size(); ++i) {
    const auto & a = ds.tracks[i];
    const auto & b = back.tracks[i];
    ASSERT_EQ(a.vehicle_id, b.vehicle_id);
    ASSERT_EQ(a.frames.size(), b.frames.size());
    EXPECT_NEAR(a.length, b.length, 1e-9);
    for (std::size_t k = 0; k < a.frames.size(); ++k) {
      const auto & f = a.frames[k];
      const auto & g = b.frames[k];
      EXPECT_NEAR(f.t, g.t, 1e-9);
      EXPECT_NEAR(f.x, g.x, 1e-9);
      EXPECT_NEAR(f.y, g.y, 1e-9);
      EXPECT_NEAR(f.vx, g.vx, 1e-9);
      EXPECT_NEAR(f.vy, g.vy, 1e-9);
      EXPECT_NEAR(f.ax, g.ax, 1e-9);
      EXPECT_NEAR(f.ay, g.ay, 1e-9);
      EXPECT_EQ(f.lane_id, g.lane_id);
    }
  }
}

TEST(HighD, FixtureHasThreeTracksAt25Hz)
{
  const auto ds = cb::import_highd_like(fixture("highd_3.csv"));
  EXPECT_EQ(ds.tracks.size(), 3u);
  EXPECT_NEAR(ds.dt, 0.04, 1e-12);
  EXPECT_EQ(ds.meta.source, "highd");
  EXPECT_EQ(ds.lane_count, 2);
  EXPECT_DOUBLE_EQ(ds.tracks[0].frames[3].vx, 30.0);
}

TEST(HighD, MissingVelocityColumn)
{
  cb_test::TempDir tmp;
  cb_test::write_text(tmp / "h.csv", "frame,id,x,y,yVelocity,xAcceleration,yAcceleration,laneId\n0,1,0,0,0,0,0,1\n");
  EXPECT_CB_ERROR(cb::import_highd_like(tmp / "h.csv"), MissingColumn);
}

TEST(HighD, RowOrderDoesNotMatter)
{
  const auto text = cb_test::read_text(fixture("highd_3.csv"));
  const auto header_end = text.find('\n') + 1;
  std::vector<std::string> lines;
  std::size_t pos = header_end;
  while (pos < text.size()) {
    const auto e = text.find('\n', pos);
    lines.push_back(text.substr(pos, e - pos + 1));
    pos = e + 1;
  }
  std::mt19937 rng(3);
  std::shuffle(lines.begin(), lines.end(), rng);
  cb_test::TempDir tmp;
  cb_test::write_text(tmp / "s.csv", text.substr(0, header_end) + std::accumulate(lines.begin(), lines.end(), std::string()));
  EXPECT_EQ(cb::import_highd_like(tmp / "s.csv").tracks, cb::import_highd_like(fixture("highd_3.csv")).tracks);
}

TEST(Ngsim, FeetBecomeMetersOnTheRoadAxis)
{
  const auto ds = cb::import_ngsim_like(fixture("ngsim_3.csv"));
  ASSERT_EQ(ds.tracks.size(), 3u);
  EXPECT_NEAR(ds.dt, 0.1, 1e-12);
  const auto & first = ds.tracks[0].frames.front();
  EXPECT_NEAR(first.x, 30.48, 1e-12);  // Local_Y = 100 ft
  EXPECT_NEAR(first.y, 6.0 * 0.3048, 1e-12);
}

TEST(Ngsim, LinearTenFeetPerFrameGivesConstantSpeed)
{
  const auto ds = cb::import_ngsim_like(fixture("ngsim_3.csv"));
  for (const auto & f : ds.tracks[0].frames) {
    EXPECT_NEAR(f.vx, 30.48, 1e-9);
    EXPECT_NEAR(f.vy, 0.0, 1e-12);
    EXPECT_NEAR(f.ax, 0.0, 1e-6);
  }
}

TEST(Ngsim, MissingLaneColumn)
{
  cb_test::TempDir tmp;
  cb_test::write_text(tmp / "n.csv", "Vehicle_ID,Frame_ID,Local_X,Local_Y,v_Vel,v_Acc\n1,1,0,0,0,0\n");
  EXPECT_CB_ERROR(cb::import_ngsim_like(tmp / "n.csv"), MissingColumn);
}

TEST(Fraction, HundredTracksAtOnePointThreeThreePercentGivesTwo)
{
  std::vector<cb::VehicleId> ids(100);
  std::iota(ids.begin(), ids.end(), 1);
  EXPECT_EQ(cb::select_fraction(ids, 0.0133, 7).size(), 2u);
  EXPECT_EQ(cb::select_fraction(ids, 0.02, 7).size(), 2u);
}

TEST(Fraction, FullFractionIsIdentity)
{
  const auto ds = cb::parse_canonical_csv(fixture("canonical_2x10.csv"));
  const auto all = cb::sample_fraction(ds, 1.0, 3);
  EXPECT_EQ(all.tracks, ds.tracks);
}

TEST(Fraction, DeterministicSubsetOfInput)
{
  std::vector<cb::VehicleId> ids(57);
  std::iota(ids.begin(), ids.end(), 10);
  const auto a = cb::select_fraction(ids, 0.3, 11);
  EXPECT_EQ(a, cb::select_fraction(ids, 0.3, 11));
  EXPECT_EQ(a.size(), 18u);
  const std::set<cb::VehicleId> unique(a.begin(), a.end());
  EXPECT_EQ(unique.size(), a.size());
  for (const auto id : a) EXPECT_TRUE(std::find(ids.begin(), ids.end(), id) != ids.end());
}

TEST(Fraction, OutOfRange)
{
  std::vector<cb::VehicleId> ids = {1, 2, 3};
  EXPECT_CB_ERROR(cb::select_fraction(ids, 0.0, 1), FractionOutOfRange);
  EXPECT_CB_ERROR(cb::select_fraction(ids, 1.5, 1), FractionOutOfRange);
  EXPECT_CB_ERROR(cb::select_fraction(ids, 0.1, 1), FractionOutOfRange);
}

TEST(Validate, GeneratedWorldPassesAndLaneIdsAreDeclared)
{
  const auto ds = cb::gen_world(cb::CultureSpec{}, 20, 8.0, 9);
  EXPECT_NO_THROW(cb::validate(ds));
  for (const auto & tr : ds.tracks) {
    for (std::size_t k = 1; k < tr.frames.size(); ++k) {
      EXPECT_NEAR(tr.frames[k].t - tr.frames[k - 1].t, ds.dt, 1e-9);
    }
  }
}
