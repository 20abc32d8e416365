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

#ifndef CULTURE_BRIDGE__FEATURIZE_HPP_
#define CULTURE_BRIDGE__FEATURIZE_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "culture_bridge/csv.hpp"
#include "culture_bridge/error.hpp"
#include "culture_bridge/trajectory.hpp"

namespace culture_bridge
{

inline constexpr std::size_t kDirections = 8;
inline constexpr std::size_t kStateDim = 12;
inline constexpr std::size_t kWindowFrames = 4;
inline constexpr double kTtcCap = 100.0;
inline constexpr double kClosingEpsilon = 1e-3;
inline constexpr double kAbsentTtc = -1.0;

enum class Direction : std::uint8_t {
  Front,
  Back,
  Left,
  Right,
  FrontLeft,
  FrontRight,
  BackLeft,
  BackRight,
};

constexpr std::string_view to_string(Direction d)
{
  constexpr std::array<std::string_view, kDirections> names = {
    "front", "back", "left", "right", "front_left", "front_right", "back_left", "back_right"};
  return names[static_cast<std::size_t>(d)];
}

/// Kinematic snapshot of one vehicle at one instant.
struct VehicleState
{
  VehicleId id = 0;
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  int lane_id = 1;
  double length = 4.5;
  double width = 1.8;
};

inline VehicleState state_of(const VehicleTrack & tr, const Frame & f)
{
  return {tr.vehicle_id, f.x, f.y, f.vx, f.vy, f.lane_id, tr.length, tr.width};
}

/// Gap fields are meaningful only while an occupant is present.
struct NeighborSlot
{
  Direction direction = Direction::Front;
  std::optional<VehicleId> occupant;
  double d_x = 0.0;   // bumper-to-bumper, >= 0
  double d_y = 0.0;
  double dv_x = 0.0;  // positive when closing
  double dv_y = 0.0;

  bool occupied() const { return occupant.has_value(); }
};

using NeighborSlots = std::array<NeighborSlot, kDirections>;

/// Gap and closing speed of `other` as seen from `ego`.
inline NeighborSlot relative_slot(Direction dir, const VehicleState & ego, const VehicleState & other)
{
  NeighborSlot s;
  s.direction = dir;
  s.occupant = other.id;
  const double dx = other.x - ego.x;
  const double dy = other.y - ego.y;
  s.d_x = std::max(0.0, std::abs(dx) - 0.5 * (ego.length + other.length));
  s.d_y = std::max(0.0, std::abs(dy) - 0.5 * (ego.width + other.width));
  s.dv_x = dx >= 0.0 ? ego.vx - other.vx : other.vx - ego.vx;
  s.dv_y = dy >= 0.0 ? ego.vy - other.vy : other.vy - ego.vy;
  return s;
}

/// Eight-direction neighbour slots of `ego` among `others`.
///
/// Same-lane vehicles fill front/back. In the two adjacent lanes a vehicle
/// whose center lies within half an ego length of the ego's center is
/// alongside (left/right); the rest fill the diagonal slots. Each slot keeps
/// the nearest candidate by longitudinal center distance, ties to the lower id.
inline NeighborSlots assign_neighbors(const VehicleState & ego, std::span<const VehicleState> others)
{
  NeighborSlots slots;
  std::array<const VehicleState *, kDirections> best{};
  std::array<double, kDirections> best_d{};
  for (std::size_t i = 0; i < kDirections; ++i) slots[i].direction = static_cast<Direction>(i);

  const double band = 0.5 * ego.length;
  for (const auto & o : others) {
    if (o.id == ego.id) continue;
    const double dx = o.x - ego.x;
    const int dl = o.lane_id - ego.lane_id;
    std::optional<Direction> dir;
    if (dl == 0) {
      dir = dx >= 0.0 ? Direction::Front : Direction::Back;
    } else if (dl == 1 || dl == -1) {
      const bool left = dl == 1;
      if (std::abs(dx) <= band) {
        dir = left ? Direction::Left : Direction::Right;
      } else if (dx > 0.0) {
        dir = left ? Direction::FrontLeft : Direction::FrontRight;
      } else {
        dir = left ? Direction::BackLeft : Direction::BackRight;
      }
    }
    if (!dir) continue;
    const auto k = static_cast<std::size_t>(*dir);
    const double d = std::abs(dx);
    if (!best[k] || d < best_d[k] || (d == best_d[k] && o.id < best[k]->id)) {
      best[k] = &o;
      best_d[k] = d;
    }
  }
  for (std::size_t k = 0; k < kDirections; ++k) {
    if (best[k]) slots[k] = relative_slot(static_cast<Direction>(k), ego, *best[k]);
  }
  return slots;
}

/// Per-direction time to collision: the sum of the per-axis gap/closing-speed
/// terms over axes that are closing, each term and the total capped at
/// kTtcCap. A present neighbour that closes on neither axis yields the cap.
inline std::optional<double> direction_ttc(const NeighborSlot & slot)
{
  if (!slot.occupied()) return std::nullopt;
  double total = 0.0;
  bool any = false;
  const auto axis = [&](double d, double dv) {
    if (dv > kClosingEpsilon) {
      total += std::clamp(d / std::abs(dv), 0.0, kTtcCap);
      any = true;
    }
  };
  axis(slot.d_x, slot.dv_x);
  axis(slot.d_y, slot.dv_y);
  if (!any) return kTtcCap;
  return std::min(total, kTtcCap);
}

/// Mean of direction_ttc over the occupied slots.
inline std::optional<double> total_ttc(const NeighborSlots & slots)
{
  double sum = 0.0;
  int n = 0;
  for (const auto & s : slots) {
    if (const auto v = direction_ttc(s)) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

// ---------------------------------------------------------------------------
// Scene lookup

/// Vehicles present at each dataset time step.
class SceneIndex
{
public:
  explicit SceneIndex(const TrajectoryDataset & ds) : dt_(ds.dt)
  {
    for (const auto & tr : ds.tracks) {
      for (const auto & f : tr.frames) {
        by_key_[time_key(f.t, dt_)].push_back(state_of(tr, f));
      }
    }
  }

  double dt() const { return dt_; }

  std::span<const VehicleState> at(std::int64_t key) const
  {
    const auto it = by_key_.find(key);
    if (it == by_key_.end()) return {};
    return it->second;
  }

  NeighborSlots neighbors(const VehicleState & ego, double t) const
  {
    return assign_neighbors(ego, at(time_key(t, dt_)));
  }

private:
  double dt_;
  std::unordered_map<std::int64_t, std::vector<VehicleState>> by_key_;
};

/// Slots of a recorded vehicle at recorded time t.
inline NeighborSlots assign_neighbors(const TrajectoryDataset & ds, VehicleId vehicle_id, double t)
{
  const auto * tr = ds.find(vehicle_id);
  if (!tr) throw Error(ErrorCode::UnknownVehicle, std::to_string(vehicle_id));
  const auto key = time_key(t, ds.dt);
  const Frame * frame = nullptr;
  for (const auto & f : tr->frames) {
    if (time_key(f.t, ds.dt) == key) frame = &f;
  }
  if (!frame) throw Error(ErrorCode::UnknownTime, "vehicle " + std::to_string(vehicle_id));
  std::vector<VehicleState> others;
  for (const auto & o : ds.tracks) {
    for (const auto & f : o.frames) {
      if (time_key(f.t, ds.dt) == key) others.push_back(state_of(o, f));
    }
  }
  return assign_neighbors(state_of(*tr, *frame), others);
}

// ---------------------------------------------------------------------------
// Model samples

/// (vx, vy, ax_prev, ay_prev, ttc x 8); ttc is kAbsentTtc or in [0, kTtcCap].
using StateVector = std::array<double, kStateDim>;
using Vec12 = std::array<double, 12>;

inline double dot(const Vec12 & a, const Vec12 & b)
{
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct StateWindow
{
  std::array<StateVector, kWindowFrames> rows{};  // oldest first

  const StateVector & last() const { return rows.back(); }
  bool operator==(const StateWindow &) const = default;
};

inline StateVector make_state(double vx, double vy, double ax_prev, double ay_prev,
                              const NeighborSlots & slots)
{
  StateVector s{};
  s[0] = vx;
  s[1] = vy;
  s[2] = ax_prev;
  s[3] = ay_prev;
  for (std::size_t k = 0; k < kDirections; ++k) {
    s[4 + k] = direction_ttc(slots[k]).value_or(kAbsentTtc);
  }
  return s;
}

inline bool is_valid(const StateWindow & w)
{
  for (const auto & row : w.rows) {
    for (std::size_t i = 0; i < kStateDim; ++i) {
      if (!std::isfinite(row[i])) return false;
      if (i >= 4 && row[i] != kAbsentTtc && (row[i] < 0.0 || row[i] > kTtcCap)) return false;
    }
  }
  return true;
}

/// Fixed input scaling shared by the learned model and the synthetic ground
/// truth. Speeds and accelerations are centred on typical highway values; each
/// TTC becomes a risk level that is 0 for an absent or non-closing neighbour
/// and approaches 1 as contact nears.
inline constexpr double kReferenceSpeed = 25.0;

inline StateVector normalize_state(const StateVector & s)
{
  StateVector z{};
  z[0] = (s[0] - kReferenceSpeed) / 5.0;
  z[1] = s[1] / 0.5;
  z[2] = s[2];
  z[3] = s[3] / 0.5;
  for (std::size_t k = 4; k < kStateDim; ++k) {
    z[k] = s[k] < 0.0 ? 0.0 : 1.0 - std::min(s[k], kTtcCap) / kTtcCap;
  }
  return z;
}

struct ActionSample
{
  StateWindow window;
  double target_ax = 0.0;
  double target_ay = 0.0;
  VehicleId vehicle_id = 0;
  double t = 0.0;
};

/// State vectors of every frame of a track; row k uses frame k-1's
/// acceleration, so row 0 is absent.
inline std::vector<StateVector> track_states(const SceneIndex & scene, const VehicleTrack & tr)
{
  std::vector<StateVector> states(tr.frames.size());
  for (std::size_t k = 1; k < tr.frames.size(); ++k) {
    const auto & f = tr.frames[k];
    const auto & prev = tr.frames[k - 1];
    states[k] = make_state(f.vx, f.vy, prev.ax, prev.ay, scene.neighbors(state_of(tr, f), f.t));
  }
  return states;
}

/// One sample per frame k >= 4: window rows are frames k-3..k and the target
/// is frame k's own acceleration, the action that follows the window's last
/// recorded acceleration (frame k-1).
inline std::vector<ActionSample> extract_samples(const TrajectoryDataset & ds,
                                                 const std::vector<VehicleId> & ids)
{
  const SceneIndex scene(ds);
  std::vector<VehicleId> sorted = ids;
  std::sort(sorted.begin(), sorted.end());
  std::vector<ActionSample> out;
  for (const auto id : sorted) {
    const auto * tr = ds.find(id);
    if (!tr) throw Error(ErrorCode::UnknownVehicle, std::to_string(id));
    if (tr->frames.size() < kWindowFrames + 1) continue;
    const auto states = track_states(scene, *tr);
    for (std::size_t k = kWindowFrames; k < tr->frames.size(); ++k) {
      ActionSample s;
      for (std::size_t r = 0; r < kWindowFrames; ++r) s.window.rows[r] = states[k - 3 + r];
      s.target_ax = tr->frames[k].ax;
      s.target_ay = tr->frames[k].ay;
      s.vehicle_id = id;
      s.t = tr->frames[k].t;
      out.push_back(s);
    }
  }
  return out;
}

/// Samples from every track in the dataset.
inline std::vector<ActionSample> extract_samples(const TrajectoryDataset & ds)
{
  std::vector<VehicleId> ids;
  for (const auto & tr : ds.tracks) ids.push_back(tr.vehicle_id);
  return extract_samples(ds, ids);
}

/// Debug dump: 48 window values (row-major, oldest first) then ax, ay.
inline void write_sample_dump(const std::vector<ActionSample> & samples, const std::filesystem::path & path)
{
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  static constexpr std::array<std::string_view, kStateDim> names = {
    "vx", "vy", "ax_prev", "ay_prev", "ttc_front", "ttc_back", "ttc_left", "ttc_right",
    "ttc_front_left", "ttc_front_right", "ttc_back_left", "ttc_back_right"};
  bool first = true;
  for (std::size_t r = 0; r < kWindowFrames; ++r) {
    for (const auto n : names) {
      out << (first ? "" : ",") << n << "_t" << (static_cast<int>(r) - 3);
      first = false;
    }
  }
  out << ",target_ax,target_ay\n";
  for (const auto & s : samples) {
    for (const auto & row : s.window.rows) {
      for (const double v : row) out << csv::format_double(v) << ',';
    }
    out << csv::format_double(s.target_ax) << ',' << csv::format_double(s.target_ay) << '\n';
  }
}

}  // namespace culture_bridge

#endif  // CULTURE_BRIDGE__FEATURIZE_HPP_
