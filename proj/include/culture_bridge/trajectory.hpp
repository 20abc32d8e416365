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

#ifndef CULTURE_BRIDGE__TRAJECTORY_HPP_
#define CULTURE_BRIDGE__TRAJECTORY_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "culture_bridge/csv.hpp"
#include "culture_bridge/error.hpp"

// Trajectory data model. Units are SI throughout: x is longitudinal along the
// road, y is lateral and grows to the left. Lane ids run 1..lane_count with
// lane centers ascending in y, so lane_id + 1 is the left neighbour lane.

namespace culture_bridge
{

using VehicleId = std::int64_t;

inline constexpr std::size_t kMinTrackFrames = 5;
inline constexpr double kDtTolerance = 1e-9;
inline constexpr double kFeetToMeters = 0.3048;
inline constexpr double kDefaultLaneWidth = 3.75;

struct Frame
{
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  double ax = 0.0;
  double ay = 0.0;
  int lane_id = 1;

  bool operator==(const Frame &) const = default;
};

struct VehicleTrack
{
  VehicleId vehicle_id = 0;
  std::vector<Frame> frames;
  double length = 4.5;
  double width = 1.8;

  bool operator==(const VehicleTrack &) const = default;
};

struct DatasetMeta
{
  std::string source = "unknown";
  bool units_si = true;
  /// Tracks whose behaviour is the learning target. Empty means every track.
  std::vector<VehicleId> ego_ids;
  std::size_t dropped_short_tracks = 0;

  bool operator==(const DatasetMeta &) const = default;
};

struct TrajectoryDataset
{
  std::vector<VehicleTrack> tracks;  // sorted by vehicle_id
  double dt = 0.0;
  int lane_count = 0;
  std::vector<double> lane_centers_y;
  DatasetMeta meta;

  const VehicleTrack * find(VehicleId id) const
  {
    const auto it = std::lower_bound(
      tracks.begin(), tracks.end(), id,
      [](const VehicleTrack & tr, VehicleId v) { return tr.vehicle_id < v; });
    return (it != tracks.end() && it->vehicle_id == id) ? &*it : nullptr;
  }

  /// Ids of tracks that produce learning samples and evaluation records.
  std::vector<VehicleId> sample_ids() const
  {
    if (!meta.ego_ids.empty()) return meta.ego_ids;
    std::vector<VehicleId> ids;
    ids.reserve(tracks.size());
    for (const auto & tr : tracks) ids.push_back(tr.vehicle_id);
    return ids;
  }

  std::size_t frame_count() const
  {
    std::size_t n = 0;
    for (const auto & tr : tracks) n += tr.frames.size();
    return n;
  }
};

/// Integer time step of t on the dataset clock.
inline std::int64_t time_key(double t, double dt) { return std::llround(t / dt); }

/// Lane whose center is nearest to y, ties to the lower id.
inline int nearest_lane(const std::vector<double> & centers, double y)
{
  int best = 1;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const double d = std::abs(centers[i] - y);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i) + 1;
    }
  }
  return best;
}

/// Throws on the first invariant violation of a constructed dataset.
inline void validate(const TrajectoryDataset & ds)
{
  if (!(ds.dt > 0.0)) throw Error(ErrorCode::InconsistentDt, "dt must be positive");
  if (ds.lane_count < 1 || ds.lane_centers_y.size() != static_cast<std::size_t>(ds.lane_count)) {
    throw Error(ErrorCode::InvalidConfig, "lane_centers_y must have lane_count entries");
  }
  for (std::size_t i = 1; i < ds.lane_centers_y.size(); ++i) {
    if (!(ds.lane_centers_y[i] > ds.lane_centers_y[i - 1])) {
      throw Error(ErrorCode::InvalidConfig, "lane centers must ascend with lane id");
    }
  }
  std::set<VehicleId> seen;
  for (const auto & tr : ds.tracks) {
    const auto id = std::to_string(tr.vehicle_id);
    if (!seen.insert(tr.vehicle_id).second) {
      throw Error(ErrorCode::MalformedRow, "duplicate vehicle_id " + id);
    }
    if (!(tr.length > 0.0) || !(tr.width > 0.0)) {
      throw Error(ErrorCode::MalformedRow, "non-positive size for vehicle " + id);
    }
    if (tr.frames.size() < kMinTrackFrames) {
      throw Error(ErrorCode::TrackTooShort, "vehicle " + id + " has fewer than 5 frames");
    }
    for (std::size_t k = 0; k < tr.frames.size(); ++k) {
      const auto & f = tr.frames[k];
      if (f.lane_id < 1 || f.lane_id > ds.lane_count) {
        throw Error(ErrorCode::MalformedRow, "lane_id out of range for vehicle " + id);
      }
      if (k == 0) continue;
      const double step = f.t - tr.frames[k - 1].t;
      if (!(step > 0.0)) throw Error(ErrorCode::NonMonotonicTime, "vehicle " + id);
      if (std::abs(step - ds.dt) > kDtTolerance) {
        throw Error(ErrorCode::InconsistentDt, "vehicle " + id + " frame " + std::to_string(k));
      }
    }
  }
  for (const auto e : ds.meta.ego_ids) {
    if (!seen.count(e)) throw Error(ErrorCode::UnknownVehicle, "ego id " + std::to_string(e));
  }
}

namespace detail
{

/// Drops tracks below the minimum length, keeping a count in the metadata.
inline void drop_short_tracks(TrajectoryDataset & ds)
{
  const auto before = ds.tracks.size();
  std::erase_if(ds.tracks, [](const VehicleTrack & tr) { return tr.frames.size() < kMinTrackFrames; });
  ds.meta.dropped_short_tracks += before - ds.tracks.size();
  if (!ds.meta.ego_ids.empty()) {
    std::erase_if(ds.meta.ego_ids, [&](VehicleId id) { return ds.find(id) == nullptr; });
  }
}

/// Renumbers raw lane labels 1..k by ascending mean lateral position.
inline void remap_lanes_by_position(TrajectoryDataset & ds)
{
  std::map<int, std::pair<double, std::size_t>> acc;
  for (const auto & tr : ds.tracks) {
    for (const auto & f : tr.frames) {
      auto & [sum, n] = acc[f.lane_id];
      sum += f.y;
      ++n;
    }
  }
  std::vector<std::pair<double, int>> order;
  for (const auto & [lane, s] : acc) order.emplace_back(s.first / static_cast<double>(s.second), lane);
  std::sort(order.begin(), order.end());
  std::map<int, int> relabel;
  ds.lane_centers_y.clear();
  for (std::size_t i = 0; i < order.size(); ++i) {
    relabel[order[i].second] = static_cast<int>(i) + 1;
    double center = order[i].first;
    // Two raw lanes with the same mean would break the ascending invariant.
    if (!ds.lane_centers_y.empty() && center <= ds.lane_centers_y.back()) {
      center = std::nextafter(ds.lane_centers_y.back(), std::numeric_limits<double>::infinity());
    }
    ds.lane_centers_y.push_back(center);
  }
  ds.lane_count = static_cast<int>(order.size());
  for (auto & tr : ds.tracks) {
    for (auto & f : tr.frames) f.lane_id = relabel.at(f.lane_id);
  }
}

/// Lane centers for lanes 1..max_id from observed positions; gaps interpolated.
inline std::vector<double> infer_lane_centers(const TrajectoryDataset & ds, int lane_count)
{
  std::vector<double> sum(lane_count, 0.0);
  std::vector<std::size_t> n(lane_count, 0);
  for (const auto & tr : ds.tracks) {
    for (const auto & f : tr.frames) {
      if (f.lane_id >= 1 && f.lane_id <= lane_count) {
        sum[f.lane_id - 1] += f.y;
        ++n[f.lane_id - 1];
      }
    }
  }
  std::vector<std::optional<double>> known(lane_count);
  for (int i = 0; i < lane_count; ++i) {
    if (n[i] > 0) known[i] = sum[i] / static_cast<double>(n[i]);
  }
  std::vector<double> centers(lane_count, 0.0);
  for (int i = 0; i < lane_count; ++i) {
    if (known[i]) {
      centers[i] = *known[i];
      continue;
    }
    int lo = i - 1;
    while (lo >= 0 && !known[lo]) --lo;
    int hi = i + 1;
    while (hi < lane_count && !known[hi]) ++hi;
    if (lo >= 0 && hi < lane_count) {
      centers[i] = *known[lo] + (*known[hi] - *known[lo]) * (i - lo) / static_cast<double>(hi - lo);
    } else if (lo >= 0) {
      centers[i] = *known[lo] + kDefaultLaneWidth * (i - lo);
    } else if (hi < lane_count) {
      centers[i] = *known[hi] - kDefaultLaneWidth * (hi - i);
    } else {
      centers[i] = kDefaultLaneWidth * i;
    }
  }
  return centers;
}

/// Sorts frames per track by time and rejects duplicate or gapped time stamps.
inline void sort_and_check_time(TrajectoryDataset & ds)
{
  for (auto & tr : ds.tracks) {
    std::stable_sort(tr.frames.begin(), tr.frames.end(),
                     [](const Frame & a, const Frame & b) { return a.t < b.t; });
    for (std::size_t k = 1; k < tr.frames.size(); ++k) {
      const double step = tr.frames[k].t - tr.frames[k - 1].t;
      if (!(step > 0.0)) {
        throw Error(ErrorCode::NonMonotonicTime,
                    "vehicle " + std::to_string(tr.vehicle_id) + " repeats a time stamp");
      }
      if (std::abs(step - ds.dt) > kDtTolerance) {
        throw Error(ErrorCode::InconsistentDt,
                    "vehicle " + std::to_string(tr.vehicle_id) + " has a frame gap");
      }
    }
  }
}

inline std::filesystem::path sidecar_path(const std::filesystem::path & csv_path)
{
  auto p = csv_path;
  p.replace_extension(".json");
  return p;
}

inline std::size_t require_column(const csv::Table & table, std::string_view name, const std::string & path)
{
  const auto col = table.column(name);
  if (!col) throw Error(ErrorCode::MissingColumn, std::string(name) + " in " + path);
  return *col;
}

inline double field_double(const std::vector<std::string_view> & f, std::size_t col, std::size_t line)
{
  const auto v = csv::to_double(f[col]);
  if (!v || !std::isfinite(*v)) {
    throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line) + " column " + std::to_string(col + 1));
  }
  return *v;
}

inline std::int64_t field_int(const std::vector<std::string_view> & f, std::size_t col, std::size_t line)
{
  const auto v = csv::to_int(f[col]);
  if (!v) throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line) + " column " + std::to_string(col + 1));
  return *v;
}

}  // namespace detail

inline const std::vector<std::string> & canonical_columns()
{
  static const std::vector<std::string> cols = {
    "vehicle_id", "t", "x", "y", "vx", "vy", "ax", "ay", "lane_id", "length", "width"};
  return cols;
}

// ---------------------------------------------------------------------------
// Sidecar JSON

inline nlohmann::json sidecar_json(const TrajectoryDataset & ds)
{
  nlohmann::json j;
  j["dt"] = ds.dt;
  j["lane_count"] = ds.lane_count;
  j["lane_centers_y"] = ds.lane_centers_y;
  j["source"] = ds.meta.source;
  j["units_si"] = ds.meta.units_si;
  if (!ds.meta.ego_ids.empty()) j["ego_ids"] = ds.meta.ego_ids;
  return j;
}

inline void apply_sidecar(TrajectoryDataset & ds, const nlohmann::json & j)
{
  try {
    ds.dt = j.at("dt").get<double>();
    ds.lane_count = j.at("lane_count").get<int>();
    ds.lane_centers_y = j.at("lane_centers_y").get<std::vector<double>>();
    ds.meta.source = j.value("source", std::string("unknown"));
    ds.meta.units_si = j.value("units_si", true);
    ds.meta.ego_ids = j.value("ego_ids", std::vector<VehicleId>{});
  } catch (const nlohmann::json::exception & e) {
    throw Error(ErrorCode::InvalidConfig, std::string("sidecar: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Canonical CSV

/// Reads the canonical CSV and, when present, the sidecar next to it
/// (same stem, .json). Without a sidecar dt and lane geometry are inferred.
inline TrajectoryDataset parse_canonical_csv(const std::filesystem::path & path)
{
  const auto p = path.string();
  const auto table = csv::read_table(p);
  const auto & cols = canonical_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i >= table.header.size() || table.header[i] != cols[i]) {
      const auto present = table.column(cols[i]);
      throw Error(ErrorCode::MissingColumn,
                  cols[i] + (present ? " out of canonical order" : " absent") + " in " + p);
    }
  }
  if (table.header.size() != cols.size()) {
    throw Error(ErrorCode::MissingColumn, "unexpected extra columns in " + p);
  }

  TrajectoryDataset ds;
  const auto side = detail::sidecar_path(path);
  const bool have_sidecar = std::filesystem::exists(side);
  if (have_sidecar) {
    std::ifstream in(side);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception & e) {
      throw Error(ErrorCode::InvalidConfig, side.string() + ": " + e.what());
    }
    apply_sidecar(ds, j);
  } else {
    ds.meta.source = "canonical";
  }

  std::map<VehicleId, VehicleTrack> by_id;
  for (std::size_t r = 0; r < table.lines.size(); ++r) {
    const auto line = table.line_numbers[r];
    const auto f = csv::split(table.lines[r]);
    if (f.size() != cols.size()) {
      throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line) + " has " +
                                              std::to_string(f.size()) + " fields");
    }
    const auto id = detail::field_int(f, 0, line);
    Frame fr;
    fr.t = detail::field_double(f, 1, line);
    fr.x = detail::field_double(f, 2, line);
    fr.y = detail::field_double(f, 3, line);
    fr.vx = detail::field_double(f, 4, line);
    fr.vy = detail::field_double(f, 5, line);
    fr.ax = detail::field_double(f, 6, line);
    fr.ay = detail::field_double(f, 7, line);
    fr.lane_id = static_cast<int>(detail::field_int(f, 8, line));
    auto [it, inserted] = by_id.try_emplace(id);
    auto & tr = it->second;
    if (inserted) {
      tr.vehicle_id = id;
      tr.length = detail::field_double(f, 9, line);
      tr.width = detail::field_double(f, 10, line);
      if (!(tr.length > 0.0) || !(tr.width > 0.0)) {
        throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line) + " non-positive size");
      }
    } else if (!(fr.t > tr.frames.back().t)) {
      throw Error(ErrorCode::NonMonotonicTime,
                  "vehicle " + std::to_string(id) + " at line " + std::to_string(line));
    }
    tr.frames.push_back(fr);
  }

  if (!have_sidecar) {
    for (const auto & [id, tr] : by_id) {
      if (tr.frames.size() >= 2) {
        ds.dt = tr.frames[1].t - tr.frames[0].t;
        break;
      }
    }
    if (!(ds.dt > 0.0)) throw Error(ErrorCode::InconsistentDt, "cannot infer dt from " + p);
  }
  for (const auto & [id, tr] : by_id) {
    for (std::size_t k = 1; k < tr.frames.size(); ++k) {
      if (std::abs(tr.frames[k].t - tr.frames[k - 1].t - ds.dt) > kDtTolerance) {
        throw Error(ErrorCode::InconsistentDt,
                    "vehicle " + std::to_string(id) + " frame " + std::to_string(k));
      }
    }
  }
  for (auto & [id, tr] : by_id) ds.tracks.push_back(std::move(tr));

  if (!have_sidecar) {
    int max_lane = 0;
    for (const auto & tr : ds.tracks) {
      for (const auto & f : tr.frames) max_lane = std::max(max_lane, f.lane_id);
    }
    ds.lane_count = max_lane;
    ds.lane_centers_y = detail::infer_lane_centers(ds, max_lane);
  }
  detail::drop_short_tracks(ds);
  validate(ds);
  return ds;
}

/// Writes the canonical CSV plus its sidecar. Doubles are written in shortest
/// round-trip form so a re-read reproduces every field exactly.
inline void write_canonical_csv(const TrajectoryDataset & ds, const std::filesystem::path & path)
{
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  const auto & cols = canonical_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  using csv::format_double;
  for (const auto & tr : ds.tracks) {
    for (const auto & f : tr.frames) {
      out << tr.vehicle_id << ',' << format_double(f.t) << ',' << format_double(f.x) << ','
          << format_double(f.y) << ',' << format_double(f.vx) << ',' << format_double(f.vy) << ','
          << format_double(f.ax) << ',' << format_double(f.ay) << ',' << f.lane_id << ','
          << format_double(tr.length) << ',' << format_double(tr.width) << '\n';
    }
  }
  std::ofstream side(detail::sidecar_path(path));
  if (!side) throw Error(ErrorCode::Io, "cannot write sidecar for " + path.string());
  side << sidecar_json(ds).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Importers

/// HighD-style tracks file: frame index at 25 Hz, SI units. Optional `width`
/// and `height` columns carry the bounding box along x and y.
inline TrajectoryDataset import_highd_like(const std::filesystem::path & path)
{
  constexpr double kRate = 25.0;
  const auto p = path.string();
  const auto table = csv::read_table(p);
  using detail::require_column;
  const auto c_frame = require_column(table, "frame", p);
  const auto c_id = require_column(table, "id", p);
  const auto c_x = require_column(table, "x", p);
  const auto c_y = require_column(table, "y", p);
  const auto c_vx = require_column(table, "xVelocity", p);
  const auto c_vy = require_column(table, "yVelocity", p);
  const auto c_ax = require_column(table, "xAcceleration", p);
  const auto c_ay = require_column(table, "yAcceleration", p);
  const auto c_lane = require_column(table, "laneId", p);
  const auto c_len = table.column("width");
  const auto c_wid = table.column("height");

  TrajectoryDataset ds;
  ds.dt = 1.0 / kRate;
  ds.meta.source = "highd";
  std::map<VehicleId, VehicleTrack> by_id;
  for (std::size_t r = 0; r < table.lines.size(); ++r) {
    const auto line = table.line_numbers[r];
    const auto f = csv::split(table.lines[r]);
    if (f.size() < table.header.size()) {
      throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line));
    }
    const auto id = detail::field_int(f, c_id, line);
    Frame fr;
    fr.t = static_cast<double>(detail::field_int(f, c_frame, line)) / kRate;
    fr.x = detail::field_double(f, c_x, line);
    fr.y = detail::field_double(f, c_y, line);
    fr.vx = detail::field_double(f, c_vx, line);
    fr.vy = detail::field_double(f, c_vy, line);
    fr.ax = detail::field_double(f, c_ax, line);
    fr.ay = detail::field_double(f, c_ay, line);
    fr.lane_id = static_cast<int>(detail::field_int(f, c_lane, line));
    auto [it, inserted] = by_id.try_emplace(id);
    if (inserted) {
      it->second.vehicle_id = id;
      if (c_len) it->second.length = detail::field_double(f, *c_len, line);
      if (c_wid) it->second.width = detail::field_double(f, *c_wid, line);
    }
    it->second.frames.push_back(fr);
  }
  for (auto & [id, tr] : by_id) ds.tracks.push_back(std::move(tr));
  detail::sort_and_check_time(ds);
  detail::drop_short_tracks(ds);
  detail::remap_lanes_by_position(ds);
  validate(ds);
  return ds;
}

namespace detail
{

/// Central differences inside, one-sided at both ends.
inline std::vector<double> differentiate(const std::vector<double> & v, double dt)
{
  const auto n = v.size();
  std::vector<double> d(n, 0.0);
  if (n < 2) return d;
  d[0] = (v[1] - v[0]) / dt;
  d[n - 1] = (v[n - 1] - v[n - 2]) / dt;
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (v[i + 1] - v[i - 1]) / (2.0 * dt);
  return d;
}

}  // namespace detail

/// NGSIM-style export: 10 Hz, feet. Local_Y runs along the road and becomes
/// x; Local_X is lateral and becomes y. Per-axis velocity and acceleration
/// are derived from the converted positions by finite differences.
inline TrajectoryDataset import_ngsim_like(const std::filesystem::path & path)
{
  constexpr double kRate = 10.0;
  const auto p = path.string();
  const auto table = csv::read_table(p);
  using detail::require_column;
  const auto c_id = require_column(table, "Vehicle_ID", p);
  const auto c_frame = require_column(table, "Frame_ID", p);
  const auto c_lx = require_column(table, "Local_X", p);
  const auto c_ly = require_column(table, "Local_Y", p);
  require_column(table, "v_Vel", p);
  require_column(table, "v_Acc", p);
  const auto c_lane = require_column(table, "Lane_ID", p);
  const auto c_len = table.column("v_Length");
  const auto c_wid = table.column("v_Width");

  TrajectoryDataset ds;
  ds.dt = 1.0 / kRate;
  ds.meta.source = "ngsim";
  std::map<VehicleId, VehicleTrack> by_id;
  for (std::size_t r = 0; r < table.lines.size(); ++r) {
    const auto line = table.line_numbers[r];
    const auto f = csv::split(table.lines[r]);
    if (f.size() < table.header.size()) {
      throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line));
    }
    const auto id = detail::field_int(f, c_id, line);
    Frame fr;
    fr.t = static_cast<double>(detail::field_int(f, c_frame, line)) / kRate;
    fr.x = detail::field_double(f, c_ly, line) * kFeetToMeters;
    fr.y = detail::field_double(f, c_lx, line) * kFeetToMeters;
    fr.lane_id = static_cast<int>(detail::field_int(f, c_lane, line));
    auto [it, inserted] = by_id.try_emplace(id);
    if (inserted) {
      it->second.vehicle_id = id;
      if (c_len) it->second.length = detail::field_double(f, *c_len, line) * kFeetToMeters;
      if (c_wid) it->second.width = detail::field_double(f, *c_wid, line) * kFeetToMeters;
    }
    it->second.frames.push_back(fr);
  }
  for (auto & [id, tr] : by_id) ds.tracks.push_back(std::move(tr));
  detail::sort_and_check_time(ds);
  for (auto & tr : ds.tracks) {
    std::vector<double> xs, ys;
    for (const auto & f : tr.frames) {
      xs.push_back(f.x);
      ys.push_back(f.y);
    }
    const auto vx = detail::differentiate(xs, ds.dt);
    const auto vy = detail::differentiate(ys, ds.dt);
    const auto ax = detail::differentiate(vx, ds.dt);
    const auto ay = detail::differentiate(vy, ds.dt);
    for (std::size_t k = 0; k < tr.frames.size(); ++k) {
      tr.frames[k].vx = vx[k];
      tr.frames[k].vy = vy[k];
      tr.frames[k].ax = ax[k];
      tr.frames[k].ay = ay[k];
    }
  }
  detail::drop_short_tracks(ds);
  detail::remap_lanes_by_position(ds);
  validate(ds);
  return ds;
}

// ---------------------------------------------------------------------------
// Fractional slices

/// Picks ceil(fraction * ids.size()) ids without replacement, returned in
/// their input order. Deterministic for a given seed.
inline std::vector<VehicleId> select_fraction(const std::vector<VehicleId> & ids, double fraction,
                                              std::uint64_t seed)
{
  if (!(fraction > 0.0) || fraction > 1.0) {
    throw Error(ErrorCode::FractionOutOfRange, "fraction must lie in (0, 1]");
  }
  const double want = fraction * static_cast<double>(ids.size());
  if (want < 1.0 - 1e-9) {
    throw Error(ErrorCode::FractionOutOfRange, "fraction selects less than one track");
  }
  // Guard against 0.02 * 100 landing a hair above 2.
  const auto k = static_cast<std::size_t>(std::ceil(want - 1e-9));
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(k);
  std::sort(order.begin(), order.end());
  std::vector<VehicleId> out;
  out.reserve(k);
  for (const auto i : order) out.push_back(ids[i]);
  return out;
}

/// Dataset restricted to the given track ids; geometry and clock preserved.
inline TrajectoryDataset subset(const TrajectoryDataset & ds, const std::vector<VehicleId> & ids)
{
  const std::set<VehicleId> keep(ids.begin(), ids.end());
  TrajectoryDataset out;
  out.dt = ds.dt;
  out.lane_count = ds.lane_count;
  out.lane_centers_y = ds.lane_centers_y;
  out.meta = ds.meta;
  for (const auto & tr : ds.tracks) {
    if (keep.count(tr.vehicle_id)) out.tracks.push_back(tr);
  }
  std::erase_if(out.meta.ego_ids, [&](VehicleId id) { return !keep.count(id); });
  return out;
}

/// Data-light slice over whole tracks.
inline TrajectoryDataset sample_fraction(const TrajectoryDataset & ds, double fraction, std::uint64_t seed)
{
  std::vector<VehicleId> ids;
  ids.reserve(ds.tracks.size());
  for (const auto & tr : ds.tracks) ids.push_back(tr.vehicle_id);
  return subset(ds, select_fraction(ids, fraction, seed));
}

}  // namespace culture_bridge

#endif  // CULTURE_BRIDGE__TRAJECTORY_HPP_
