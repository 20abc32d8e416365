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

#ifndef CULTURE_BRIDGE__SYNTH_HPP_
#define CULTURE_BRIDGE__SYNTH_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "culture_bridge/error.hpp"
#include "culture_bridge/featurize.hpp"
#include "culture_bridge/kinematics.hpp"
#include "culture_bridge/trajectory.hpp"

// Synthetic driving cultures. Ego vehicles act through a fixed nonlinear
// feature map phi*(state) weighted by a per-axis culture vector, so every
// ego action is exactly linear in the culture. Neighbours are IDM followers
// with scripted lane changes.

namespace culture_bridge
{

inline constexpr double kSynthDt = 0.2;
inline constexpr std::size_t kFeatureDim = 12;

/// Tanh of a fixed 12x12 projection of the scaled last state of a window.
///
/// Each row is one driving drive with seeded gains:
///   0 speed keeping         1 braking on front risk   2 yielding to back risk
///   3 back-diagonal risk    4 front-diagonal caution  5 alongside caution
///   6 lateral damping       7 lateral inertia         8..11 mixed lateral
/// The lateral rows read only lateral speed and previous lateral
/// acceleration, so they vanish for a vehicle at lateral rest.
struct GroundTruthFeatureMap
{
  std::array<std::array<double, kStateDim>, kFeatureDim> projection{};
  std::string nonlinearity = "tanh";
  std::uint64_t seed = 0;

  static GroundTruthFeatureMap from_seed(std::uint64_t seed)
  {
    GroundTruthFeatureMap m;
    m.seed = seed;
    std::mt19937_64 rng(seed);
    const auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    auto & p = m.projection;
    p[0][0] = -u(4.0, 8.0);
    p[1][4] = -u(3.0, 5.0);
    p[2][5] = u(2.0, 4.0);
    p[3][10] = p[3][11] = u(2.0, 4.0);
    p[4][8] = p[4][9] = -u(2.0, 4.0);
    p[5][6] = p[5][7] = -u(2.0, 4.0);
    p[6][1] = -u(1.0, 3.0);
    p[7][3] = u(0.3, 0.8);
    for (std::size_t j = 8; j < kFeatureDim; ++j) {
      p[j][1] = -u(0.3, 1.5);
      p[j][3] = u(-0.8, 0.8);
    }
    return m;
  }

  Vec12 operator()(const StateVector & state) const
  {
    const auto z = normalize_state(state);
    Vec12 out{};
    for (std::size_t j = 0; j < kFeatureDim; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < kStateDim; ++i) acc += projection[j][i] * z[i];
      out[j] = std::tanh(acc);
    }
    return out;
  }
};

inline Vec12 eval_ground_truth(const GroundTruthFeatureMap & map, const StateWindow & window)
{
  return map(window.last());
}

struct IdmParams
{
  double desired_speed = 30.0;       // m/s
  double time_headway = 1.5;         // s
  double max_accel = 1.0;            // m/s^2
  double comfortable_decel = 2.0;    // m/s^2
  double min_gap = 2.0;              // m
};

struct CultureSpec
{
  Vec12 w_true_x{0.6, 0.8, 0.4, 0.4, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  Vec12 w_true_y{0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.6, 0.6, 1.0, 0.8, 0.6, 0.6};
  double noise_sigma = 0.05;
  IdmParams neighbor;
  double lane_change_rate = 0.2;
  std::uint64_t feature_map_seed = 2024;
  int lane_count = 3;
  double lane_width = kDefaultLaneWidth;
};

/// Throws InvalidCultureSpec naming the first offending field.
inline void validate(const CultureSpec & spec)
{
  const auto bad = [](const std::string & field, const std::string & why) {
    throw Error(ErrorCode::InvalidCultureSpec, field + " " + why);
  };
  for (std::size_t i = 0; i < kFeatureDim; ++i) {
    if (!std::isfinite(spec.w_true_x[i])) bad("w_true_x", "must be finite");
    if (!std::isfinite(spec.w_true_y[i])) bad("w_true_y", "must be finite");
  }
  if (!(spec.noise_sigma >= 0.0)) bad("noise_sigma", "must be >= 0");
  if (!(spec.neighbor.desired_speed > 0.0)) bad("neighbor_params.desired_speed", "must be > 0");
  if (!(spec.neighbor.time_headway > 0.0)) bad("neighbor_params.time_headway", "must be > 0");
  if (!(spec.neighbor.max_accel > 0.0)) bad("neighbor_params.max_accel", "must be > 0");
  if (!(spec.neighbor.comfortable_decel > 0.0)) bad("neighbor_params.comfortable_decel", "must be > 0");
  if (!(spec.neighbor.min_gap > 0.0)) bad("neighbor_params.min_gap", "must be > 0");
  if (!(spec.lane_change_rate >= 0.0 && spec.lane_change_rate <= 1.0)) {
    bad("lane_change_rate", "must lie in [0, 1]");
  }
  if (spec.lane_count < 1) bad("lane_count", "must be >= 1");
  if (!(spec.lane_width > 0.0)) bad("lane_width", "must be > 0");
}

inline nlohmann::json to_json(const CultureSpec & s)
{
  return {
    {"w_true_x", s.w_true_x},
    {"w_true_y", s.w_true_y},
    {"noise_sigma", s.noise_sigma},
    {"neighbor_params",
     {{"desired_speed", s.neighbor.desired_speed},
      {"time_headway", s.neighbor.time_headway},
      {"max_accel", s.neighbor.max_accel},
      {"comfortable_decel", s.neighbor.comfortable_decel},
      {"min_gap", s.neighbor.min_gap}}},
    {"lane_change_rate", s.lane_change_rate},
    {"feature_map_seed", s.feature_map_seed},
    {"lane_count", s.lane_count},
    {"lane_width", s.lane_width},
  };
}

/// Missing keys keep their defaults; type errors name the field.
inline CultureSpec culture_spec_from_json(const nlohmann::json & j)
{
  CultureSpec s;
  const auto read = [&](const nlohmann::json & obj, const char * key, auto & dst, const std::string & path) {
    if (!obj.contains(key)) return;
    try {
      obj.at(key).get_to(dst);
    } catch (const nlohmann::json::exception &) {
      throw Error(ErrorCode::InvalidCultureSpec, path + key + " has the wrong type or length");
    }
  };
  if (!j.is_object()) throw Error(ErrorCode::InvalidCultureSpec, "culture spec must be an object");
  read(j, "w_true_x", s.w_true_x, "");
  read(j, "w_true_y", s.w_true_y, "");
  read(j, "noise_sigma", s.noise_sigma, "");
  read(j, "lane_change_rate", s.lane_change_rate, "");
  read(j, "feature_map_seed", s.feature_map_seed, "");
  read(j, "lane_count", s.lane_count, "");
  read(j, "lane_width", s.lane_width, "");
  if (j.contains("neighbor_params")) {
    const auto & n = j.at("neighbor_params");
    read(n, "desired_speed", s.neighbor.desired_speed, "neighbor_params.");
    read(n, "time_headway", s.neighbor.time_headway, "neighbor_params.");
    read(n, "max_accel", s.neighbor.max_accel, "neighbor_params.");
    read(n, "comfortable_decel", s.neighbor.comfortable_decel, "neighbor_params.");
    read(n, "min_gap", s.neighbor.min_gap, "neighbor_params.");
  }
  validate(s);
  return s;
}

/// IDM acceleration; `gap` is bumper-to-bumper, absent leader = free road.
inline double idm_accel(const IdmParams & p, double v, std::optional<std::pair<double, double>> leader_gap_speed)
{
  double a = p.max_accel * (1.0 - std::pow(v / p.desired_speed, 4));
  if (leader_gap_speed) {
    const auto [gap, v_lead] = *leader_gap_speed;
    const double s_star = p.min_gap + std::max(0.0, v * p.time_headway +
                                                        v * (v - v_lead) / (2.0 * std::sqrt(p.max_accel * p.comfortable_decel)));
    const double s = std::max(gap, 0.1);
    a -= p.max_accel * (s_star / s) * (s_star / s);
  }
  return std::max(a, -9.0);
}

namespace detail
{

struct LaneChangePlan
{
  double start = 0.0;
  double y_from = 0.0;
  double y_to = 0.0;
};

inline constexpr double kLaneChangeDuration = 3.0;

/// Smooth lateral profile with zero lateral speed at both ends.
inline void lateral_profile(const LaneChangePlan & plan, double t, double & y, double & vy, double & ay)
{
  constexpr double kTwoPi = 6.283185307179586;
  const double T = kLaneChangeDuration;
  const double tau = std::clamp(t - plan.start, 0.0, T);
  const double dy = plan.y_to - plan.y_from;
  y = plan.y_from + dy * (tau / T - std::sin(kTwoPi * tau / T) / kTwoPi);
  const bool active = t > plan.start && t < plan.start + T;
  vy = active ? dy / T * (1.0 - std::cos(kTwoPi * tau / T)) : 0.0;
  ay = active ? dy / T * (kTwoPi / T) * std::sin(kTwoPi * tau / T) : 0.0;
}

}  // namespace detail

/// Scripted highway world. Vehicle i (id i + 1) is an ego when i is even.
inline TrajectoryDataset gen_world(const CultureSpec & spec, int n_tracks, double duration, std::uint64_t seed)
{
  validate(spec);
  if (n_tracks < 2) throw Error(ErrorCode::InvalidConfig, "gen_world needs n_tracks >= 2");
  if (!(duration >= 5.0)) throw Error(ErrorCode::InvalidConfig, "gen_world needs duration >= 5 s");

  const auto map = GroundTruthFeatureMap::from_seed(spec.feature_map_seed);
  const double dt = kSynthDt;
  const auto n_frames = static_cast<std::size_t>(std::floor(duration / dt + 1e-9)) + 1;
  std::mt19937_64 setup_rng(seed);
  std::mt19937_64 noise_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(setup_rng); };
  std::normal_distribution<double> noise(0.0, 1.0);

  TrajectoryDataset ds;
  ds.dt = dt;
  ds.lane_count = spec.lane_count;
  for (int k = 0; k < spec.lane_count; ++k) ds.lane_centers_y.push_back(spec.lane_width * k);
  ds.meta.source = "synthetic";

  const auto n = static_cast<std::size_t>(n_tracks);
  std::vector<KinematicState> state(n);
  std::vector<bool> is_ego(n);
  std::vector<std::optional<detail::LaneChangePlan>> plan(n);
  ds.tracks.resize(n);
  std::vector<double> lane_head(spec.lane_count, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto & tr = ds.tracks[i];
    tr.vehicle_id = static_cast<VehicleId>(i + 1);
    tr.length = u(4.2, 5.0);
    tr.width = u(1.7, 2.0);
    tr.frames.reserve(n_frames);
    is_ego[i] = i % 2 == 0;
    const int lane = static_cast<int>(i % static_cast<std::size_t>(spec.lane_count)) + 1;
    lane_head[lane - 1] -= u(25.0, 60.0);
    state[i].x = lane_head[lane - 1];
    state[i].y = ds.lane_centers_y[lane - 1];
    state[i].vx = spec.neighbor.desired_speed * u(0.8, 1.0);
    state[i].lane_id = lane;
    const bool changes = u(0.0, 1.0) < spec.lane_change_rate;
    const double latest_start = duration - detail::kLaneChangeDuration - 1.5;
    if (!is_ego[i] && changes && spec.lane_count > 1 && latest_start > 0.0) {
      int target = lane + (u(0.0, 1.0) < 0.5 ? -1 : 1);
      if (target < 1) target = 2;
      if (target > spec.lane_count) target = spec.lane_count - 1;
      plan[i] = detail::LaneChangePlan{u(0.0, latest_start), state[i].y, ds.lane_centers_y[target - 1]};
    }
    if (is_ego[i]) ds.meta.ego_ids.push_back(tr.vehicle_id);
  }

  std::vector<double> prev_ax(n, 0.0), prev_ay(n, 0.0);
  std::vector<VehicleState> snapshot(n);
  for (std::size_t k = 0; k < n_frames; ++k) {
    const double t = dt * static_cast<double>(k);
    std::vector<double> scripted_ay(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (!plan[i]) continue;
      auto & s = state[i];
      detail::lateral_profile(*plan[i], t, s.y, s.vy, scripted_ay[i]);
      s.lane_id = nearest_lane(ds.lane_centers_y, s.y);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto & s = state[i];
      const auto & tr = ds.tracks[i];
      snapshot[i] = {tr.vehicle_id, s.x, s.y, s.vx, s.vy, s.lane_id, tr.length, tr.width};
    }
    for (std::size_t i = 0; i < n; ++i) {
      auto & s = state[i];
      double ax = 0.0;
      double ay = 0.0;
      if (is_ego[i]) {
        const auto slots = assign_neighbors(snapshot[i], snapshot);
        const auto phi = map(make_state(s.vx, s.vy, prev_ax[i], prev_ay[i], slots));
        ax = dot(phi, spec.w_true_x);
        ay = dot(phi, spec.w_true_y);
        if (spec.noise_sigma > 0.0) {
          ax += spec.noise_sigma * noise(noise_rng);
          ay += spec.noise_sigma * noise(noise_rng);
        }
      } else {
        std::optional<std::pair<double, double>> leader;
        const auto slots = assign_neighbors(snapshot[i], snapshot);
        const auto & front = slots[static_cast<std::size_t>(Direction::Front)];
        if (front.occupied()) leader = std::pair{front.d_x, s.vx - front.dv_x};
        ax = idm_accel(spec.neighbor, s.vx, leader);
        ay = scripted_ay[i];
      }
      ds.tracks[i].frames.push_back(Frame{t, s.x, s.y, s.vx, s.vy, ax, ay, s.lane_id});
      prev_ax[i] = ax;
      prev_ay[i] = ay;
    }

    if (k + 1 == kMinTrackFrames) {
      // Degenerate when every vehicle overlaps another one in its lane.
      bool all_collided = true;
      for (std::size_t i = 0; i < n && all_collided; ++i) {
        bool hit = false;
        for (std::size_t o = 0; o < n && !hit; ++o) {
          if (o == i || snapshot[o].lane_id != snapshot[i].lane_id) continue;
          const auto rel = relative_slot(Direction::Front, snapshot[i], snapshot[o]);
          hit = rel.d_x == 0.0 && rel.d_y == 0.0;
        }
        all_collided = hit;
      }
      if (all_collided) throw Error(ErrorCode::DegenerateWorld, "all vehicles collide during warm-up");
    }

    for (std::size_t i = 0; i < n; ++i) {
      const auto & f = ds.tracks[i].frames.back();
      if (is_ego[i]) {
        state[i] = step_ego(state[i], f.ax, f.ay, dt, ds.lane_centers_y);
      } else {
        // Lateral motion of neighbours follows the scripted profile exactly.
        const double y = state[i].y;
        const double vy = state[i].vy;
        state[i] = step_ego(state[i], f.ax, 0.0, dt);
        state[i].y = y;
        state[i].vy = vy;
      }
    }
  }
  validate(ds);
  return ds;
}

}  // namespace culture_bridge

#endif  // CULTURE_BRIDGE__SYNTH_HPP_
