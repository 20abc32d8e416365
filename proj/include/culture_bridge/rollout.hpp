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

#ifndef CULTURE_BRIDGE__ROLLOUT_HPP_
#define CULTURE_BRIDGE__ROLLOUT_HPP_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <concepts>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "culture_bridge/dlirl.hpp"
#include "culture_bridge/featurize.hpp"
#include "culture_bridge/kinematics.hpp"
#include "culture_bridge/trajectory.hpp"

namespace culture_bridge
{

/// Recorded frames replayed before the policy takes over.
inline constexpr std::size_t kWarmupFrames = 5;

struct RolloutConfig
{
  double action_bound = 5.0;
  bool teacher_forced = false;
  bool gpi_enabled = false;
  double gamma = 0.9;
  double gpi_half_width = 1.0;
  std::size_t gpi_per_axis = 5;
};

/// What a policy sees at one controlled frame.
struct PolicyInput
{
  const StateWindow & window;
  const TransitionContext & context;
  VehicleId vehicle_id;
  std::size_t frame;
  double t;
};

template <class P>
concept RolloutPolicy = requires(const P & p, const PolicyInput & in) {
  { p(in) } -> std::convertible_to<Action>;
};

/// Regressed action, or the GPI choice on a grid around it.
struct ModelPolicy
{
  const ArchetypeModel * model = nullptr;
  CultureVector culture;
  RolloutConfig config;

  Action operator()(const PolicyInput & in) const
  {
    const auto regressed = predict_action(*model, culture, in.window, config.action_bound);
    if (!config.gpi_enabled) return regressed;
    const auto grid = ActionGrid::around(regressed, config.gpi_half_width, config.gpi_per_axis);
    return gpi_select_action(*model, culture, in.window, grid, in.context, config.gamma, config.action_bound);
  }
};

/// Replays the recorded acceleration of the frame being controlled.
struct RecordedPolicy
{
  const VehicleTrack * track = nullptr;

  Action operator()(const PolicyInput & in) const
  {
    const auto & f = track->frames.at(in.frame);
    return {f.ax, f.ay};
  }
};

struct FrameRecord
{
  double t = 0.0;
  bool controlled = false;
  Action action;            // applied (simulated) acceleration
  Action reference_action;  // recorded acceleration
  std::optional<double> total_ttc;
  std::optional<double> reference_ttc;
  double dx = 0.0;  // simulated minus recorded position
  double dy = 0.0;
};

struct RolloutResult
{
  VehicleTrack simulated;
  VehicleTrack reference;
  std::vector<FrameRecord> records;
  double dt = 0.0;
  bool teacher_forced = false;
};

namespace detail
{

inline StateVector state_row(const SceneIndex & scene, const VehicleTrack & tr, std::size_t k)
{
  const auto & f = tr.frames[k];
  const auto & prev = tr.frames[k - 1];
  return make_state(f.vx, f.vy, prev.ax, prev.ay, scene.neighbors(state_of(tr, f), f.t));
}

inline std::vector<VehicleState> others_at(const SceneIndex & scene, VehicleId ego, double t)
{
  std::vector<VehicleState> out;
  for (const auto & v : scene.at(time_key(t, scene.dt()))) {
    if (v.id != ego) out.push_back(v);
  }
  return out;
}

}  // namespace detail

/// Drives one recorded vehicle with `policy` while every other vehicle
/// replays its recording. Frames 0-3 are copied; frame 4 keeps its recorded
/// kinematics and is the first controlled action. Teacher-forced mode feeds
/// recorded history to the policy and integrates each action one step from
/// the recorded state.
template <RolloutPolicy Policy>
RolloutResult run_rollout(const TrajectoryDataset & ds, const SceneIndex & scene, VehicleId vehicle_id,
                          const Policy & policy, const RolloutConfig & cfg = {})
{
  const auto * ref = ds.find(vehicle_id);
  if (!ref) throw Error(ErrorCode::UnknownVehicle, std::to_string(vehicle_id));
  const std::size_t n = ref->frames.size();
  if (n < kWarmupFrames) {
    throw Error(ErrorCode::TrackTooShort, "vehicle " + std::to_string(vehicle_id) + " has " + std::to_string(n) + " frames");
  }

  RolloutResult out;
  out.dt = ds.dt;
  out.teacher_forced = cfg.teacher_forced;
  out.reference = *ref;
  out.simulated = *ref;
  auto & sim = out.simulated.frames;

  const std::vector<StateVector> ref_rows = track_states(scene, *ref);
  std::vector<StateVector> sim_rows(n);
  for (std::size_t k = 1; k < kWarmupFrames - 1; ++k) sim_rows[k] = ref_rows[k];

  for (std::size_t k = kWarmupFrames - 1; k < n; ++k) {
    const auto & rows = cfg.teacher_forced ? ref_rows : sim_rows;
    if (!cfg.teacher_forced) sim_rows[k] = detail::state_row(scene, out.simulated, k);
    StateWindow window;
    for (std::size_t r = 0; r < kWindowFrames; ++r) window.rows[r] = rows[k + 1 - kWindowFrames + r];

    const auto & base = cfg.teacher_forced ? ref->frames[k] : sim[k];
    TransitionContext ctx;
    ctx.dt = ds.dt;
    ctx.ego = VehicleState{vehicle_id, base.x, base.y, base.vx, base.vy, base.lane_id, ref->length, ref->width};
    ctx.neighbors = detail::others_at(scene, vehicle_id, base.t);
    ctx.lane_centers_y = ds.lane_centers_y;

    const Action a = clamp_action(policy(PolicyInput{window, ctx, vehicle_id, k, base.t}), cfg.action_bound);
    sim[k].ax = a.ax;
    sim[k].ay = a.ay;
    if (k + 1 < n) {
      const auto next = step_ego(kinematic_state(base), a.ax, a.ay, ds.dt, ds.lane_centers_y);
      auto & f = sim[k + 1];
      f.x = next.x;
      f.y = next.y;
      f.vx = next.vx;
      f.vy = next.vy;
      f.lane_id = next.lane_id;
    }
  }

  out.records.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto & s = sim[k];
    const auto & r = ref->frames[k];
    auto & rec = out.records[k];
    rec.t = r.t;
    rec.controlled = k + 1 >= kWarmupFrames;
    rec.action = {s.ax, s.ay};
    rec.reference_action = {r.ax, r.ay};
    rec.total_ttc = total_ttc(scene.neighbors(state_of(out.simulated, s), s.t));
    rec.reference_ttc = total_ttc(scene.neighbors(state_of(*ref, r), r.t));
    rec.dx = s.x - r.x;
    rec.dy = s.y - r.y;
  }
  return out;
}

template <RolloutPolicy Policy>
RolloutResult run_rollout(const TrajectoryDataset & ds, VehicleId vehicle_id, const Policy & policy,
                          const RolloutConfig & cfg = {})
{
  const SceneIndex scene(ds);
  return run_rollout(ds, scene, vehicle_id, policy, cfg);
}

inline RolloutResult run_rollout(const TrajectoryDataset & ds, VehicleId vehicle_id, const ArchetypeModel & model,
                                 const CultureVector & w, const RolloutConfig & cfg = {})
{
  return run_rollout(ds, vehicle_id, ModelPolicy{&model, w, cfg}, cfg);
}

/// Rollouts of `ids` on up to `jobs` threads; results follow the order of `ids`.
/// The first exception thrown by any worker is rethrown.
template <class PolicyFactory>
std::vector<RolloutResult> run_rollouts(const TrajectoryDataset & ds, const std::vector<VehicleId> & ids,
                                        const PolicyFactory & make_policy, const RolloutConfig & cfg,
                                        std::size_t jobs = 1)
{
  const SceneIndex scene(ds);
  std::vector<RolloutResult> results(ids.size());
  std::vector<std::exception_ptr> errors(ids.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < ids.size(); i = next++) {
      try {
        results[i] = run_rollout(ds, scene, ids[i], make_policy(ids[i]), cfg);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(ids.size(), 1));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  for (const auto & e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

// ---------------------------------------------------------------------------
// Trace export

struct CaseReport
{
  VehicleId vehicle_id = 0;
  double mean_ttc_error = 0.0;  // s, frames where both TTCs exist
  double mean_ax_error = 0.0;   // m/s^2
  double mean_ay_error = 0.0;
  double max_path_deviation = 0.0;    // m
  double final_path_deviation = 0.0;  // m
  std::size_t controlled_frames = 0;
  std::size_t ttc_frames = 0;
};

/// Errors over the controlled frames of one rollout.
inline CaseReport case_report(const RolloutResult & r)
{
  CaseReport c;
  c.vehicle_id = r.reference.vehicle_id;
  double ttc_sum = 0.0, ax_sum = 0.0, ay_sum = 0.0;
  for (const auto & rec : r.records) {
    const double dev = std::hypot(rec.dx, rec.dy);
    c.max_path_deviation = std::max(c.max_path_deviation, dev);
    if (!rec.controlled) continue;
    ++c.controlled_frames;
    ax_sum += std::abs(rec.action.ax - rec.reference_action.ax);
    ay_sum += std::abs(rec.action.ay - rec.reference_action.ay);
    if (rec.total_ttc && rec.reference_ttc) {
      ttc_sum += std::abs(*rec.total_ttc - *rec.reference_ttc);
      ++c.ttc_frames;
    }
  }
  if (c.controlled_frames) {
    c.mean_ax_error = ax_sum / static_cast<double>(c.controlled_frames);
    c.mean_ay_error = ay_sum / static_cast<double>(c.controlled_frames);
  }
  if (c.ttc_frames) c.mean_ttc_error = ttc_sum / static_cast<double>(c.ttc_frames);
  if (!r.records.empty()) c.final_path_deviation = std::hypot(r.records.back().dx, r.records.back().dy);
  return c;
}

inline nlohmann::json to_json(const CaseReport & c)
{
  return {{"vehicle_id", c.vehicle_id},
          {"mean_ttc_error_s", c.mean_ttc_error},
          {"mean_ax_error", c.mean_ax_error},
          {"mean_ay_error", c.mean_ay_error},
          {"mean_action_error", 0.5 * (c.mean_ax_error + c.mean_ay_error)},
          {"max_path_deviation_m", c.max_path_deviation},
          {"final_path_deviation_m", c.final_path_deviation},
          {"controlled_frames", c.controlled_frames},
          {"ttc_frames", c.ttc_frames}};
}

/// Simulated tracks of `results` as one dataset on the source clock.
inline TrajectoryDataset simulated_dataset(const TrajectoryDataset & source, const std::vector<RolloutResult> & results)
{
  TrajectoryDataset ds;
  ds.dt = source.dt;
  ds.lane_count = source.lane_count;
  ds.lane_centers_y = source.lane_centers_y;
  ds.meta.source = "rollout";
  for (const auto & r : results) {
    ds.tracks.push_back(r.simulated);
    ds.meta.ego_ids.push_back(r.simulated.vehicle_id);
  }
  std::sort(ds.tracks.begin(), ds.tracks.end(),
            [](const VehicleTrack & a, const VehicleTrack & b) { return a.vehicle_id < b.vehicle_id; });
  std::sort(ds.meta.ego_ids.begin(), ds.meta.ego_ids.end());
  return ds;
}

/// Writes `<dir>/rollout.csv` (+ sidecar), `<dir>/records.csv` and
/// `<dir>/summary.json`.
inline void export_traces(const TrajectoryDataset & source, const std::vector<RolloutResult> & results,
                          const std::filesystem::path & dir)
{
  std::filesystem::create_directories(dir);
  write_canonical_csv(simulated_dataset(source, results), dir / "rollout.csv");

  std::ofstream rec(dir / "records.csv");
  if (!rec) throw Error(ErrorCode::Io, "cannot write " + (dir / "records.csv").string());
  rec << "vehicle_id,t,controlled,ax,ay,ref_ax,ref_ay,total_ttc,ref_total_ttc,dx,dy\n";
  using csv::format_double;
  const auto opt = [](const std::optional<double> & v) { return v ? format_double(*v) : std::string(); };
  for (const auto & r : results) {
    for (const auto & x : r.records) {
      rec << r.reference.vehicle_id << ',' << format_double(x.t) << ',' << (x.controlled ? 1 : 0) << ','
          << format_double(x.action.ax) << ',' << format_double(x.action.ay) << ','
          << format_double(x.reference_action.ax) << ',' << format_double(x.reference_action.ay) << ','
          << opt(x.total_ttc) << ',' << opt(x.reference_ttc) << ',' << format_double(x.dx) << ','
          << format_double(x.dy) << '\n';
    }
  }

  nlohmann::json cases = nlohmann::json::array();
  double ttc = 0.0, da = 0.0, dev = 0.0;
  for (const auto & r : results) {
    const auto c = case_report(r);
    cases.push_back(to_json(c));
    ttc += c.mean_ttc_error;
    da += 0.5 * (c.mean_ax_error + c.mean_ay_error);
    dev += c.final_path_deviation;
  }
  const double n = results.empty() ? 1.0 : static_cast<double>(results.size());
  nlohmann::json summary = {{"rollouts", results.size()},
                            {"teacher_forced", !results.empty() && results.front().teacher_forced},
                            {"mean_ttc_error_s", ttc / n},
                            {"mean_abs_action_error", da / n},
                            {"mean_final_path_deviation_m", dev / n},
                            {"cases", cases}};
  std::ofstream js(dir / "summary.json");
  if (!js) throw Error(ErrorCode::Io, "cannot write " + (dir / "summary.json").string());
  js << summary.dump(2) << '\n';
}

}  // namespace culture_bridge

#endif  // CULTURE_BRIDGE__ROLLOUT_HPP_
