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

#ifndef CULTURE_BRIDGE__KINEMATICS_HPP_
#define CULTURE_BRIDGE__KINEMATICS_HPP_

#include <algorithm>
#include <vector>

#include "culture_bridge/error.hpp"
#include "culture_bridge/trajectory.hpp"

namespace culture_bridge
{

struct KinematicState
{
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  int lane_id = 1;

  bool operator==(const KinematicState &) const = default;
};

/// One deterministic step under constant acceleration. Longitudinal speed
/// never goes negative. The lane is re-read from the nearest lane center
/// after the lateral update; with no lane geometry it is kept.
inline KinematicState step_ego(const KinematicState & s, double ax, double ay, double dt,
                               const std::vector<double> & lane_centers_y = {})
{
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidConfig, "step_ego needs dt > 0");
  KinematicState n;
  n.x = s.x + s.vx * dt + 0.5 * ax * dt * dt;
  n.y = s.y + s.vy * dt + 0.5 * ay * dt * dt;
  n.vx = std::max(0.0, s.vx + ax * dt);
  n.vy = s.vy + ay * dt;
  n.lane_id = lane_centers_y.empty() ? s.lane_id : nearest_lane(lane_centers_y, n.y);
  return n;
}

inline KinematicState kinematic_state(const Frame & f) { return {f.x, f.y, f.vx, f.vy, f.lane_id}; }

}  // namespace culture_bridge

#endif  // CULTURE_BRIDGE__KINEMATICS_HPP_
