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

// Independent reference implementations used by unit and acceptance tests.
// They re-derive results from raw inputs with the plainest code possible and
// share no helpers with the library beyond plain data types.

#ifndef CULTURE_BRIDGE_TESTS__ORACLES_HPP_
#define CULTURE_BRIDGE_TESTS__ORACLES_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "culture_bridge/dlirl.hpp"
#include "culture_bridge/featurize.hpp"
#include "culture_bridge/trajectory.hpp"

namespace cb_oracle
{

namespace cb = culture_bridge;

struct Car
{
  std::int64_t id;
  double x, y, vx, vy, length, width;
  int lane;
};

/// Random multi-lane scene; about one in five scenes repeats a longitudinal
/// offset so that nearest-neighbour ties occur.
inline std::vector<Car> random_scene(std::mt19937_64 & rng, int lanes = 3)
{
  std::uniform_int_distribution<int> n_cars(1, 14);
  std::uniform_int_distribution<int> lane(1, lanes);
  std::uniform_real_distribution<double> pos(-80.0, 80.0);
  std::uniform_real_distribution<double> speed(15.0, 35.0);
  std::uniform_real_distribution<double> lat(-0.8, 0.8);
  std::uniform_real_distribution<double> len(3.8, 12.0);
  std::uniform_real_distribution<double> wid(1.6, 2.6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = n_cars(rng);
  std::vector<Car> cars;
  for (int i = 0; i < n; ++i) {
    Car c;
    c.id = 100 + i;
    c.lane = lane(rng);
    c.x = pos(rng);
    c.y = 3.75 * (c.lane - 1) + 0.5 * lat(rng);
    c.vx = speed(rng);
    c.vy = lat(rng);
    c.length = len(rng);
    c.width = wid(rng);
    if (i > 1 && u(rng) < 0.2) c.x = 2.0 * cars[0].x - cars[i - 1].x;  // mirrored offset
    if (i > 0 && u(rng) < 0.1) c.vx = cars[0].vx;                       // equal speed
    cars.push_back(c);
  }
  return cars;
}

/// Direction index of `o` relative to ego, or -1 when outside every region.
/// Order: front, back, left, right, front_left, front_right, back_left, back_right.
inline int region(const Car & ego, const Car & o)
{
  const double dx = o.x - ego.x;
  if (o.lane == ego.lane) return dx >= 0.0 ? 0 : 1;
  if (o.lane == ego.lane + 1) {
    if (std::fabs(dx) <= ego.length / 2.0) return 2;
    return dx > 0.0 ? 4 : 6;
  }
  if (o.lane == ego.lane - 1) {
    if (std::fabs(dx) <= ego.length / 2.0) return 3;
    return dx > 0.0 ? 5 : 7;
  }
  return -1;
}

/// Axis term: gap over closing speed when closing faster than 1e-3 m/s.
inline std::optional<double> axis_term(double center_gap, double half_sizes, double rate_of_approach)
{
  if (!(rate_of_approach > 1e-3)) return std::nullopt;
  double gap = std::fabs(center_gap) - half_sizes;
  if (gap < 0.0) gap = 0.0;
  return std::min(gap / rate_of_approach, 100.0);
}

struct TtcResult
{
  std::array<std::optional<double>, 8> direction;
  std::array<std::optional<std::int64_t>, 8> occupant;
  std::optional<double> total;
};

/// Brute force over every car: each region picks the smallest |dx|, ties to
/// the lower id; TTC per region sums closing axis terms, capped at 100 s.
inline TtcResult ttc(const std::vector<Car> & cars, std::size_t ego_index)
{
  const Car & ego = cars[ego_index];
  TtcResult r;
  for (int d = 0; d < 8; ++d) {
    const Car * pick = nullptr;
    for (const Car & o : cars) {
      if (o.id == ego.id || region(ego, o) != d) continue;
      if (!pick) {
        pick = &o;
        continue;
      }
      const double a = std::fabs(o.x - ego.x), b = std::fabs(pick->x - ego.x);
      if (a < b || (a == b && o.id < pick->id)) pick = &o;
    }
    if (!pick) continue;
    r.occupant[d] = pick->id;
    const double gx = pick->x - ego.x, gy = pick->y - ego.y;
    // Approach rate: how fast the center distance shrinks on each axis.
    const double sx = gx >= 0.0 ? 1.0 : -1.0;
    const double sy = gy >= 0.0 ? 1.0 : -1.0;
    const auto tx = axis_term(gx, (ego.length + pick->length) / 2.0, sx * (ego.vx - pick->vx));
    const auto ty = axis_term(gy, (ego.width + pick->width) / 2.0, sy * (ego.vy - pick->vy));
    double v = 100.0;
    if (tx || ty) v = std::min(tx.value_or(0.0) + ty.value_or(0.0), 100.0);
    r.direction[d] = v;
  }
  double sum = 0.0;
  int n = 0;
  for (const auto & v : r.direction) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  if (n) r.total = sum / n;
  return r;
}

inline cb::TrajectoryDataset scene_dataset(const std::vector<Car> & cars, int lanes = 3)
{
  cb::TrajectoryDataset ds;
  ds.dt = 0.2;
  ds.lane_count = lanes;
  for (int k = 0; k < lanes; ++k) ds.lane_centers_y.push_back(3.75 * k);
  for (const auto & c : cars) {
    cb::VehicleTrack tr;
    tr.vehicle_id = c.id;
    tr.length = c.length;
    tr.width = c.width;
    tr.frames.push_back({0.0, c.x, c.y, c.vx, c.vy, 0.0, 0.0, c.lane});
    ds.tracks.push_back(tr);
  }
  std::sort(ds.tracks.begin(), ds.tracks.end(),
            [](const cb::VehicleTrack & a, const cb::VehicleTrack & b) { return a.vehicle_id < b.vehicle_id; });
  return ds;
}

// ---------------------------------------------------------------------------
// Style split

struct StyleInput
{
  std::int64_t id;
  double speed;
  double accel;
};

/// Labels 0/1/2 per input position from an explicit sort and split.
inline std::vector<int> style_labels(const std::vector<StyleInput> & in)
{
  const double n = static_cast<double>(in.size());
  double mv = 0, ma = 0;
  for (const auto & s : in) {
    mv += s.speed;
    ma += s.accel;
  }
  mv /= n;
  ma /= n;
  double vv = 0, va = 0;
  for (const auto & s : in) {
    vv += (s.speed - mv) * (s.speed - mv);
    va += (s.accel - ma) * (s.accel - ma);
  }
  const double sv = std::sqrt(vv / n), sa = std::sqrt(va / n);
  std::vector<std::pair<std::pair<double, std::int64_t>, std::size_t>> keyed;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double v = in[i].speed / sv, a = in[i].accel / sa;
    keyed.push_back({{v * v + a * a, in[i].id}, i});
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<int> labels(in.size());
  const std::size_t base = in.size() / 3, extra = in.size() % 3;
  const std::size_t c1 = base + (extra > 0 ? 1 : 0);
  const std::size_t c2 = c1 + base + (extra > 1 ? 1 : 0);
  for (std::size_t r = 0; r < keyed.size(); ++r) labels[keyed[r].second] = r < c1 ? 0 : (r < c2 ? 1 : 2);
  return labels;
}

// ---------------------------------------------------------------------------
// Adam

/// Textbook Adam with bias correction, one scalar at a time.
struct AdamReference
{
  double alpha, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  std::vector<double> m, v;
  int t = 0;

  void step(std::vector<double> & x, const std::vector<double> & g)
  {
    if (m.empty()) {
      m.assign(x.size(), 0.0);
      v.assign(x.size(), 0.0);
    }
    t += 1;
    for (std::size_t i = 0; i < x.size(); ++i) {
      m[i] = b1 * m[i] + (1 - b1) * g[i];
      v[i] = b2 * v[i] + (1 - b2) * g[i] * g[i];
      const double mh = m[i] / (1 - std::pow(b1, t));
      const double vh = v[i] / (1 - std::pow(b2, t));
      x[i] = x[i] - alpha * mh / (std::sqrt(vh) + eps);
    }
  }
};

// ---------------------------------------------------------------------------
// Scripted value model

/// Model whose Psi depends only on the last row's accelerations through
/// f(a) = tanh(b + c a) + tanh(b - c a), which is even and strictly
/// decreasing in |a|. Both axes share f; w = ones gives Q = f(ax) + f(ay / 0.5).
inline cb::ArchetypeModel even_value_model(double c = 0.8, double b = 0.4)
{
  cb::ArchetypeModel m = cb::ArchetypeModel::initialized({}, 1);
  const auto script = [&](cb::BranchNet & net, std::size_t input) {
    std::fill(net.params().begin(), net.params().end(), 0.0);
    const auto & shape = net.shape();
    for (const auto & blk : shape.blocks()) {
      auto p = net.params().subspan(blk.offset, blk.size());
      if (blk.name == "fusion.W") {
        p[0 * blk.cols + shape.hidden + input] = c;
        p[1 * blk.cols + shape.hidden + input] = -c;
      } else if (blk.name == "fusion.b") {
        p[0] = b;
        p[1] = b;
      } else if (blk.name == "psi.W") {
        p[0 * blk.cols + 0] = 1.0;
        p[0 * blk.cols + 1] = 1.0;
      }
    }
  };
  script(m.x, 2);
  script(m.y, 3);
  return m;
}

inline double even_value(double a, double c = 0.8, double b = 0.4) { return std::tanh(b + c * a) + std::tanh(b - c * a); }

}  // namespace cb_oracle

#endif  // CULTURE_BRIDGE_TESTS__ORACLES_HPP_
