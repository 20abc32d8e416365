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

#ifndef CULTURE_BRIDGE__BASELINE_HPP_
#define CULTURE_BRIDGE__BASELINE_HPP_

#include <span>

#include <Eigen/Dense>

#include "culture_bridge/dlirl.hpp"
#include "culture_bridge/featurize.hpp"

namespace culture_bridge
{

/// Localized regression model: per-axis ridge regression on the 48 scaled
/// window values plus a bias.
struct LinearBaseline
{
  static constexpr Eigen::Index kFeatures = kWindowFrames * kStateDim + 1;

  Vector beta_x = Vector::Zero(kFeatures);
  Vector beta_y = Vector::Zero(kFeatures);

  static Vector features(const StateWindow & window)
  {
    Vector f(kFeatures);
    for (std::size_t r = 0; r < kWindowFrames; ++r) {
      const auto z = normalize_state(window.rows[r]);
      for (std::size_t j = 0; j < kStateDim; ++j) f(static_cast<Eigen::Index>(r * kStateDim + j)) = z[j];
    }
    f(kFeatures - 1) = 1.0;
    return f;
  }

  static LinearBaseline fit(std::span<const ActionSample> samples, double lambda = kRidgeLambda)
  {
    if (samples.empty()) throw Error(ErrorCode::InsufficientData, "baseline needs samples");
    const auto n = static_cast<Eigen::Index>(samples.size());
    Eigen::MatrixXd x(n, kFeatures);
    Vector ax(n), ay(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto & s = samples[static_cast<std::size_t>(i)];
      x.row(i) = features(s.window).transpose();
      ax(i) = s.target_ax;
      ay(i) = s.target_ay;
    }
    const Eigen::MatrixXd normal = x.transpose() * x + lambda * Eigen::MatrixXd::Identity(kFeatures, kFeatures);
    const auto ldlt = normal.ldlt();
    LinearBaseline b;
    b.beta_x = ldlt.solve(x.transpose() * ax);
    b.beta_y = ldlt.solve(x.transpose() * ay);
    return b;
  }

  Action predict(const StateWindow & window) const
  {
    const Vector f = features(window);
    return {f.dot(beta_x), f.dot(beta_y)};
  }

  LossBreakdown loss(std::span<const ActionSample> samples) const
  {
    LossBreakdown l;
    if (samples.empty()) return l;
    for (const auto & s : samples) {
      const auto a = predict(s.window);
      l.mse_x += (a.ax - s.target_ax) * (a.ax - s.target_ax);
      l.mse_y += (a.ay - s.target_ay) * (a.ay - s.target_ay);
    }
    const auto n = static_cast<double>(samples.size());
    l.mse_x /= n;
    l.mse_y /= n;
    l.total = 0.5 * (l.mse_x + l.mse_y);
    return l;
  }
};

}  // namespace culture_bridge

#endif  // CULTURE_BRIDGE__BASELINE_HPP_
