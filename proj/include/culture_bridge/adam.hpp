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

#ifndef CULTURE_BRIDGE__ADAM_HPP_
#define CULTURE_BRIDGE__ADAM_HPP_

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace culture_bridge
{

struct AdamParams
{
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam over a flat parameter vector:
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
///   x <- x - alpha * m_hat / (sqrt(v_hat) + eps)
class AdamOptimizer
{
public:
  AdamOptimizer(std::size_t size, AdamParams params) : params_(params), m_(size, 0.0), v_(size, 0.0) {}

  /// Applies one update in place. Returns the squared L2 norm of the step.
  double step(std::span<double> x, std::span<const double> grad)
  {
    ++t_;
    const double c1 = 1.0 - std::pow(params_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(params_.beta2, static_cast<double>(t_));
    double norm2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      m_[i] = params_.beta1 * m_[i] + (1.0 - params_.beta1) * grad[i];
      v_[i] = params_.beta2 * v_[i] + (1.0 - params_.beta2) * grad[i] * grad[i];
      const double m_hat = m_[i] / c1;
      const double v_hat = v_[i] / c2;
      const double delta = params_.alpha * m_hat / (std::sqrt(v_hat) + params_.epsilon);
      x[i] -= delta;
      norm2 += delta * delta;
    }
    return norm2;
  }

  std::uint64_t steps() const { return t_; }
  const std::vector<double> & first_moment() const { return m_; }
  const std::vector<double> & second_moment() const { return v_; }
  const AdamParams & params() const { return params_; }

private:
  AdamParams params_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::uint64_t t_ = 0;
};

}  // namespace culture_bridge

#endif  // CULTURE_BRIDGE__ADAM_HPP_
