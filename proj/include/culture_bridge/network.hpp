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

#ifndef CULTURE_BRIDGE__NETWORK_HPP_
#define CULTURE_BRIDGE__NETWORK_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "culture_bridge/featurize.hpp"

// One axis branch of the archetype network:
//
//   GRU over the four scaled window rows (hidden size H, h0 = 0)
//   g   = tanh(F [h_4; x_4] + c)          fusion, width K
//   Psi = V g + b                         successor features, 12
//   Phi = V_phi g + b_phi                 auxiliary cumulant head, 12
//
// All coefficients live in one flat vector, block by block in the order of
// BranchShape::blocks(), each block row-major.

namespace culture_bridge
{

inline constexpr std::size_t kPsiDim = 12;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;
using Vector = Eigen::VectorXd;

struct ParamBlock
{
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;

  std::size_t size() const { return rows * cols; }
};

struct BranchShape
{
  std::size_t input = kStateDim;
  std::size_t hidden = 32;
  std::size_t fusion = 12;

  bool operator==(const BranchShape &) const = default;

  std::vector<ParamBlock> blocks() const
  {
    const std::size_t D = input, H = hidden, K = fusion, P = kPsiDim;
    std::vector<ParamBlock> b = {
      {"gru.W_z", H, D}, {"gru.U_z", H, H}, {"gru.b_z", H, 1},
      {"gru.W_r", H, D}, {"gru.U_r", H, H}, {"gru.b_r", H, 1},
      {"gru.W_n", H, D}, {"gru.U_n", H, H}, {"gru.b_n", H, 1},
      {"fusion.W", K, H + D}, {"fusion.b", K, 1},
      {"psi.W", P, K}, {"psi.b", P, 1},
      {"phi.W", P, K}, {"phi.b", P, 1},
    };
    std::size_t off = 0;
    for (auto & blk : b) {
      blk.offset = off;
      off += blk.size();
    }
    return b;
  }

  std::size_t param_count() const
  {
    const auto b = blocks();
    return b.back().offset + b.back().size();
  }
};

/// Forward intermediates of one window, kept for backpropagation.
struct BranchTrace
{
  std::array<Vector, kWindowFrames> x;      // scaled rows
  std::array<Vector, kWindowFrames + 1> h;  // h[0] = 0
  std::array<Vector, kWindowFrames> z, r, n;
  Vector u;  // [h_4; x_4]
  Vector g;
  Vector psi;
  Vector phi;
};

namespace detail
{
inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }
}  // namespace detail

class BranchNet
{
public:
  BranchNet() = default;
  explicit BranchNet(BranchShape shape) : shape_(shape), params_(shape.param_count(), 0.0) { index(); }

  /// Glorot-uniform weights, zero biases.
  static BranchNet initialized(BranchShape shape, std::uint64_t seed)
  {
    BranchNet net(shape);
    std::mt19937_64 rng(seed);
    for (const auto & blk : shape.blocks()) {
      if (blk.cols == 1) continue;
      const double limit = std::sqrt(6.0 / static_cast<double>(blk.rows + blk.cols));
      std::uniform_real_distribution<double> dist(-limit, limit);
      for (std::size_t i = 0; i < blk.size(); ++i) net.params_[blk.offset + i] = dist(rng);
    }
    return net;
  }

  const BranchShape & shape() const { return shape_; }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t param_count() const { return params_.size(); }

  /// Full forward pass; `trace` receives every intermediate.
  void forward(const StateWindow & window, BranchTrace & trace) const
  {
    const std::size_t D = shape_.input, H = shape_.hidden;
    const auto W = [&](std::size_t i) { return cmat(i); };
    trace.h[0] = Vector::Zero(static_cast<Eigen::Index>(H));
    for (std::size_t s = 0; s < kWindowFrames; ++s) {
      const auto scaled = normalize_state(window.rows[s]);
      trace.x[s] = ConstVectorMap(scaled.data(), static_cast<Eigen::Index>(D));
      const Vector & x = trace.x[s];
      const Vector & h = trace.h[s];
      Vector z = W(kWz) * x + W(kUz) * h + cvec(kBz);
      Vector r = W(kWr) * x + W(kUr) * h + cvec(kBr);
      z = z.unaryExpr(&detail::sigmoid);
      r = r.unaryExpr(&detail::sigmoid);
      Vector n = (W(kWn) * x + W(kUn) * r.cwiseProduct(h) + cvec(kBn)).array().tanh().matrix();
      trace.h[s + 1] = (Vector::Ones(static_cast<Eigen::Index>(H)) - z).cwiseProduct(n) + z.cwiseProduct(h);
      trace.z[s] = std::move(z);
      trace.r[s] = std::move(r);
      trace.n[s] = std::move(n);
    }
    trace.u.resize(static_cast<Eigen::Index>(H + D));
    trace.u << trace.h[kWindowFrames], trace.x[kWindowFrames - 1];
    trace.g = (W(kF) * trace.u + cvec(kFb)).array().tanh().matrix();
    trace.psi = W(kV) * trace.g + cvec(kVb);
    trace.phi = W(kVphi) * trace.g + cvec(kVphib);
  }

  /// Accumulates dLoss/dtheta into `grad` given dLoss/dPsi and dLoss/dPhi.
  void backward(const BranchTrace & tr, const Vector & d_psi, const Vector * d_phi, std::span<double> grad) const
  {
    const std::size_t H = shape_.hidden;
    const auto W = [&](std::size_t i) { return cmat(i); };
    const auto G = [&](std::size_t i) { return gmat(grad, i); };
    const auto Gv = [&](std::size_t i) { return gvec(grad, i); };

    G(kV).noalias() += d_psi * tr.g.transpose();
    Gv(kVb) += d_psi;
    Vector d_g = W(kV).transpose() * d_psi;
    if (d_phi) {
      G(kVphi).noalias() += *d_phi * tr.g.transpose();
      Gv(kVphib) += *d_phi;
      d_g.noalias() += W(kVphi).transpose() * *d_phi;
    }
    const Vector d_gpre = d_g.array() * (1.0 - tr.g.array().square());
    G(kF).noalias() += d_gpre * tr.u.transpose();
    Gv(kFb) += d_gpre;
    Vector d_h = (W(kF).transpose() * d_gpre).head(static_cast<Eigen::Index>(H));

    for (std::size_t s = kWindowFrames; s-- > 0;) {
      const Vector & x = tr.x[s];
      const Vector & h = tr.h[s];
      const Vector & z = tr.z[s];
      const Vector & r = tr.r[s];
      const Vector & n = tr.n[s];
      const Vector hr = r.cwiseProduct(h);

      const Vector d_z = d_h.cwiseProduct(h - n);
      const Vector d_n = d_h.cwiseProduct(Vector::Ones(static_cast<Eigen::Index>(H)) - z);
      Vector d_hprev = d_h.cwiseProduct(z);

      const Vector d_npre = d_n.array() * (1.0 - n.array().square());
      G(kWn).noalias() += d_npre * x.transpose();
      G(kUn).noalias() += d_npre * hr.transpose();
      Gv(kBn) += d_npre;
      const Vector d_hr = W(kUn).transpose() * d_npre;
      const Vector d_r = d_hr.cwiseProduct(h);
      d_hprev += d_hr.cwiseProduct(r);

      const Vector d_zpre = d_z.array() * z.array() * (1.0 - z.array());
      G(kWz).noalias() += d_zpre * x.transpose();
      G(kUz).noalias() += d_zpre * h.transpose();
      Gv(kBz) += d_zpre;
      d_hprev.noalias() += W(kUz).transpose() * d_zpre;

      const Vector d_rpre = d_r.array() * r.array() * (1.0 - r.array());
      G(kWr).noalias() += d_rpre * x.transpose();
      G(kUr).noalias() += d_rpre * h.transpose();
      Gv(kBr) += d_rpre;
      d_hprev.noalias() += W(kUr).transpose() * d_rpre;

      d_h = std::move(d_hprev);
    }
  }

  /// Psi only, for inference.
  std::array<double, kPsiDim> psi(const StateWindow & window) const
  {
    BranchTrace tr;
    forward(window, tr);
    std::array<double, kPsiDim> out{};
    for (std::size_t i = 0; i < kPsiDim; ++i) out[i] = tr.psi[static_cast<Eigen::Index>(i)];
    return out;
  }

  bool operator==(const BranchNet & o) const { return shape_ == o.shape_ && params_ == o.params_; }

private:
  // Block indices into blocks_, in declared order.
  enum : std::size_t { kWz, kUz, kBz, kWr, kUr, kBr, kWn, kUn, kBn, kF, kFb, kV, kVb, kVphi, kVphib };

  void index() { blocks_ = shape_.blocks(); }

  ConstMatrixMap cmat(std::size_t i) const
  {
    const auto & b = blocks_[i];
    return {params_.data() + b.offset, static_cast<Eigen::Index>(b.rows), static_cast<Eigen::Index>(b.cols)};
  }
  ConstVectorMap cvec(std::size_t i) const
  {
    const auto & b = blocks_[i];
    return {params_.data() + b.offset, static_cast<Eigen::Index>(b.size())};
  }
  MatrixMap gmat(std::span<double> g, std::size_t i) const
  {
    const auto & b = blocks_[i];
    return {g.data() + b.offset, static_cast<Eigen::Index>(b.rows), static_cast<Eigen::Index>(b.cols)};
  }
  VectorMap gvec(std::span<double> g, std::size_t i) const
  {
    const auto & b = blocks_[i];
    return {g.data() + b.offset, static_cast<Eigen::Index>(b.size())};
  }

  BranchShape shape_;
  std::vector<double> params_;
  std::vector<ParamBlock> blocks_;
};

}  // namespace culture_bridge

#endif  // CULTURE_BRIDGE__NETWORK_HPP_
