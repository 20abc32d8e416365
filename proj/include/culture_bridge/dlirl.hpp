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

#ifndef CULTURE_BRIDGE__DLIRL_HPP_
#define CULTURE_BRIDGE__DLIRL_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "culture_bridge/adam.hpp"
#include "culture_bridge/error.hpp"
#include "culture_bridge/featurize.hpp"
#include "culture_bridge/kinematics.hpp"
#include "culture_bridge/network.hpp"

// Successor-feature imitation. Each axis regresses its acceleration as the
// inner product Psi(window) . w, with Psi the transferable archetype network
// and w the culture vector. Archetype training holds w at all-ones and fits
// Psi; calibration holds Psi and fits w.

namespace culture_bridge
{

inline constexpr int kModelVersion = 1;

using Psi = Vec12;

struct CultureVector
{
  Psi w_x{};
  Psi w_y{};

  static CultureVector ones()
  {
    CultureVector c;
    c.w_x.fill(1.0);
    c.w_y.fill(1.0);
    return c;
  }

  bool operator==(const CultureVector &) const = default;
};

struct ArchetypeModel
{
  BranchNet x;
  BranchNet y;
  int version = kModelVersion;
  std::uint64_t seed = 0;

  static ArchetypeModel initialized(BranchShape shape, std::uint64_t seed)
  {
    ArchetypeModel m;
    m.seed = seed;
    m.x = BranchNet::initialized(shape, seed * 2 + 1);
    m.y = BranchNet::initialized(shape, seed * 2 + 2);
    return m;
  }

  bool operator==(const ArchetypeModel &) const = default;
};

struct TrainingConfig
{
  double gamma = 0.9;
  std::size_t batch_size = 128;
  std::size_t epochs = 60;
  std::uint64_t seed = 1;
  double td_weight = 0.0;
  bool gpi_enabled = false;
  double action_bound = 5.0;
  double learning_rate = 1e-3;
  std::size_t hidden = 32;
  std::size_t fusion = 12;
  double validation_fraction = 0.1;
  double calibration_learning_rate = 0.01;
  std::size_t calibration_max_steps = 5000;
  double calibration_tolerance = 1e-8;
  bool whiten_psi = true;

  void validate() const
  {
    if (!(gamma > 0.0 && gamma < 1.0)) throw Error(ErrorCode::InvalidConfig, "gamma must lie in (0, 1)");
    if (batch_size < 1) throw Error(ErrorCode::InvalidConfig, "batch_size must be >= 1");
    if (!(td_weight >= 0.0)) throw Error(ErrorCode::InvalidConfig, "td_weight must be >= 0");
    if (!(action_bound > 0.0)) throw Error(ErrorCode::InvalidConfig, "action_bound must be > 0");
    if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidConfig, "learning_rate must be > 0");
    if (hidden < 1 || fusion < 1) throw Error(ErrorCode::InvalidConfig, "hidden and fusion must be >= 1");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
      throw Error(ErrorCode::InvalidConfig, "validation_fraction must lie in [0, 1)");
    }
  }
};

// ---------------------------------------------------------------------------
// Inference

struct PsiPair
{
  Psi x{};
  Psi y{};
};

inline PsiPair forward_psi(const ArchetypeModel & model, const StateWindow & window)
{
  PsiPair out{model.x.psi(window), model.y.psi(window)};
  for (std::size_t i = 0; i < kPsiDim; ++i) {
    if (!std::isfinite(out.x[i]) || !std::isfinite(out.y[i])) {
      throw Error(ErrorCode::NonFiniteActivation, "Psi component " + std::to_string(i));
    }
  }
  return out;
}

struct Action
{
  double ax = 0.0;
  double ay = 0.0;

  bool operator==(const Action &) const = default;
};

/// Per-axis Psi . w before clamping.
inline Action raw_action(const PsiPair & psi, const CultureVector & w)
{
  return {dot(psi.x, w.w_x), dot(psi.y, w.w_y)};
}

inline Action clamp_action(Action a, double bound)
{
  return {std::clamp(a.ax, -bound, bound), std::clamp(a.ay, -bound, bound)};
}

inline Action predict_action(const ArchetypeModel & model, const CultureVector & w, const StateWindow & window,
                             double action_bound = 5.0)
{
  return clamp_action(raw_action(forward_psi(model, window), w), action_bound);
}

// ---------------------------------------------------------------------------
// Imitation loss and its gradient

/// Mean over samples and both axes of the squared action error, with the
/// action taken as the unclamped Psi . w.
struct LossBreakdown
{
  double total = 0.0;
  double mse_x = 0.0;
  double mse_y = 0.0;
};

inline LossBreakdown action_loss(const ArchetypeModel & model, const CultureVector & w,
                                 std::span<const ActionSample> samples)
{
  LossBreakdown l;
  if (samples.empty()) return l;
  for (const auto & s : samples) {
    const auto a = raw_action(forward_psi(model, s.window), w);
    l.mse_x += (a.ax - s.target_ax) * (a.ax - s.target_ax);
    l.mse_y += (a.ay - s.target_ay) * (a.ay - s.target_ay);
  }
  const auto n = static_cast<double>(samples.size());
  l.mse_x /= n;
  l.mse_y /= n;
  l.total = 0.5 * (l.mse_x + l.mse_y);
  return l;
}

/// Flat gradient layout: x-branch coefficients followed by y-branch ones.
inline std::size_t model_param_count(const ArchetypeModel & m) { return m.x.param_count() + m.y.param_count(); }

/// Loss of a batch plus its gradient with respect to every network
/// coefficient. `successor[i]`, when set, indexes the sample one step after
/// batch[i] and enables the TD consistency penalty
///   td_weight * mean || Psi(t) - Phi(t) - gamma Psi(t+1) ||^2
/// summed over both branches.
inline double loss_and_gradient(const ArchetypeModel & model, const CultureVector & w,
                                std::span<const ActionSample * const> batch,
                                std::span<const ActionSample * const> successor, double gamma, double td_weight,
                                std::span<double> grad)
{
  std::fill(grad.begin(), grad.end(), 0.0);
  const auto n = static_cast<double>(batch.size());
  const auto gx = grad.subspan(0, model.x.param_count());
  const auto gy = grad.subspan(model.x.param_count());
  const ConstVectorMap wx(w.w_x.data(), kPsiDim);
  const ConstVectorMap wy(w.w_y.data(), kPsiDim);
  std::size_t n_pairs = 0;
  if (td_weight > 0.0) {
    for (const auto * s : successor) n_pairs += s != nullptr;
  }

  double loss = 0.0;
  BranchTrace tx, ty, nx, ny;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto & s = *batch[i];
    model.x.forward(s.window, tx);
    model.y.forward(s.window, ty);
    const double ex = tx.psi.dot(wx) - s.target_ax;
    const double ey = ty.psi.dot(wy) - s.target_ay;
    loss += 0.5 * (ex * ex + ey * ey) / n;
    Vector d_psi_x = (ex / n) * wx;
    Vector d_psi_y = (ey / n) * wy;
    const ActionSample * next = (td_weight > 0.0 && i < successor.size()) ? successor[i] : nullptr;
    if (!next) {
      model.x.backward(tx, d_psi_x, nullptr, gx);
      model.y.backward(ty, d_psi_y, nullptr, gy);
      continue;
    }
    model.x.forward(next->window, nx);
    model.y.forward(next->window, ny);
    const double scale = td_weight / static_cast<double>(n_pairs);
    const auto td = [&](const BranchNet & net, BranchTrace & cur, BranchTrace & nxt, Vector & d_psi,
                        std::span<double> g) {
      const Vector resid = cur.psi - cur.phi - gamma * nxt.psi;
      loss += scale * resid.squaredNorm();
      d_psi += 2.0 * scale * resid;
      const Vector d_phi = -2.0 * scale * resid;
      net.backward(cur, d_psi, &d_phi, g);
      const Vector d_next = -2.0 * scale * gamma * resid;
      net.backward(nxt, d_next, nullptr, g);
    };
    td(model.x, tx, nx, d_psi_x, gx);
    td(model.y, ty, ny, d_psi_y, gy);
  }
  return loss;
}

// ---------------------------------------------------------------------------
// Archetype training

struct TrainingOutcome
{
  ArchetypeModel model;
  std::vector<double> train_loss;       // per epoch, mean over batches
  std::vector<double> validation_loss;  // per epoch
  std::size_t best_epoch = 0;
};

namespace detail
{

/// Index of the sample one dataset step later on the same track, if any.
inline std::vector<std::optional<std::size_t>> successors(std::span<const ActionSample> samples)
{
  std::vector<std::optional<std::size_t>> next(samples.size());
  for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
    if (samples[i + 1].vehicle_id == samples[i].vehicle_id && samples[i + 1].t > samples[i].t) next[i] = i + 1;
  }
  return next;
}

inline void write_params(ArchetypeModel & m, std::span<const double> flat)
{
  std::copy_n(flat.begin(), m.x.param_count(), m.x.params().begin());
  std::copy(flat.begin() + static_cast<std::ptrdiff_t>(m.x.param_count()), flat.end(), m.y.params().begin());
}

inline std::vector<double> read_params(const ArchetypeModel & m)
{
  std::vector<double> flat(m.x.params().begin(), m.x.params().end());
  flat.insert(flat.end(), m.y.params().begin(), m.y.params().end());
  return flat;
}

}  // namespace detail

/// Replaces the Psi head by M Psi, with M chosen so that over `samples` the
/// new components have second-moment matrix s^2 I while their sum, and hence
/// the all-ones policy, is unchanged (1^T M = 1^T). M is invertible, so the
/// span of Psi is the same and only the conditioning of later calibration
/// changes:  M = H s S^{-1/2}, S = E[Psi Psi^T], H the reflection that carries
/// s^{-1} S^{1/2} 1 onto 1. The Phi head gets the same map. Returns false, and
/// leaves the branch alone, when S is numerically singular.
inline bool whiten_psi_head(BranchNet & net, std::span<const ActionSample> samples)
{
  constexpr auto P = static_cast<Eigen::Index>(kPsiDim);
  if (samples.size() < 2) return false;
  RowMatrix psi(static_cast<Eigen::Index>(samples.size()), P);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto p = net.psi(samples[i].window);
    psi.row(static_cast<Eigen::Index>(i)) = ConstVectorMap(p.data(), P).transpose();
  }
  const Eigen::MatrixXd second = psi.transpose() * psi / static_cast<double>(samples.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(second);
  const Vector lambda = eig.eigenvalues();
  if (!(lambda.minCoeff() > 1e-12 * lambda.maxCoeff()) || !(lambda.maxCoeff() > 0.0)) return false;
  const Eigen::MatrixXd & q = eig.eigenvectors();
  const Eigen::MatrixXd root = q * lambda.cwiseSqrt().asDiagonal() * q.transpose();
  const Eigen::MatrixXd inv_root = q * lambda.cwiseSqrt().cwiseInverse().asDiagonal() * q.transpose();
  const Vector ones = Vector::Ones(P);
  const Vector a = root * ones;
  const double scale = a.norm() / ones.norm();
  const Vector v = a / scale;
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(P, P);
  const Vector diff = v - ones;
  if (diff.norm() > 1e-12 * ones.norm()) {
    const Vector n = diff / diff.norm();
    h -= 2.0 * n * n.transpose();
  }
  const Eigen::MatrixXd m = h * (scale * inv_root);

  const auto blocks = net.shape().blocks();
  const auto find = [&](const std::string & name) {
    return *std::find_if(blocks.begin(), blocks.end(), [&](const ParamBlock & b) { return b.name == name; });
  };
  auto params = net.params();
  const auto remap = [&](const ParamBlock & wb, const ParamBlock & bb) {
    MatrixMap w(params.data() + wb.offset, static_cast<Eigen::Index>(wb.rows), static_cast<Eigen::Index>(wb.cols));
    VectorMap b(params.data() + bb.offset, static_cast<Eigen::Index>(bb.size()));
    const RowMatrix w_new = m * w;
    const Vector b_new = m * b;
    w = w_new;
    b = b_new;
  };
  remap(find("psi.W"), find("psi.b"));
  remap(find("phi.W"), find("phi.b"));
  return true;
}

/// Fits Psi with w held at all-ones by mini-batch Adam. A seeded
/// permutation holds out validation_fraction of the samples; the epoch with
/// the lowest held-out loss is returned.
inline TrainingOutcome train_archetype(std::span<const ActionSample> samples, const TrainingConfig & cfg)
{
  cfg.validate();
  if (samples.size() < cfg.batch_size) {
    throw Error(ErrorCode::InsufficientData, std::to_string(samples.size()) + " samples for batch size " +
                                               std::to_string(cfg.batch_size));
  }
  const auto w = CultureVector::ones();
  TrainingOutcome out;
  out.model = ArchetypeModel::initialized({kStateDim, cfg.hidden, cfg.fusion}, cfg.seed);

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  auto n_val = static_cast<std::size_t>(std::floor(cfg.validation_fraction * static_cast<double>(samples.size())));
  if (samples.size() - n_val < cfg.batch_size) n_val = samples.size() - cfg.batch_size;
  std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(val_idx.begin(), val_idx.end());
  std::vector<ActionSample> val;
  val.reserve(val_idx.size());
  for (const auto i : val_idx) val.push_back(samples[i]);

  const auto next = detail::successors(samples);
  auto params = detail::read_params(out.model);
  std::vector<double> grad(params.size());
  AdamOptimizer adam(params.size(), {cfg.learning_rate});
  auto best_params = params;
  double best_val = std::numeric_limits<double>::infinity();

  std::vector<const ActionSample *> batch, succ;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(train_idx.begin(), train_idx.end(), rng);
    double epoch_loss = 0.0;
    std::size_t n_batches = 0;
    // The trailing partial batch is dropped so every step sees N samples.
    for (std::size_t start = 0; start + cfg.batch_size <= train_idx.size(); start += cfg.batch_size) {
      batch.clear();
      succ.clear();
      for (std::size_t k = start; k < start + cfg.batch_size; ++k) {
        const auto i = train_idx[k];
        batch.push_back(&samples[i]);
        succ.push_back(next[i] ? &samples[*next[i]] : nullptr);
      }
      const double loss =
        loss_and_gradient(out.model, w, batch, succ, cfg.gamma, cfg.td_weight, grad);
      if (!std::isfinite(loss)) {
        throw Error(ErrorCode::NonFiniteLoss, "epoch " + std::to_string(epoch));
      }
      adam.step(params, grad);
      detail::write_params(out.model, params);
      epoch_loss += loss;
      ++n_batches;
    }
    out.train_loss.push_back(epoch_loss / static_cast<double>(std::max<std::size_t>(n_batches, 1)));
    const double v = val.empty() ? out.train_loss.back() : action_loss(out.model, w, val).total;
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteLoss, "validation at epoch " + std::to_string(epoch));
    out.validation_loss.push_back(v);
    if (v < best_val) {
      best_val = v;
      best_params = params;
      out.best_epoch = epoch;
    }
  }
  detail::write_params(out.model, best_params);
  if (cfg.whiten_psi) {
    whiten_psi_head(out.model.x, samples);
    whiten_psi_head(out.model.y, samples);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Culture calibration

/// Psi of every sample, stacked per axis (N x 12).
struct DesignMatrices
{
  RowMatrix psi_x;
  RowMatrix psi_y;
  Vector a_x;
  Vector a_y;
};

inline DesignMatrices design_matrices(const ArchetypeModel & model, std::span<const ActionSample> samples)
{
  DesignMatrices d;
  const auto n = static_cast<Eigen::Index>(samples.size());
  d.psi_x.resize(n, kPsiDim);
  d.psi_y.resize(n, kPsiDim);
  d.a_x.resize(n);
  d.a_y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto & s = samples[static_cast<std::size_t>(i)];
    const auto p = forward_psi(model, s.window);
    for (std::size_t j = 0; j < kPsiDim; ++j) {
      d.psi_x(i, static_cast<Eigen::Index>(j)) = p.x[j];
      d.psi_y(i, static_cast<Eigen::Index>(j)) = p.y[j];
    }
    d.a_x(i) = s.target_ax;
    d.a_y(i) = s.target_ay;
  }
  return d;
}

/// Same loss as action_loss, evaluated on precomputed Psi.
inline double culture_loss(const DesignMatrices & d, const CultureVector & w)
{
  const auto n = static_cast<double>(d.a_x.size());
  const Vector ex = d.psi_x * ConstVectorMap(w.w_x.data(), kPsiDim) - d.a_x;
  const Vector ey = d.psi_y * ConstVectorMap(w.w_y.data(), kPsiDim) - d.a_y;
  return 0.5 * (ex.squaredNorm() + ey.squaredNorm()) / n;
}

struct CalibrationOutcome
{
  CultureVector culture;
  std::size_t steps = 0;
  double final_loss = 0.0;
  bool converged = false;  // stopped on the update-norm tolerance
};

/// Adam on w alone from all-ones, full-batch gradient of the imitation loss.
inline CalibrationOutcome calibrate_culture(const ArchetypeModel & model, std::span<const ActionSample> samples,
                                            const TrainingConfig & cfg)
{
  if (samples.size() < kPsiDim) {
    throw Error(ErrorCode::InsufficientData, "calibration needs at least 12 samples");
  }
  const auto d = design_matrices(model, samples);
  const auto n = static_cast<double>(samples.size());
  CalibrationOutcome out;
  out.culture = CultureVector::ones();
  std::array<double, 2 * kPsiDim> w{};
  std::copy(out.culture.w_x.begin(), out.culture.w_x.end(), w.begin());
  std::copy(out.culture.w_y.begin(), out.culture.w_y.end(), w.begin() + kPsiDim);
  std::array<double, 2 * kPsiDim> grad{};
  AdamOptimizer adam(w.size(), {cfg.calibration_learning_rate});
  const double tol2 = cfg.calibration_tolerance * cfg.calibration_tolerance;
  for (std::size_t step = 0; step < cfg.calibration_max_steps; ++step) {
    const Vector ex = d.psi_x * ConstVectorMap(w.data(), kPsiDim) - d.a_x;
    const Vector ey = d.psi_y * ConstVectorMap(w.data() + kPsiDim, kPsiDim) - d.a_y;
    VectorMap(grad.data(), kPsiDim) = d.psi_x.transpose() * ex / n;
    VectorMap(grad.data() + kPsiDim, kPsiDim) = d.psi_y.transpose() * ey / n;
    const double norm2 = adam.step(w, grad);
    out.steps = step + 1;
    if (!std::isfinite(norm2)) throw Error(ErrorCode::NonFiniteLoss, "calibration step " + std::to_string(step));
    if (norm2 < tol2) {
      out.converged = true;
      break;
    }
  }
  std::copy(w.begin(), w.begin() + kPsiDim, out.culture.w_x.begin());
  std::copy(w.begin() + kPsiDim, w.end(), out.culture.w_y.begin());
  out.final_loss = culture_loss(d, out.culture);
  if (!std::isfinite(out.final_loss)) throw Error(ErrorCode::NonFiniteLoss, "calibration loss");
  return out;
}

struct ClosedFormOutcome
{
  CultureVector culture;
  bool ridge_x = false;  // rank-deficient axis solved with ridge fallback
  bool ridge_y = false;
  double loss = 0.0;
};

inline constexpr double kRidgeLambda = 1e-6;

namespace detail
{

inline Vector least_squares(const RowMatrix & a, const Vector & b, bool & ridge)
{
  Eigen::ColPivHouseholderQR<RowMatrix> qr(a);
  if (qr.rank() == a.cols()) {
    ridge = false;
    return qr.solve(b);
  }
  ridge = true;
  const RowMatrix normal =
    a.transpose() * a + kRidgeLambda * RowMatrix::Identity(a.cols(), a.cols());
  return normal.ldlt().solve(a.transpose() * b);
}

}  // namespace detail

/// Exact per-axis least squares min_w sum (Psi_i . w - a_i)^2. With
/// `strict`, a rank-deficient design raises RankDeficient instead of falling
/// back to ridge.
inline ClosedFormOutcome closed_form_culture(const ArchetypeModel & model, std::span<const ActionSample> samples,
                                             bool strict = false)
{
  if (samples.empty()) throw Error(ErrorCode::InsufficientData, "no samples");
  const auto d = design_matrices(model, samples);
  ClosedFormOutcome out;
  const Vector wx = detail::least_squares(d.psi_x, d.a_x, out.ridge_x);
  const Vector wy = detail::least_squares(d.psi_y, d.a_y, out.ridge_y);
  if (strict && (out.ridge_x || out.ridge_y)) {
    throw Error(ErrorCode::RankDeficient, out.ridge_x ? "longitudinal design" : "lateral design");
  }
  for (std::size_t j = 0; j < kPsiDim; ++j) {
    out.culture.w_x[j] = wx(static_cast<Eigen::Index>(j));
    out.culture.w_y[j] = wy(static_cast<Eigen::Index>(j));
  }
  out.loss = culture_loss(d, out.culture);
  return out;
}

// ---------------------------------------------------------------------------
// Generalized policy improvement over a candidate grid

/// Deterministic one-step transition of a window: the ego advances under the
/// candidate action; neighbours, when a snapshot is given, keep their last
/// observed velocity. Without a snapshot the TTC entries are carried over.
struct TransitionContext
{
  double dt = 0.2;
  std::optional<VehicleState> ego;
  std::vector<VehicleState> neighbors;
  std::vector<double> lane_centers_y;
};

inline StateWindow advance_window(const StateWindow & window, const Action & a, const TransitionContext & ctx,
                                  TransitionContext * next_ctx = nullptr)
{
  StateWindow next;
  for (std::size_t r = 0; r + 1 < kWindowFrames; ++r) next.rows[r] = window.rows[r + 1];
  const auto & last = window.last();
  StateVector row = last;
  row[0] = std::max(0.0, last[0] + a.ax * ctx.dt);
  row[1] = last[1] + a.ay * ctx.dt;
  row[2] = a.ax;
  row[3] = a.ay;
  if (ctx.ego) {
    const auto & e = *ctx.ego;
    const auto k = step_ego({e.x, e.y, last[0], last[1], e.lane_id}, a.ax, a.ay, ctx.dt, ctx.lane_centers_y);
    VehicleState moved = e;
    moved.x = k.x;
    moved.y = k.y;
    moved.vx = k.vx;
    moved.vy = k.vy;
    moved.lane_id = k.lane_id;
    std::vector<VehicleState> others = ctx.neighbors;
    for (auto & o : others) {
      o.x += o.vx * ctx.dt;
      o.y += o.vy * ctx.dt;
    }
    const auto slots = assign_neighbors(moved, others);
    for (std::size_t d = 0; d < kDirections; ++d) row[4 + d] = direction_ttc(slots[d]).value_or(kAbsentTtc);
    if (next_ctx) {
      *next_ctx = ctx;
      next_ctx->ego = moved;
      next_ctx->neighbors = std::move(others);
    }
  } else if (next_ctx) {
    *next_ctx = ctx;
  }
  next.rows[kWindowFrames - 1] = row;
  return next;
}

/// Q(s, a) = Psi(s advanced by a) . w, summed over both axes.
inline double action_value(const ArchetypeModel & model, const CultureVector & w, const StateWindow & window,
                           const Action & a, const TransitionContext & ctx, StateWindow * advanced = nullptr,
                           TransitionContext * next_ctx = nullptr)
{
  const auto s_next = advance_window(window, a, ctx, next_ctx);
  const auto psi = forward_psi(model, s_next);
  if (advanced) *advanced = s_next;
  return dot(psi.x, w.w_x) + dot(psi.y, w.w_y);
}

struct ActionGrid
{
  std::vector<double> ax;
  std::vector<double> ay;

  /// `per_axis` values per axis spanning +-half_width around `center`.
  static ActionGrid around(const Action & center, double half_width = 1.0, std::size_t per_axis = 5)
  {
    ActionGrid g;
    for (std::size_t i = 0; i < per_axis; ++i) {
      const double f = per_axis == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(per_axis - 1);
      g.ax.push_back(center.ax + f * half_width);
      g.ay.push_back(center.ay + f * half_width);
    }
    return g;
  }
};

/// argmax_a Q(s, a) + gamma * max_a' Q(s', a') over the Cartesian grid.
/// Equal scores go to the candidate nearest the regressed action, then to the
/// lexicographically smallest (ax, ay).
inline Action gpi_select_action(const ArchetypeModel & model, const CultureVector & w, const StateWindow & window,
                                const ActionGrid & grid, const TransitionContext & ctx, double gamma,
                                double action_bound = 5.0)
{
  if (grid.ax.empty() || grid.ay.empty()) throw Error(ErrorCode::EmptyGrid, "candidate grid is empty");
  const auto regressed = predict_action(model, w, window, action_bound);
  std::optional<Action> best;
  double best_score = -std::numeric_limits<double>::infinity();
  double best_dist = 0.0;
  for (const double ax : grid.ax) {
    for (const double ay : grid.ay) {
      const Action a{ax, ay};
      StateWindow s_next;
      TransitionContext ctx_next;
      const double q = action_value(model, w, window, a, ctx, &s_next, &ctx_next);
      double q_next = -std::numeric_limits<double>::infinity();
      for (const double bx : grid.ax) {
        for (const double by : grid.ay) {
          q_next = std::max(q_next, action_value(model, w, s_next, {bx, by}, ctx_next));
        }
      }
      const double score = q + gamma * q_next;
      const double dist = std::hypot(ax - regressed.ax, ay - regressed.ay);
      const bool better = !best || score > best_score ||
                          (score == best_score &&
                           (dist < best_dist || (dist == best_dist && std::pair{ax, ay} < std::pair{best->ax, best->ay})));
      if (better) {
        best = a;
        best_score = score;
        best_dist = dist;
      }
    }
  }
  return *best;
}

// ---------------------------------------------------------------------------
// Persistence

namespace detail
{

inline nlohmann::json branch_json(const BranchNet & net)
{
  nlohmann::json j;
  const auto & s = net.shape();
  j["shape"] = {{"input", s.input}, {"hidden", s.hidden}, {"fusion", s.fusion}, {"psi", kPsiDim}};
  nlohmann::json blocks = nlohmann::json::array();
  const auto p = net.params();
  for (const auto & b : s.blocks()) {
    blocks.push_back({{"name", b.name},
                      {"rows", b.rows},
                      {"cols", b.cols},
                      {"values", std::vector<double>(p.begin() + static_cast<std::ptrdiff_t>(b.offset),
                                                     p.begin() + static_cast<std::ptrdiff_t>(b.offset + b.size()))}});
  }
  j["blocks"] = std::move(blocks);
  return j;
}

inline BranchNet branch_from_json(const nlohmann::json & j)
{
  BranchShape shape;
  shape.input = j.at("shape").at("input").get<std::size_t>();
  shape.hidden = j.at("shape").at("hidden").get<std::size_t>();
  shape.fusion = j.at("shape").at("fusion").get<std::size_t>();
  if (shape.input != kStateDim || j.at("shape").at("psi").get<std::size_t>() != kPsiDim) {
    throw Error(ErrorCode::CorruptFile, "unexpected branch dimensions");
  }
  BranchNet net(shape);
  const auto expected = shape.blocks();
  const auto & blocks = j.at("blocks");
  if (blocks.size() != expected.size()) throw Error(ErrorCode::CorruptFile, "block count");
  auto p = net.params();
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto & e = expected[i];
    const auto & b = blocks.at(i);
    if (b.at("name").get<std::string>() != e.name || b.at("rows").get<std::size_t>() != e.rows ||
        b.at("cols").get<std::size_t>() != e.cols) {
      throw Error(ErrorCode::CorruptFile, "block " + e.name + " layout");
    }
    const auto values = b.at("values").get<std::vector<double>>();
    if (values.size() != e.size()) throw Error(ErrorCode::CorruptFile, "block " + e.name + " size");
    std::copy(values.begin(), values.end(), p.begin() + static_cast<std::ptrdiff_t>(e.offset));
  }
  return net;
}

}  // namespace detail

inline nlohmann::json model_to_json(const ArchetypeModel & model, const CultureVector & culture)
{
  nlohmann::json j;
  j["version"] = model.version;
  j["seed"] = model.seed;
  j["branches"] = {{"x", detail::branch_json(model.x)}, {"y", detail::branch_json(model.y)}};
  j["culture"] = {{"w_x", culture.w_x}, {"w_y", culture.w_y}};
  return j;
}

inline std::pair<ArchetypeModel, CultureVector> model_from_json(const nlohmann::json & j)
{
  try {
    const int version = j.at("version").get<int>();
    if (version != kModelVersion) {
      throw Error(ErrorCode::VersionMismatch,
                  "file version " + std::to_string(version) + ", expected " + std::to_string(kModelVersion));
    }
    ArchetypeModel m;
    m.version = version;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.x = detail::branch_from_json(j.at("branches").at("x"));
    m.y = detail::branch_from_json(j.at("branches").at("y"));
    CultureVector c;
    c.w_x = j.at("culture").at("w_x").get<Psi>();
    c.w_y = j.at("culture").at("w_y").get<Psi>();
    return {std::move(m), c};
  } catch (const nlohmann::json::exception & e) {
    throw Error(ErrorCode::CorruptFile, e.what());
  }
}

inline void save_model(const std::filesystem::path & path, const ArchetypeModel & model, const CultureVector & culture)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << model_to_json(model, culture).dump(1) << '\n';
}

inline std::pair<ArchetypeModel, CultureVector> load_model(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception & e) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace culture_bridge

#endif  // CULTURE_BRIDGE__DLIRL_HPP_
