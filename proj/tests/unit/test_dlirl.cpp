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

#include <gtest/gtest.h>

#include <random>

#include "culture_bridge/dlirl.hpp"
#include "culture_bridge/synth.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace cb = culture_bridge;

namespace
{

std::vector<cb::ActionSample> world_samples(std::size_t tracks, std::uint64_t seed, double noise = 0.05)
{
  cb::CultureSpec spec;
  spec.noise_sigma = noise;
  return cb::extract_samples(cb::gen_world(spec, tracks, 6.0, seed));
}

cb::ArchetypeModel random_model(std::uint64_t seed)
{
  auto m = cb::ArchetypeModel::initialized({}, seed);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (auto & p : m.x.params()) p = u(rng);
  for (auto & p : m.y.params()) p = u(rng);
  return m;
}

/// Overwrites psi.b and zeroes psi.W so Psi is the constant `bias`.
void constant_psi(cb::BranchNet & net, const cb::Psi & bias)
{
  for (const auto & blk : net.shape().blocks()) {
    auto p = net.params().subspan(blk.offset, blk.size());
    if (blk.name == "psi.W") std::fill(p.begin(), p.end(), 0.0);
    if (blk.name == "psi.b") std::copy(bias.begin(), bias.end(), p.begin());
  }
}

/// Replaces every target with Psi . w so the culture is exactly recoverable.
void relabel(std::vector<cb::ActionSample> & samples, const cb::ArchetypeModel & m, const cb::CultureVector & w)
{
  for (auto & s : samples) {
    const auto a = cb::raw_action(cb::forward_psi(m, s.window), w);
    s.target_ax = a.ax;
    s.target_ay = a.ay;
  }
}

cb::CultureVector random_culture(std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  cb::CultureVector w;
  for (auto & v : w.w_x) v = g(rng);
  for (auto & v : w.w_y) v = g(rng);
  return w;
}

}  // namespace

TEST(PredictAction, ConstantPsiTimesCulture)
{
  auto m = cb::ArchetypeModel::initialized({}, 2);
  cb::Psi half;
  half.fill(0.25);
  constant_psi(m.x, half);
  constant_psi(m.y, half);
  const auto s = world_samples(6, 1).front();
  EXPECT_EQ(cb::predict_action(m, cb::CultureVector::ones(), s.window), (cb::Action{3.0, 3.0}));
  auto w = cb::CultureVector::ones();
  w.w_y.fill(-4.0);
  const auto a = cb::predict_action(m, w, s.window);
  EXPECT_DOUBLE_EQ(a.ax, 3.0);
  EXPECT_DOUBLE_EQ(a.ay, -5.0);  // -12 clamped
  EXPECT_EQ(cb::predict_action(m, cb::CultureVector{}, s.window), (cb::Action{0.0, 0.0}));
}

TEST(Calibration, AlreadyOptimalCultureIsAFixedPoint)
{
  const auto m = random_model(3);
  auto samples = world_samples(10, 4);
  relabel(samples, m, cb::CultureVector::ones());
  const auto out = cb::calibrate_culture(m, samples, {});
  EXPECT_TRUE(out.converged);
  EXPECT_EQ(out.steps, 1u);
  // Round-off residuals of ~1e-16 pass through Adam's epsilon as ~1e-10 moves.
  for (std::size_t j = 0; j < cb::kPsiDim; ++j) {
    EXPECT_NEAR(out.culture.w_x[j], 1.0, 1e-9);
    EXPECT_NEAR(out.culture.w_y[j], 1.0, 1e-9);
  }
}

TEST(Calibration, FirstStepMovesEachWeightByTheLearningRate)
{
  const auto m = random_model(5);
  auto samples = world_samples(10, 6);
  relabel(samples, m, random_culture(7));
  cb::TrainingConfig cfg;
  cfg.calibration_max_steps = 1;
  const auto out = cb::calibrate_culture(m, samples, cfg);
  EXPECT_EQ(out.steps, 1u);
  for (std::size_t j = 0; j < cb::kPsiDim; ++j) {
    EXPECT_NEAR(std::fabs(out.culture.w_x[j] - 1.0), 0.01, 1e-6);
    EXPECT_NEAR(std::fabs(out.culture.w_y[j] - 1.0), 0.01, 1e-6);
  }
}

TEST(Calibration, TooFewSamples)
{
  const auto m = random_model(1);
  auto samples = world_samples(6, 1);
  samples.resize(11);
  EXPECT_CB_ERROR(cb::calibrate_culture(m, samples, {}), InsufficientData);
}

TEST(ClosedForm, RecoversAnExactCulture)
{
  const auto m = random_model(8);
  auto samples = world_samples(10, 9);
  const auto truth = random_culture(10);
  relabel(samples, m, truth);
  const auto out = cb::closed_form_culture(m, samples, true);
  EXPECT_FALSE(out.ridge_x);
  EXPECT_FALSE(out.ridge_y);
  for (std::size_t j = 0; j < cb::kPsiDim; ++j) {
    EXPECT_NEAR(out.culture.w_x[j], truth.w_x[j], 1e-7);
    EXPECT_NEAR(out.culture.w_y[j], truth.w_y[j], 1e-7);
  }
  EXPECT_LT(out.loss, 1e-18);
}

TEST(ClosedForm, TwelveSamplesInterpolate)
{
  const auto m = random_model(11);
  auto samples = world_samples(10, 12, 0.3);
  samples.resize(12);
  EXPECT_LT(cb::closed_form_culture(m, samples).loss, 1e-14);
}

TEST(ClosedForm, DuplicatedRowsFallBackToRidge)
{
  const auto m = random_model(13);
  const auto one = world_samples(6, 14).front();
  std::vector<cb::ActionSample> samples(20, one);
  const auto out = cb::closed_form_culture(m, samples);
  EXPECT_TRUE(out.ridge_x);
  EXPECT_TRUE(out.ridge_y);
  EXPECT_NEAR(cb::raw_action(cb::forward_psi(m, one.window), out.culture).ax, one.target_ax, 1e-5);
  EXPECT_CB_ERROR(cb::closed_form_culture(m, samples, true), RankDeficient);
  EXPECT_CB_ERROR(cb::closed_form_culture(m, std::vector<cb::ActionSample>{}), InsufficientData);
}

TEST(ClosedForm, AdamCalibrationApproachesIt)
{
  auto m = random_model(15);
  const auto samples = world_samples(20, 16, 0.2);
  cb::whiten_psi_head(m.x, samples);
  cb::whiten_psi_head(m.y, samples);
  const auto exact = cb::closed_form_culture(m, samples);
  const auto adam = cb::calibrate_culture(m, samples, {});
  EXPECT_LT(adam.final_loss - exact.loss, 1e-6);
  EXPECT_GE(adam.final_loss - exact.loss, -1e-12);
}

TEST(Whitening, KeepsAllOnesPolicyAndDecorrelates)
{
  auto m = random_model(17);
  const auto samples = world_samples(12, 18);
  std::vector<double> before;
  for (const auto & s : samples) before.push_back(cb::raw_action(cb::forward_psi(m, s.window), cb::CultureVector::ones()).ax);
  ASSERT_TRUE(cb::whiten_psi_head(m.x, samples));
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(12, 12);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto psi = m.x.psi(samples[i].window);
    const Eigen::Map<const Eigen::VectorXd> v(psi.data(), 12);
    second += v * v.transpose();
    EXPECT_NEAR(cb::raw_action(cb::forward_psi(m, samples[i].window), cb::CultureVector::ones()).ax, before[i], 1e-9);
  }
  second /= static_cast<double>(samples.size());
  const double s2 = second(0, 0);
  EXPECT_LT((second - s2 * Eigen::MatrixXd::Identity(12, 12)).cwiseAbs().maxCoeff(), 1e-9 * s2);
}

TEST(Whitening, SingularSecondMomentIsLeftAlone)
{
  auto m = cb::ArchetypeModel::initialized({}, 19);
  cb::Psi bias;
  bias.fill(1.0);
  constant_psi(m.x, bias);
  const auto copy = m.x;
  EXPECT_FALSE(cb::whiten_psi_head(m.x, world_samples(6, 20)));
  EXPECT_EQ(m.x, copy);
}

TEST(Training, SameSeedSameModel)
{
  const auto samples = world_samples(12, 21);
  cb::TrainingConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 32;
  const auto a = cb::train_archetype(samples, cfg);
  const auto b = cb::train_archetype(samples, cfg);
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.train_loss, b.train_loss);
  cfg.seed = 2;
  EXPECT_NE(cb::train_archetype(samples, cfg).model, a.model);
}

TEST(Training, LossDecreasesAndErrors)
{
  const auto samples = world_samples(20, 22);
  cb::TrainingConfig cfg;
  cfg.epochs = 6;
  cfg.batch_size = 32;
  const auto out = cb::train_archetype(samples, cfg);
  ASSERT_EQ(out.train_loss.size(), 6u);
  EXPECT_LT(out.train_loss.back(), out.train_loss.front());
  cfg.batch_size = samples.size() + 1;
  EXPECT_CB_ERROR(cb::train_archetype(samples, cfg), InsufficientData);
  cfg = {};
  cfg.gamma = 1.0;
  EXPECT_CB_ERROR(cb::train_archetype(samples, cfg), InvalidConfig);
}

TEST(Persistence, RoundTripIsExact)
{
  const auto m = random_model(23);
  const auto w = random_culture(24);
  cb_test::TempDir tmp;
  cb::save_model(tmp / "m.json", m, w);
  const auto [m2, w2] = cb::load_model(tmp / "m.json");
  EXPECT_EQ(m2, m);
  EXPECT_EQ(w2, w);
}

TEST(Persistence, CorruptAndVersionErrors)
{
  cb_test::TempDir tmp;
  cb_test::write_text(tmp / "bad.json", "{\"version\": 1, \"seed\":");
  EXPECT_CB_ERROR(cb::load_model(tmp / "bad.json"), CorruptFile);
  auto j = cb::model_to_json(random_model(25), cb::CultureVector::ones());
  j["branches"]["x"]["blocks"][3]["values"].erase(0);
  EXPECT_CB_ERROR(cb::model_from_json(j), CorruptFile);
  j = cb::model_to_json(random_model(25), cb::CultureVector::ones());
  j["version"] = 99;
  EXPECT_CB_ERROR(cb::model_from_json(j), VersionMismatch);
  EXPECT_CB_ERROR(cb::load_model(tmp / "missing.json"), Io);
}

TEST(Gpi, SingletonGridReturnsItsOnlyAction)
{
  const auto m = random_model(26);
  const auto s = world_samples(6, 27).front();
  const cb::ActionGrid grid{{0.7}, {-0.2}};
  EXPECT_EQ(cb::gpi_select_action(m, cb::CultureVector::ones(), s.window, grid, {}, 0.9), (cb::Action{0.7, -0.2}));
  EXPECT_CB_ERROR(cb::gpi_select_action(m, cb::CultureVector::ones(), s.window, {{}, {1.0}}, {}, 0.9), EmptyGrid);
}

TEST(Gpi, ScriptedValuePrefersSmallestMagnitude)
{
  const auto m = cb_oracle::even_value_model();
  const auto s = world_samples(6, 28).front();
  const auto w = cb::CultureVector::ones();
  EXPECT_EQ(cb::gpi_select_action(m, w, s.window, {{-1, 0, 1}, {-1, 0, 1}}, {}, 0.9), (cb::Action{0, 0}));
  EXPECT_EQ(cb::gpi_select_action(m, w, s.window, {{0.5, 1, 2}, {-2, -0.3, 1}}, {}, 0.9), (cb::Action{0.5, -0.3}));
  EXPECT_GT(cb_oracle::even_value(0.0), cb_oracle::even_value(0.5));
  EXPECT_DOUBLE_EQ(cb_oracle::even_value(0.5), cb_oracle::even_value(-0.5));
}

TEST(Gpi, TiesGoToRegressedThenLexicographic)
{
  const auto m = cb_oracle::even_value_model();
  const auto s = world_samples(6, 29).front();
  auto w = cb::CultureVector::ones();
  // Regressed ax is f(previous ax) > 0, so +1 is nearer than -1.
  EXPECT_EQ(cb::gpi_select_action(m, w, s.window, {{-1, 1}, {0}}, {}, 0.9), (cb::Action{1, 0}));
  w.w_x.fill(0.0);
  // Regressed ax = 0: both equidistant, lexicographic order picks -1.
  EXPECT_EQ(cb::gpi_select_action(m, w, s.window, {{-1, 1}, {0}}, {}, 0.9), (cb::Action{-1, 0}));
}

TEST(Gpi, PositiveCultureScalingKeepsTheChoice)
{
  const auto m = random_model(30);
  const auto samples = world_samples(8, 31);
  const auto w = random_culture(32);
  for (std::size_t i = 0; i < 10; ++i) {
    const auto grid = cb::ActionGrid::around(cb::predict_action(m, w, samples[i].window));
    const auto a = cb::gpi_select_action(m, w, samples[i].window, grid, {}, 0.9);
    for (const double c : {0.5, 3.0}) {
      cb::CultureVector scaled = w;
      for (auto & v : scaled.w_x) v *= c;
      for (auto & v : scaled.w_y) v *= c;
      EXPECT_EQ(cb::gpi_select_action(m, scaled, samples[i].window, grid, {}, 0.9), a) << i << " " << c;
    }
  }
}

TEST(Gpi, GridSpansTheRequestedWidth)
{
  const auto g = cb::ActionGrid::around({0.5, -1.0}, 1.0, 5);
  EXPECT_EQ(g.ax, (std::vector<double>{-0.5, 0.0, 0.5, 1.0, 1.5}));
  EXPECT_EQ(g.ay, (std::vector<double>{-2.0, -1.5, -1.0, -0.5, 0.0}));
}
