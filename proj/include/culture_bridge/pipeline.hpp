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

#ifndef CULTURE_BRIDGE__PIPELINE_HPP_
#define CULTURE_BRIDGE__PIPELINE_HPP_

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "json.hpp"

#include "culture_bridge/dlirl.hpp"
#include "culture_bridge/error.hpp"
#include "culture_bridge/metrics.hpp"
#include "culture_bridge/rollout.hpp"
#include "culture_bridge/synth.hpp"
#include "culture_bridge/trajectory.hpp"

// Pipeline commands. Every command reads one RunConfig, writes its
// artifacts under the output directory and returns a process exit status.

namespace culture_bridge
{

enum ExitStatus : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitData = 3,
  kExitDivergence = 4,
};

inline int exit_status_for(ErrorCode code)
{
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidCultureSpec:
    case ErrorCode::FractionOutOfRange:
    case ErrorCode::EmptyGrid:
      return kExitConfig;
    case ErrorCode::NonFiniteActivation:
    case ErrorCode::NonFiniteLoss:
      return kExitDivergence;
    default:
      return kExitData;
  }
}

enum class LogLevel { Error, Warn, Info, Debug };

struct Logger
{
  std::function<void(LogLevel, const std::string &)> sink;

  void log(LogLevel level, const std::string & msg) const
  {
    if (sink) sink(level, msg);
  }
  void info(const std::string & msg) const { log(LogLevel::Info, msg); }
  void debug(const std::string & msg) const { log(LogLevel::Debug, msg); }
  void warn(const std::string & msg) const { log(LogLevel::Warn, msg); }
  void error(const std::string & msg) const { log(LogLevel::Error, msg); }
};

enum class DeploymentMode { Localized, Direct, CrossCultural };

inline std::string_view to_string(DeploymentMode m)
{
  switch (m) {
    case DeploymentMode::Localized: return "localized";
    case DeploymentMode::Direct: return "direct";
    case DeploymentMode::CrossCultural: return "cross-cultural";
  }
  return "cross-cultural";
}

inline DeploymentMode parse_mode(const std::string & s)
{
  if (s == "localized") return DeploymentMode::Localized;
  if (s == "direct") return DeploymentMode::Direct;
  if (s == "cross-cultural") return DeploymentMode::CrossCultural;
  throw Error(ErrorCode::InvalidConfig, "mode must be localized, direct or cross-cultural, got '" + s + "'");
}

struct RunConfig
{
  std::uint64_t seed = 1;
  struct Paths
  {
    std::string data;
    std::string target_data;
    std::string model;
    std::string source_model;
    std::string output = "out";
  } paths;
  TrainingConfig training;
  DeploymentMode mode = DeploymentMode::CrossCultural;
  double fraction = 0.02;
  std::size_t jobs = 1;
  bool gpi = false;
  bool teacher_forced = false;
  // synth
  CultureSpec culture;
  int n_tracks = 400;
  double duration = 10.4;
  // ingest: canonical, highd or ngsim
  std::string ingest_format = "canonical";
  // held-out evaluation tracks, fixed across commands
  double holdout_fraction = 0.2;
  std::uint64_t holdout_seed = 99;
  // evaluate
  std::string candidate;
  bool plots = true;

  /// Data the deployment adapts to and is evaluated on.
  const std::string & deployment_data() const { return paths.target_data.empty() ? paths.data : paths.target_data; }
  /// Model that calibration starts from.
  const std::string & calibration_source() const
  {
    return paths.source_model.empty() ? paths.model : paths.source_model;
  }
};

inline nlohmann::json to_json(const RunConfig & c)
{
  const auto & t = c.training;
  return {
    {"seed", c.seed},
    {"paths",
     {{"data", c.paths.data},
      {"target_data", c.paths.target_data},
      {"model", c.paths.model},
      {"source_model", c.paths.source_model},
      {"output", c.paths.output}}},
    {"training",
     {{"gamma", t.gamma},
      {"batch_size", t.batch_size},
      {"epochs", t.epochs},
      {"td_weight", t.td_weight},
      {"gpi_enabled", t.gpi_enabled},
      {"action_bound", t.action_bound},
      {"learning_rate", t.learning_rate},
      {"hidden", t.hidden},
      {"fusion", t.fusion},
      {"validation_fraction", t.validation_fraction},
      {"calibration_learning_rate", t.calibration_learning_rate},
      {"calibration_max_steps", t.calibration_max_steps},
      {"calibration_tolerance", t.calibration_tolerance},
      {"whiten_psi", t.whiten_psi}}},
    {"mode", std::string(to_string(c.mode))},
    {"fraction", c.fraction},
    {"jobs", c.jobs},
    {"gpi", c.gpi},
    {"teacher_forced", c.teacher_forced},
    {"synth", {{"culture", to_json(c.culture)}, {"n_tracks", c.n_tracks}, {"duration", c.duration}}},
    {"ingest", {{"format", c.ingest_format}}},
    {"split", {{"holdout_fraction", c.holdout_fraction}, {"holdout_seed", c.holdout_seed}}},
    {"evaluate", {{"candidate", c.candidate}, {"plots", c.plots}}},
  };
}

namespace detail
{

/// Rejects keys of `user` that `known` lacks.
inline void check_keys(const nlohmann::json & user, const nlohmann::json & known, const std::string & prefix)
{
  if (!user.is_object()) return;
  for (const auto & [key, value] : user.items()) {
    const auto path = prefix.empty() ? key : prefix + "." + key;
    if (!known.is_object() || !known.contains(key)) throw Error(ErrorCode::InvalidConfig, "unknown key '" + path + "'");
    if (value.is_object() && known.at(key).is_object()) check_keys(value, known.at(key), path);
  }
}

template <class T>
void read_field(const nlohmann::json & j, const std::string & dotted, T & dst)
{
  try {
    const nlohmann::json * node = &j;
    std::size_t start = 0;
    while (true) {
      const auto dot = dotted.find('.', start);
      const auto key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      node = &node->at(key);
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    node->get_to(dst);
  } catch (const nlohmann::json::exception &) {
    throw Error(ErrorCode::InvalidConfig, dotted + " has the wrong type");
  }
}

}  // namespace detail

/// Config from a full or partial JSON document; absent keys keep defaults.
inline RunConfig run_config_from_json(const nlohmann::json & user)
{
  if (!user.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
  RunConfig c;
  nlohmann::json j = to_json(c);
  detail::check_keys(user, j, "");
  j.merge_patch(user);
  auto & t = c.training;
  std::string mode;
  detail::read_field(j, "seed", c.seed);
  detail::read_field(j, "paths.data", c.paths.data);
  detail::read_field(j, "paths.target_data", c.paths.target_data);
  detail::read_field(j, "paths.model", c.paths.model);
  detail::read_field(j, "paths.source_model", c.paths.source_model);
  detail::read_field(j, "paths.output", c.paths.output);
  detail::read_field(j, "training.gamma", t.gamma);
  detail::read_field(j, "training.batch_size", t.batch_size);
  detail::read_field(j, "training.epochs", t.epochs);
  detail::read_field(j, "training.td_weight", t.td_weight);
  detail::read_field(j, "training.gpi_enabled", t.gpi_enabled);
  detail::read_field(j, "training.action_bound", t.action_bound);
  detail::read_field(j, "training.learning_rate", t.learning_rate);
  detail::read_field(j, "training.hidden", t.hidden);
  detail::read_field(j, "training.fusion", t.fusion);
  detail::read_field(j, "training.validation_fraction", t.validation_fraction);
  detail::read_field(j, "training.calibration_learning_rate", t.calibration_learning_rate);
  detail::read_field(j, "training.calibration_max_steps", t.calibration_max_steps);
  detail::read_field(j, "training.calibration_tolerance", t.calibration_tolerance);
  detail::read_field(j, "training.whiten_psi", t.whiten_psi);
  detail::read_field(j, "mode", mode);
  detail::read_field(j, "fraction", c.fraction);
  detail::read_field(j, "jobs", c.jobs);
  detail::read_field(j, "gpi", c.gpi);
  detail::read_field(j, "teacher_forced", c.teacher_forced);
  detail::read_field(j, "synth.n_tracks", c.n_tracks);
  detail::read_field(j, "synth.duration", c.duration);
  detail::read_field(j, "ingest.format", c.ingest_format);
  detail::read_field(j, "split.holdout_fraction", c.holdout_fraction);
  detail::read_field(j, "split.holdout_seed", c.holdout_seed);
  detail::read_field(j, "evaluate.candidate", c.candidate);
  detail::read_field(j, "evaluate.plots", c.plots);
  t.seed = c.seed;
  c.mode = parse_mode(mode);
  try {
    c.culture = culture_spec_from_json(j.at("synth").at("culture"));
  } catch (const Error & e) {
    throw Error(e.code(), "synth.culture." + e.detail());
  }
  return c;
}

/// Range checks that do not depend on the command.
inline void validate(const RunConfig & c)
{
  c.training.validate();
  if (!(c.fraction > 0.0 && c.fraction <= 1.0)) throw Error(ErrorCode::InvalidConfig, "fraction must lie in (0, 1]");
  if (c.jobs < 1) throw Error(ErrorCode::InvalidConfig, "jobs must be >= 1");
  if (c.n_tracks < 2) throw Error(ErrorCode::InvalidConfig, "synth.n_tracks must be >= 2");
  if (!(c.duration >= 5.0)) throw Error(ErrorCode::InvalidConfig, "synth.duration must be >= 5");
  if (!(c.holdout_fraction >= 0.0 && c.holdout_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "split.holdout_fraction must lie in [0, 1)");
  }
  if (c.ingest_format != "canonical" && c.ingest_format != "highd" && c.ingest_format != "ngsim") {
    throw Error(ErrorCode::InvalidConfig, "ingest.format must be canonical, highd or ngsim");
  }
  validate(c.culture);
}

/// Applies `key=value` to a config document. The value is parsed as JSON
/// when it parses, otherwise taken as a string.
inline void apply_override(nlohmann::json & j, const std::string & assignment)
{
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(ErrorCode::InvalidConfig, "override '" + assignment + "' is not key=value");
  }
  const auto key = assignment.substr(0, eq);
  const auto text = assignment.substr(eq + 1);
  nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  nlohmann::json * node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const auto part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw Error(ErrorCode::InvalidConfig, "override key '" + key + "' is malformed");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      break;
    }
    if (!node->contains(part) || !(*node)[part].is_object()) (*node)[part] = nlohmann::json::object();
    node = &(*node)[part];
    start = dot + 1;
  }
}

/// Parses a config file; syntax errors carry line and column.
inline nlohmann::json read_config_file(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot read config " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error & e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Digests

inline std::string sha256_hex(std::string_view bytes)
{
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::Io, "sha256 failed");
  }
  std::ostringstream s;
  for (unsigned int i = 0; i < len; ++i) s << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return s.str();
}

inline std::string file_digest(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return sha256_hex(s.str());
}

/// Digest of the network coefficients section of a model file.
inline std::string network_section_digest(const std::filesystem::path & model_path)
{
  std::ifstream in(model_path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + model_path.string());
  nlohmann::json j;
  try {
    in >> j;
    return sha256_hex(j.at("branches").dump());
  } catch (const nlohmann::json::exception & e) {
    throw Error(ErrorCode::CorruptFile, model_path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Shared helpers

inline TrajectoryDataset load_dataset(const std::string & path, const std::string & format = "canonical")
{
  if (path.empty()) throw Error(ErrorCode::InvalidConfig, "no dataset path configured");
  if (format == "highd") return import_highd_like(path);
  if (format == "ngsim") return import_ngsim_like(path);
  return parse_canonical_csv(path);
}

struct DataSplit
{
  std::vector<VehicleId> train;
  std::vector<VehicleId> holdout;
};

/// Held-out evaluation tracks and the remaining training pool. The split
/// depends only on the sample ids and the holdout settings.
inline DataSplit split_tracks(const TrajectoryDataset & ds, const RunConfig & c)
{
  DataSplit s;
  auto ids = ds.sample_ids();
  std::sort(ids.begin(), ids.end());
  if (c.holdout_fraction > 0.0 && ids.size() > 1) s.holdout = select_fraction(ids, c.holdout_fraction, c.holdout_seed);
  for (const auto id : ids) {
    if (!std::binary_search(s.holdout.begin(), s.holdout.end(), id)) s.train.push_back(id);
  }
  if (s.holdout.empty()) s.holdout = ids;
  return s;
}

inline std::filesystem::path output_dir(const RunConfig & c)
{
  std::filesystem::path dir(c.paths.output);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_json(const std::filesystem::path & path, const nlohmann::json & j)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

inline std::string utc_timestamp()
{
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

/// Report with the designated timestamp field removed, for comparisons.
inline nlohmann::json comparable_report(nlohmann::json report)
{
  if (report.contains("metadata")) report["metadata"].erase("generated_at");
  return report;
}

// ---------------------------------------------------------------------------
// Commands

/// Synthetic world to `<out>/world.csv`.
inline int cmd_synth(const RunConfig & c, const Logger & log = {})
{
  const auto dir = output_dir(c);
  const auto ds = gen_world(c.culture, c.n_tracks, c.duration, c.seed);
  write_canonical_csv(ds, dir / "world.csv");
  log.info("synth: " + std::to_string(ds.tracks.size()) + " tracks, " + std::to_string(ds.frame_count()) +
           " frames -> " + (dir / "world.csv").string());
  return kExitOk;
}

/// Any supported input format to `<out>/dataset.csv`.
inline int cmd_ingest(const RunConfig & c, const Logger & log = {})
{
  const auto dir = output_dir(c);
  const auto ds = load_dataset(c.paths.data, c.ingest_format);
  write_canonical_csv(ds, dir / "dataset.csv");
  log.info("ingest: " + std::to_string(ds.tracks.size()) + " tracks kept, " +
           std::to_string(ds.meta.dropped_short_tracks) + " short tracks dropped");
  return kExitOk;
}

/// Archetype (w = ones) on the training pool of `paths.data`, to
/// `<out>/model.json` with its loss curve in `<out>/train_log.json`.
inline int cmd_train(const RunConfig & c, const Logger & log = {})
{
  const auto dir = output_dir(c);
  const auto ds = load_dataset(c.paths.data);
  const auto split = split_tracks(ds, c);
  const auto samples = extract_samples(ds, split.train);
  log.info("train: " + std::to_string(samples.size()) + " samples from " + std::to_string(split.train.size()) +
           " tracks");
  TrainingConfig t = c.training;
  t.seed = c.seed;
  const auto out = train_archetype(samples, t);
  save_model(dir / "model.json", out.model, CultureVector::ones());
  write_json(dir / "train_log.json", {{"samples", samples.size()},
                                      {"train_loss", out.train_loss},
                                      {"validation_loss", out.validation_loss},
                                      {"best_epoch", out.best_epoch}});
  log.info("train: best epoch " + std::to_string(out.best_epoch) + ", validation loss " +
           csv::format_double(out.validation_loss.empty() ? 0.0 : out.validation_loss[out.best_epoch]));
  return kExitOk;
}

/// Culture vector for the deployment data, to `<out>/calibrated_model.json`.
/// Cross-cultural mode uses `fraction` of the training pool, localized mode
/// the whole pool, direct mode keeps w = ones.
inline int cmd_calibrate(const RunConfig & c, const Logger & log = {})
{
  if (c.calibration_source().empty()) throw Error(ErrorCode::InvalidConfig, "paths.source_model is required");
  if (c.mode == DeploymentMode::CrossCultural && c.paths.target_data.empty()) {
    throw Error(ErrorCode::InvalidConfig, "cross-cultural mode requires paths.target_data");
  }
  const auto dir = output_dir(c);
  const auto [model, start] = load_model(c.calibration_source());
  (void)start;
  const auto ds = load_dataset(c.deployment_data());
  const auto split = split_tracks(ds, c);

  std::vector<VehicleId> slice;
  CultureVector culture = CultureVector::ones();
  nlohmann::json info = {{"mode", to_string(c.mode)}};
  if (c.mode != DeploymentMode::Direct) {
    slice = c.mode == DeploymentMode::Localized ? split.train : select_fraction(split.train, c.fraction, c.seed);
    const auto samples = extract_samples(ds, slice);
    const auto cal = calibrate_culture(model, samples, c.training);
    culture = cal.culture;
    info["samples"] = samples.size();
    info["steps"] = cal.steps;
    info["converged"] = cal.converged;
    info["final_loss"] = cal.final_loss;
    log.info("calibrate: " + std::to_string(samples.size()) + " samples from " + std::to_string(slice.size()) +
             " tracks, " + std::to_string(cal.steps) + " steps, loss " + csv::format_double(cal.final_loss));
  }
  const auto out_path = dir / "calibrated_model.json";
  save_model(out_path, model, culture);
  const auto before = network_section_digest(c.calibration_source());
  const auto after = network_section_digest(out_path);
  info["slice_ids"] = slice;
  info["network_digest_source"] = before;
  info["network_digest_calibrated"] = after;
  info["network_unchanged"] = before == after;
  info["culture"] = {{"w_x", culture.w_x}, {"w_y", culture.w_y}};
  write_json(dir / "calibration.json", info);
  if (before != after) throw Error(ErrorCode::CorruptFile, "network section changed during calibration");
  return kExitOk;
}

namespace detail
{

inline std::vector<RolloutResult> rollouts_for(const RunConfig & c, const TrajectoryDataset & ds,
                                               const std::vector<VehicleId> & ids, const ArchetypeModel & model,
                                               const CultureVector & w)
{
  RolloutConfig rc;
  rc.action_bound = c.training.action_bound;
  rc.teacher_forced = c.teacher_forced;
  rc.gpi_enabled = c.gpi || c.training.gpi_enabled;
  rc.gamma = c.training.gamma;
  return run_rollouts(ds, ids, [&](VehicleId) { return ModelPolicy{&model, w, rc}; }, rc, c.jobs);
}

}  // namespace detail

/// Closed-loop (or teacher-forced) rollouts of the held-out tracks, to
/// `<out>/rollout/`.
inline int cmd_rollout(const RunConfig & c, const Logger & log = {})
{
  if (c.paths.model.empty()) throw Error(ErrorCode::InvalidConfig, "paths.model is required");
  const auto dir = output_dir(c);
  const auto [model, w] = load_model(c.paths.model);
  const auto ds = load_dataset(c.deployment_data());
  const auto split = split_tracks(ds, c);
  const auto results = detail::rollouts_for(c, ds, split.holdout, model, w);
  export_traces(ds, results, dir / "rollout");
  log.info("rollout: " + std::to_string(results.size()) + " tracks -> " + (dir / "rollout").string());
  return kExitOk;
}

/// Evaluation report on the held-out tracks, to `<out>/report.json` plus
/// density CSVs and SVG plots. The candidate is `evaluate.candidate` when
/// set, else rollouts of `paths.model`.
inline int cmd_evaluate(const RunConfig & c, const Logger & log = {})
{
  if (c.candidate.empty() && c.paths.model.empty()) {
    throw Error(ErrorCode::InvalidConfig, "paths.model or evaluate.candidate is required");
  }
  const auto dir = output_dir(c);
  const auto reference = load_dataset(c.deployment_data());
  const auto split = split_tracks(reference, c);

  EvaluationReport rep;
  nlohmann::json action_mse = nullptr;
  if (!c.candidate.empty()) {
    const auto candidate = load_dataset(c.candidate);
    rep = evaluate_datasets(reference, candidate, split.holdout);
  } else {
    const auto [model, w] = load_model(c.paths.model);
    const auto results = detail::rollouts_for(c, reference, split.holdout, model, w);
    rep = evaluate_datasets(reference, simulated_dataset(reference, results), split.holdout);
    for (const auto & r : results) rep.cases.push_back(case_report(r));
    const auto samples = extract_samples(reference, split.holdout);
    const auto l = action_loss(model, w, samples);
    action_mse = {{"total", l.total}, {"x", l.mse_x}, {"y", l.mse_y}, {"samples", samples.size()}};
  }
  nlohmann::json meta = {{"generated_at", utc_timestamp()},
                         {"mode", to_string(c.mode)},
                         {"seed", c.seed},
                         {"holdout_tracks", split.holdout.size()},
                         {"teacher_forced", c.teacher_forced},
                         {"gpi", c.gpi || c.training.gpi_enabled}};
  auto j = report_json(rep, meta);
  j["action_mse"] = action_mse;
  write_json(dir / "report.json", j);
  write_density_csvs(rep, dir);
  if (c.plots) write_density_svgs(rep, dir);
  log.info("evaluate: " + std::to_string(split.holdout.size()) + " held-out tracks, report -> " +
           (dir / "report.json").string());
  return kExitOk;
}

/// Runs one named command, mapping library errors to exit statuses.
inline int run_command(const std::string & name, const RunConfig & c, const Logger & log = {})
{
  try {
    validate(c);
    if (name == "synth") return cmd_synth(c, log);
    if (name == "ingest") return cmd_ingest(c, log);
    if (name == "train") return cmd_train(c, log);
    if (name == "calibrate") return cmd_calibrate(c, log);
    if (name == "rollout") return cmd_rollout(c, log);
    if (name == "evaluate") return cmd_evaluate(c, log);
    log.error("unknown command '" + name + "'");
    return kExitConfig;
  } catch (const Error & e) {
    log.error(e.what());
    return exit_status_for(e.code());
  } catch (const std::filesystem::filesystem_error & e) {
    log.error(e.what());
    return kExitData;
  }
}

}  // namespace culture_bridge

#endif  // CULTURE_BRIDGE__PIPELINE_HPP_
