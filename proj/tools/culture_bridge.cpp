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

#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"

#include "culture_bridge/pipeline.hpp"

namespace cb = culture_bridge;

namespace
{

spdlog::level::level_enum level_from_env()
{
  const char * env = std::getenv("CULTURE_BRIDGE_LOG");
  const std::string v = env ? env : "info";
  if (v == "error") return spdlog::level::err;
  if (v == "warn") return spdlog::level::warn;
  if (v == "debug") return spdlog::level::debug;
  return spdlog::level::info;
}

cb::Logger make_logger()
{
  return {[](cb::LogLevel level, const std::string & msg) {
    switch (level) {
      case cb::LogLevel::Error: spdlog::error(msg); break;
      case cb::LogLevel::Warn: spdlog::warn(msg); break;
      case cb::LogLevel::Info: spdlog::info(msg); break;
      case cb::LogLevel::Debug: spdlog::debug(msg); break;
    }
  }};
}

}  // namespace

int main(int argc, char ** argv)
{
  auto logger = spdlog::stderr_color_mt("culture_bridge");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(level_from_env());

  CLI::App app{"Archetype transfer and data-light culture calibration for highway driving"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<double> fraction;
  std::optional<std::string> out, mode, data, target_data, model, source_model, candidate, format;
  bool gpi = false;
  bool teacher_forced = false;

  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--set", overrides, "Config override key=value (repeatable)");
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--out", out, "Output directory (paths.output)");
  app.add_option("--jobs", jobs, "Concurrent rollouts");
  app.add_option("--fraction", fraction, "Calibration slice of the training tracks");
  app.add_option("--mode", mode, "localized | direct | cross-cultural");
  app.add_option("--data", data, "Dataset (paths.data)");
  app.add_option("--target-data", target_data, "Deployment dataset (paths.target_data)");
  app.add_option("--model", model, "Model file (paths.model)");
  app.add_option("--source-model", source_model, "Transferred model (paths.source_model)");
  app.add_option("--candidate", candidate, "Dataset to evaluate instead of rollouts");
  app.add_option("--format", format, "Ingest format: canonical | highd | ngsim");
  app.add_flag("--gpi", gpi, "Select actions by policy improvement over a grid");
  app.add_flag("--teacher-forced", teacher_forced, "Feed recorded history to the policy");

  for (const char * name : {"synth", "ingest", "train", "calibrate", "rollout", "evaluate"}) {
    app.add_subcommand(name, std::string("Run the ") + name + " step");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cb::kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  cb::RunConfig cfg;
  try {
    nlohmann::json j = config_path.empty() ? nlohmann::json::object() : cb::read_config_file(config_path);
    for (const auto & o : overrides) cb::apply_override(j, o);
    const auto set = [&](const std::string & key, const nlohmann::json & v) {
      cb::apply_override(j, key + "=" + v.dump());
    };
    if (seed) set("seed", *seed);
    if (jobs) set("jobs", *jobs);
    if (fraction) set("fraction", *fraction);
    if (out) set("paths.output", *out);
    if (mode) set("mode", *mode);
    if (data) set("paths.data", *data);
    if (target_data) set("paths.target_data", *target_data);
    if (model) set("paths.model", *model);
    if (source_model) set("paths.source_model", *source_model);
    if (candidate) set("evaluate.candidate", *candidate);
    if (format) set("ingest.format", *format);
    if (gpi) set("gpi", true);
    if (teacher_forced) set("teacher_forced", true);
    cfg = cb::run_config_from_json(j);
  } catch (const cb::Error & e) {
    spdlog::error(e.what());
    return cb::exit_status_for(e.code());
  }

  spdlog::debug("{}: seed {}, mode {}, output {}", command, cfg.seed, cb::to_string(cfg.mode), cfg.paths.output);
  return cb::run_command(command, cfg, make_logger());
}
