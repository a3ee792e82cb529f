// SPDX-License-Identifier: Apache-2.0
//
// Command-line entry point: build-corpus, ingest, analyze, prompt, decompile,
// evaluate, report.
#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "graphdec/ir_model.hpp"
#include "graphdec/llm_gateway.hpp"
#include "graphdec/prompt_builder.hpp"

namespace graphdec::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFatal = 1;
inline constexpr int kExitPartial = 2;
inline constexpr int kExitUsage = 64;

// Ablation ladder: each preset adds one ingredient to the previous one.
enum class Preset { base, cfg, rules, func, full };

std::string_view to_string(Preset p);
std::optional<Preset> parse_preset(std::string_view text);

struct ExperimentConfig {
  PromptConfig prompt;
  bool enable_feedback = false;

  bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig preset_config(Preset p);

// Covers the prompt toggles and the feedback switch, so presets that share a
// prompt shape still get distinct fingerprints.
std::string experiment_fingerprint(const ExperimentConfig& e);

struct RunConfig {
  std::string subcommand;
  Preset preset = Preset::full;
  ExperimentConfig experiment = preset_config(Preset::full);
  ModelConfig model;
  std::filesystem::path corpus;
  std::filesystem::path exports;  // defaults to <corpus>/exports
  std::filesystem::path out;
  std::filesystem::path matrix;   // defaults to <corpus>/matrix.json, else host gcc
  std::filesystem::path function;
  std::filesystem::path results;
  std::vector<ArchId> archs;
  std::vector<OptLevel> opts;
  std::vector<std::string> formats;
  std::size_t workers = 1;

  nlohmann::json to_json() const;
  // Preset name, suffixed with +feedback/-feedback when the flag overrides it.
  std::string config_label() const;
  std::string fingerprint() const;
};

// Parses argv (without the program name) and runs the subcommand. Logs go to
// stderr; the prompt, analyze and ingest subcommands print to out.
int run(const std::vector<std::string>& args, std::ostream& out);
int run(int argc, char** argv);

}  // namespace graphdec::cli
