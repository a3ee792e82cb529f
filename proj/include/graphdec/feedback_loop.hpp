// SPDX-License-Identifier: Apache-2.0
//
// First-pass decompilation, compile/link/test of candidates, and the single
// compiler-diagnostics repair round.
#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "graphdec/ir_model.hpp"
#include "graphdec/llm_gateway.hpp"
#include "graphdec/prompt_builder.hpp"

namespace graphdec {

inline constexpr std::size_t kMaxDiagnosticLines = 40;

// Command templates are split on whitespace into argv before substitution, so
// substituted paths may contain spaces. A token that is exactly "{opt}" expands
// to every word of the level's flags.
struct Toolchain {
  ArchId arch = ArchId::x86_64;
  std::string compile_cmd_template;  // {src} {out} {opt}
  std::string link_cmd_template;     // {obj} {harness} {out}
  std::string run_cmd_template;      // {exe}; empty means tests cannot run here
  std::chrono::seconds timeout{10};
  std::map<OptLevel, std::string> opt_flags;  // defaults to "-O<n>"

  std::string opt_flag(OptLevel opt) const;
  // Throws ContractError naming the first missing placeholder.
  void validate() const;
  bool operator==(const Toolchain&) const = default;
};

struct ToolchainMatrix {
  std::vector<Toolchain> toolchains;

  const Toolchain* find(ArchId arch) const;
};

// {"toolchains": [{"arch", "compile", "link", "run", "timeout_seconds",
// "opt_flags": {"O3": "..."}}]}. Throws SchemaError.
ToolchainMatrix parse_toolchain_matrix(std::string_view json_text);
ToolchainMatrix load_toolchain_matrix(const std::filesystem::path& path);
nlohmann::json toolchain_matrix_to_json(const ToolchainMatrix& m);

// gcc for the host architecture.
ToolchainMatrix default_host_matrix();

std::vector<std::string> expand_command(std::string_view templ,
                                        const std::map<std::string, std::string>& values,
                                        std::string_view opt_flags = {});

enum class StageStatus { pass, fail, skipped };

std::string_view to_string(StageStatus s);

struct StageResult {
  StageStatus status = StageStatus::skipped;
  std::string diagnostics;  // empty when status is pass
  std::chrono::milliseconds duration{0};

  bool passed() const { return status == StageStatus::pass; }
};

// First max_lines lines plus a marker line when anything was cut. Input that
// already carries the marker is left alone.
std::string truncate_diagnostics(std::string_view text, std::size_t max_lines = kMaxDiagnosticLines);

// Writes <stem>.c into workdir and compiles it to <stem>.o. Throws
// ToolchainUnavailable when the compiler cannot be found.
StageResult compile_object(std::string_view source, const Toolchain& t, OptLevel opt,
                           const std::filesystem::path& workdir, std::string_view stem = "candidate");

// Writes harness.c next to the object and links both into "exe".
StageResult link_executable(const std::filesystem::path& object, std::string_view harness_source,
                            const Toolchain& t, const std::filesystem::path& workdir);

// Pass iff the executable exits 0 within the toolchain timeout. Skipped when
// no run command is configured or its launcher is missing.
StageResult run_tests(const std::filesystem::path& exe, const Toolchain& t,
                      const std::filesystem::path& workdir);

// Appends a COMPILER_FEEDBACK segment; every original segment stays
// byte-identical. Throws ContractError on empty diagnostics.
PromptBundle build_repair_prompt(const PromptBundle& prompt, std::string_view diagnostics,
                                 std::string_view previous_candidate = {});

// Header with standard prototypes for recognized imported functions; empty
// when none are recognized.
std::string import_header(const std::vector<std::string>& imported_functions);

struct DecompilationAttempt {
  std::string function_ref;
  ArchId arch = ArchId::x86_64;
  OptLevel opt = OptLevel::O0;
  std::string config_fingerprint;
  std::string first_candidate;
  std::optional<std::string> repair_candidate;
  bool repair_used = false;
  StageResult first_compile;
  StageResult compile;  // of the final candidate
  StageResult link;
  StageResult test;
  int model_calls = 0;

  const std::string& final_candidate() const {
    return repair_candidate ? *repair_candidate : first_candidate;
  }
};

nlohmann::json attempt_to_json(const DecompilationAttempt& a);
DecompilationAttempt attempt_from_json(const nlohmann::json& j);

struct AttemptOptions {
  // When set, link and test run inline after a successful compile.
  std::optional<std::string> harness_source;
  // When set, candidate sources, objects, executables and stage logs are
  // copied here.
  std::optional<std::filesystem::path> artifact_dir;
  // Recorded on the attempt instead of the prompt fingerprint, so runs that
  // differ only in feedback stay distinguishable.
  std::optional<std::string> config_fingerprint;
};

// assemble -> complete -> extract -> compile, then one repair round when the
// compile failed and feedback is enabled. Gateway and toolchain errors
// propagate; bad candidates are recorded as failed stages.
DecompilationAttempt decompile_function(const FunctionAnalysis& f, const PromptConfig& config,
                                        LlmGateway& gateway, const Toolchain& toolchain,
                                        bool enable_feedback, const AttemptOptions& options = {});

}  // namespace graphdec
