// SPDX-License-Identifier: Apache-2.0
//
// Compiles self-contained C tasks across an architecture x optimization
// matrix and records the result in a manifest.
#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "graphdec/feedback_loop.hpp"
#include "graphdec/ir_model.hpp"

namespace graphdec {

struct Task {
  std::string id;
  std::filesystem::path source_path;
  std::filesystem::path harness_path;
  std::string reference_function;

  bool operator==(const Task&) const = default;
};

// Reads <dir>/task.json: {"id", "source", "harness", "reference_function"}
// with paths relative to dir. Throws SchemaError or IoError.
Task load_task(const std::filesystem::path& dir);

// Every <corpus>/tasks/*/task.json, sorted by id.
std::vector<Task> load_tasks(const std::filesystem::path& corpus_dir);

enum class EntryStatus { built, toolchain_missing, compile_failed };

std::string_view to_string(EntryStatus s);
std::optional<EntryStatus> parse_entry_status(std::string_view text);

inline constexpr std::string_view kPendingExport = "pending";

struct ManifestEntry {
  std::string task;
  ArchId arch = ArchId::x86_64;
  OptLevel opt = OptLevel::O0;
  std::string binary_path;  // relative to the manifest directory
  std::string export_path = std::string(kPendingExport);
  EntryStatus status = EntryStatus::toolchain_missing;
  std::string command;  // compile command as run, for provenance
  std::string diagnostics;

  bool operator==(const ManifestEntry&) const = default;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  std::vector<std::string> tasks;
  std::vector<ArchId> archs;
  std::vector<OptLevel> opts;
  nlohmann::json matrix_snapshot;
  std::string created_at;  // ISO-8601 UTC
};

nlohmann::json manifest_to_json(const Manifest& m);
Manifest manifest_from_json(const nlohmann::json& j);
void write_manifest(const Manifest& m, const std::filesystem::path& path);
Manifest read_manifest(const std::filesystem::path& path);

struct BuildOptions {
  std::size_t workers = 1;
};

// One entry per task x arch x opt in that order. Each built entry leaves
// <out>/corpus/<arch>/<opt>/<task> (linked with its harness) and <task>.o.
// Missing toolchains and failed builds are recorded, never thrown.
Manifest build_corpus(const std::vector<Task>& tasks, const ToolchainMatrix& matrix,
                      const std::vector<ArchId>& archs, const std::vector<OptLevel>& opts,
                      const std::filesystem::path& out_dir, const BuildOptions& options = {});

struct Discrepancy {
  enum class Kind { missing_file, count_mismatch, duplicate_entry };
  Kind kind;
  std::string message;
};

std::string_view to_string(Discrepancy::Kind k);

// Rechecks binaries of built entries (relative to root), entry arithmetic and
// uniqueness.
std::vector<Discrepancy> verify_manifest(const Manifest& m, const std::filesystem::path& root);

}  // namespace graphdec
