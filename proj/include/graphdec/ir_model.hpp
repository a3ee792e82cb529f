// SPDX-License-Identifier: Apache-2.0
//
// Ingestion data model for per-function decompiler exports.
//
// One FunctionAnalysis is produced per function by the upstream exporter and
// serialized as a single JSON document (schema_version 1). Block identifiers
// are opaque strings; the exporter emits "BB{k}" where k is the rank of the
// block's start address, and every later stage refers to blocks by that id.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace graphdec {

using BlockId = std::string;

inline constexpr int kSchemaVersion = 1;

enum class ArchId { x86_32, x86_64, arm_32, aarch64, mips_32, mips_64 };
enum class OptLevel { O0, O1, O2, O3 };

inline constexpr ArchId kAllArchs[] = {ArchId::x86_32,  ArchId::x86_64,
                                       ArchId::arm_32,  ArchId::aarch64,
                                       ArchId::mips_32, ArchId::mips_64};
inline constexpr OptLevel kAllOptLevels[] = {OptLevel::O0, OptLevel::O1,
                                             OptLevel::O2, OptLevel::O3};

std::string_view to_string(ArchId arch);
std::string_view to_string(OptLevel opt);
std::optional<ArchId> parse_arch(std::string_view text);
std::optional<OptLevel> parse_opt_level(std::string_view text);

// Architecture of the machine this binary was built for.
ArchId host_arch();

enum class EdgeKind { fallthrough, taken_branch, unconditional, computed };

std::string_view to_string(EdgeKind kind);
std::optional<EdgeKind> parse_edge_kind(std::string_view text);

struct BasicBlock {
  BlockId id;
  std::uint64_t start_address = 0;
  std::vector<std::string> distilled_ops;

  bool operator==(const BasicBlock&) const = default;
};

struct CfgEdge {
  BlockId from;
  BlockId to;
  EdgeKind kind = EdgeKind::fallthrough;

  bool operator==(const CfgEdge&) const = default;
};

struct CallSite {
  BlockId in_block;
  std::string callee_name;
  bool is_import = false;

  bool operator==(const CallSite&) const = default;
};

struct ConstantRef {
  std::variant<std::int64_t, std::string> value;
  BlockId in_block;

  bool operator==(const ConstantRef&) const = default;
};

struct Metadata {
  std::vector<BlockId> loop_header_hints;
  std::vector<std::string> string_refs;
  std::vector<std::string> imported_functions;
  std::vector<ConstantRef> constants;

  bool operator==(const Metadata&) const = default;
};

// Inclusive, 1-based line range inside raw_pseudo_c.
struct SourceSpan {
  int start_line = 0;
  int end_line = 0;

  bool operator==(const SourceSpan&) const = default;
};

struct FunctionAnalysis {
  std::string name;
  std::string signature;
  ArchId architecture = ArchId::x86_64;
  OptLevel opt_level = OptLevel::O0;
  BlockId entry_block;
  std::vector<BasicBlock> blocks;
  std::vector<CfgEdge> edges;
  std::vector<CallSite> call_sites;
  Metadata metadata;
  std::string raw_pseudo_c;
  // Absent entries mean the block has no clean anchor in the pseudo-C.
  std::map<BlockId, SourceSpan> block_source_map;

  const BasicBlock* find_block(std::string_view id) const;

  bool operator==(const FunctionAnalysis&) const = default;
};

// Throws SchemaError on malformed JSON, missing required keys, wrong value
// types, unsupported schema versions, unknown architectures, opt levels or edge
// kinds. Unknown keys are ignored.
FunctionAnalysis parse_function_bundle(std::string_view raw);

// Canonical JSON text; parse_function_bundle(serialize_function_bundle(f)) == f.
std::string serialize_function_bundle(const FunctionAnalysis& f);

FunctionAnalysis load_function_bundle(const std::string& path);

struct Violation {
  enum class Kind {
    duplicate_block_id,
    duplicate_start_address,
    missing_entry_block,
    dangling_edge_endpoint,
    duplicate_edge,
    dangling_call_site,
    dangling_metadata_block,
    span_out_of_range,
    span_unknown_block,
    empty_raw_pseudo_c,
    empty_block_ops,
  };

  Kind kind;
  BlockId block;  // offending or referenced block, may be empty
  std::string message;

  bool operator==(const Violation&) const = default;
};

std::string_view to_string(Violation::Kind kind);

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
};

// Enumerates every invariant violation of the bundle. Never throws.
ValidationReport validate_bundle(const FunctionAnalysis& f);

// Number of lines in text; a trailing newline does not start a new line.
int count_lines(std::string_view text);

}  // namespace graphdec
