// SPDX-License-Identifier: Apache-2.0
//
// Renders the hierarchical prompt: a system part (task description plus the
// critical rules) and a user part made of bracketed segments in the order
// FUNCTION_CONTEXT, CFG_OVERVIEW, BLOCK_DETAILS, RAW_DECOMPILED_CODE.
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "graphdec/graph_analysis.hpp"
#include "graphdec/ir_model.hpp"

namespace graphdec {

inline constexpr std::string_view kFunctionContext = "FUNCTION_CONTEXT";
inline constexpr std::string_view kCfgOverview = "CFG_OVERVIEW";
inline constexpr std::string_view kBlockDetails = "BLOCK_DETAILS";
inline constexpr std::string_view kRawDecompiledCode = "RAW_DECOMPILED_CODE";
inline constexpr std::string_view kCompilerFeedback = "COMPILER_FEEDBACK";

inline constexpr int kMinTokenBudget = 512;

struct PromptConfig {
  bool include_cfg = true;  // CFG_OVERVIEW and BLOCK_DETAILS
  bool include_rules = true;
  bool include_function_context = true;
  int token_budget = 16384;
  std::string rule_set_version = "v1";

  // Stable key=value rendering used for fingerprints and run metadata.
  std::string canonical() const;
  bool operator==(const PromptConfig&) const = default;
};

std::string config_fingerprint(const PromptConfig& config);

struct TextSpan {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive

  bool operator==(const TextSpan&) const = default;
};

struct PromptBundle {
  std::string function_name;
  std::string system_text;
  std::string user_text;
  // In document order; each span covers the bracketed header through the end
  // of the segment body.
  std::vector<std::pair<std::string, TextSpan>> segment_spans;
  std::vector<std::string> rules;
  std::string config_fingerprint;
  int estimated_tokens = 0;
  std::vector<std::string> truncations;

  std::optional<TextSpan> span(std::string_view segment) const;
  std::string_view segment_text(std::string_view segment) const;
  std::vector<std::string> segment_names() const;
};

// Character count divided by four, rounded up.
int estimate_tokens(std::size_t chars);

// "[NAME]"
std::string segment_header(std::string_view name);

// Each render_* returns the complete segment, header line included, ending in
// a newline.
std::string render_function_context(const FunctionAnalysis& f, const StructuralAnalysis& a,
                                    bool include_value_lists = true);
std::string render_cfg_overview(const StructuralAnalysis& a);
std::string render_block_details(const FunctionAnalysis& f, const StructuralAnalysis& a);
std::string render_raw_code(const FunctionAnalysis& f);

// Throws UnknownRuleSetVersion.
std::vector<std::string> rule_catalog(ArchId arch, std::string_view version);
std::vector<std::string> rule_set_versions();

std::string_view task_description();

// Throws ContractError for budgets below kMinTokenBudget, UnknownRuleSetVersion,
// and BudgetImpossible when the untruncatable parts alone exceed the budget.
PromptBundle assemble_prompt(const FunctionAnalysis& f, const StructuralAnalysis& a,
                             const PromptConfig& config);

// Recovers (from, to) pairs from a rendered CFG_OVERVIEW segment.
std::vector<std::pair<std::string, std::string>> parse_cfg_overview_edges(
    std::string_view segment);

}  // namespace graphdec
