// SPDX-License-Identifier: Apache-2.0
//
// Per-attempt metrics and their aggregation into O0..O3/AVG tables.
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

// 1 - levenshtein / max(|a|, |b|) over characters, after CRLF/CR -> LF.
// Two empty strings are identical (1.0).
double edit_similarity(std::string_view candidate, std::string_view reference);

std::size_t levenshtein(std::string_view a, std::string_view b);

struct EvalRecord {
  std::string task;
  ArchId arch = ArchId::x86_64;
  OptLevel opt = OptLevel::O0;
  bool compilable = false;
  bool linkable = false;
  std::optional<bool> functional;  // nullopt: tests could not run here
  double edit_similarity = 0.0;
  std::string config_fingerprint;
  std::string config;  // human label such as a preset name; grouping key

  bool monotone() const {
    return (!functional.value_or(false) || linkable) && (!linkable || compilable);
  }
  bool operator==(const EvalRecord&) const = default;
};

nlohmann::json record_to_json(const EvalRecord& r);
EvalRecord record_from_json(const nlohmann::json& j);

void write_records_jsonl(const std::filesystem::path& path, const std::vector<EvalRecord>& records);
std::vector<EvalRecord> read_records_jsonl(const std::filesystem::path& path);

// Stage booleans come from the final candidate. A link or test stage that
// never ran because an earlier stage failed counts as failed, and a skipped
// test after a successful link counts as not measured.
EvalRecord evaluate_attempt(const DecompilationAttempt& a, std::string_view reference_source,
                            std::string config_label = {});

struct GroupBy {
  bool arch = true;
  bool opt = true;
  bool config = true;
};

inline constexpr std::string_view kAllLabel = "ALL";
inline constexpr std::string_view kAvgLabel = "AVG";

// Rows keep raw counts; rates are derived so merging stays exact.
struct ReportRow {
  std::string arch;    // arch id or ALL
  std::string opt;     // O0..O3, AVG or ALL
  std::string config;  // label or ALL
  std::size_t n = 0;
  std::size_t compilable = 0;
  std::size_t linkable = 0;
  std::size_t functional = 0;
  std::size_t functional_measured = 0;
  double edit_similarity_sum = 0.0;

  // AVG rows carry the mean of their opt rows instead of count ratios.
  bool is_average = false;
  double avg_comp = 0.0;
  double avg_link = 0.0;
  std::optional<double> avg_func;
  double avg_editsim = 0.0;

  double comp_rate() const;                  // percent
  double link_rate() const;                  // percent
  std::optional<double> func_rate() const;   // percent; nullopt if nothing measured
  double mean_edit_similarity() const;       // [0, 1]
  std::size_t functional_not_measured() const { return n - functional_measured; }
};

struct ReportTable {
  GroupBy group_by;
  std::vector<ReportRow> rows;  // sorted by (arch, config, opt) with AVG last
};

// Throws EmptyInput on an empty record list.
ReportTable aggregate(const std::vector<EvalRecord>& records, const GroupBy& group_by = {});

enum class ReportFormat { csv, json, markdown };

std::optional<ReportFormat> parse_report_format(std::string_view text);
std::string_view extension_for(ReportFormat f);

std::string render_report(const ReportTable& t, ReportFormat format);
// Throws IoError.
void emit_report(const ReportTable& t, ReportFormat format, const std::filesystem::path& path);

}  // namespace graphdec
