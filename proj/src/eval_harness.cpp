// SPDX-License-Identifier: Apache-2.0
#include "graphdec/eval_harness.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <tuple>

#include "graphdec/errors.hpp"

namespace graphdec {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string normalize_newlines(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\r') {
      out += '\n';
      if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
    } else {
      out += text[i];
    }
  }
  return out;
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

int opt_rank(std::string_view opt) {
  if (auto o = parse_opt_level(opt)) return static_cast<int>(*o);
  return opt == kAvgLabel ? 100 : 200;
}

using GroupKey = std::tuple<std::string, std::string, std::string>;  // arch, config, opt

std::string rate_cell(std::optional<double> v) { return v ? fixed(*v, 1) : std::string("n/a"); }

}  // namespace

std::size_t levenshtein(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double edit_similarity(std::string_view candidate, std::string_view reference) {
  const std::string a = normalize_newlines(candidate);
  const std::string b = normalize_newlines(reference);
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

json record_to_json(const EvalRecord& r) {
  return {{"task", r.task},
          {"arch", to_string(r.arch)},
          {"opt", to_string(r.opt)},
          {"compilable", r.compilable},
          {"linkable", r.linkable},
          {"functional", r.functional ? json(*r.functional) : json(nullptr)},
          {"edit_similarity", r.edit_similarity},
          {"config_fingerprint", r.config_fingerprint},
          {"config", r.config}};
}

EvalRecord record_from_json(const json& j) {
  try {
    EvalRecord r;
    r.task = j.at("task").get<std::string>();
    auto arch = parse_arch(j.at("arch").get<std::string>());
    auto opt = parse_opt_level(j.at("opt").get<std::string>());
    if (!arch || !opt) throw SchemaError("record: bad arch or opt");
    r.arch = *arch;
    r.opt = *opt;
    r.compilable = j.at("compilable").get<bool>();
    r.linkable = j.at("linkable").get<bool>();
    if (!j.at("functional").is_null()) r.functional = j["functional"].get<bool>();
    r.edit_similarity = j.at("edit_similarity").get<double>();
    r.config_fingerprint = j.value("config_fingerprint", std::string());
    r.config = j.value("config", std::string());
    return r;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("record: ") + e.what());
  }
}

void write_records_jsonl(const fs::path& path, const std::vector<EvalRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<EvalRecord> read_records_jsonl(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<EvalRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": malformed JSON");
    }
    records.push_back(record_from_json(j));
  }
  return records;
}

EvalRecord evaluate_attempt(const DecompilationAttempt& a, std::string_view reference_source,
                            std::string config_label) {
  EvalRecord r;
  r.task = a.function_ref;
  r.arch = a.arch;
  r.opt = a.opt;
  r.compilable = a.compile.passed();
  r.linkable = r.compilable && a.link.passed();
  if (!r.linkable) {
    r.functional = false;
  } else if (a.test.status != StageStatus::skipped) {
    r.functional = a.test.passed();
  }
  r.edit_similarity = edit_similarity(a.final_candidate(), reference_source);
  r.config_fingerprint = a.config_fingerprint;
  r.config = config_label.empty() ? a.config_fingerprint : std::move(config_label);
  return r;
}

double ReportRow::comp_rate() const {
  if (is_average) return avg_comp;
  return n ? 100.0 * static_cast<double>(compilable) / static_cast<double>(n) : 0.0;
}

double ReportRow::link_rate() const {
  if (is_average) return avg_link;
  return n ? 100.0 * static_cast<double>(linkable) / static_cast<double>(n) : 0.0;
}

std::optional<double> ReportRow::func_rate() const {
  if (is_average) return avg_func;
  if (functional_measured == 0) return std::nullopt;
  return 100.0 * static_cast<double>(functional) / static_cast<double>(functional_measured);
}

double ReportRow::mean_edit_similarity() const {
  if (is_average) return avg_editsim;
  return n ? edit_similarity_sum / static_cast<double>(n) : 0.0;
}

ReportTable aggregate(const std::vector<EvalRecord>& records, const GroupBy& group_by) {
  if (records.empty()) throw EmptyInput("aggregate: no records");

  std::map<GroupKey, ReportRow> groups;
  for (const auto& r : records) {
    ReportRow key_row;
    key_row.arch = group_by.arch ? std::string(to_string(r.arch)) : std::string(kAllLabel);
    key_row.opt = group_by.opt ? std::string(to_string(r.opt)) : std::string(kAllLabel);
    key_row.config = group_by.config ? r.config : std::string(kAllLabel);
    GroupKey key{key_row.arch, key_row.config, key_row.opt};
    auto [it, inserted] = groups.try_emplace(key, key_row);
    ReportRow& row = it->second;
    ++row.n;
    row.compilable += r.compilable ? 1 : 0;
    row.linkable += r.linkable ? 1 : 0;
    if (r.functional) {
      ++row.functional_measured;
      row.functional += *r.functional ? 1 : 0;
    }
    row.edit_similarity_sum += r.edit_similarity;
  }

  ReportTable table;
  table.group_by = group_by;
  for (auto& [key, row] : groups) table.rows.push_back(row);

  if (group_by.opt) {
    // One AVG row per (arch, config): plain mean of the opt rows present.
    std::map<std::pair<std::string, std::string>, std::vector<const ReportRow*>> by_series;
    for (const auto& row : table.rows) by_series[{row.arch, row.config}].push_back(&row);
    std::vector<ReportRow> averages;
    for (const auto& [series, rows] : by_series) {
      ReportRow avg;
      avg.arch = series.first;
      avg.config = series.second;
      avg.opt = std::string(kAvgLabel);
      avg.is_average = true;
      double func_sum = 0.0;
      std::size_t func_cols = 0;
      for (const ReportRow* r : rows) {
        avg.n += r->n;
        avg.compilable += r->compilable;
        avg.linkable += r->linkable;
        avg.functional += r->functional;
        avg.functional_measured += r->functional_measured;
        avg.edit_similarity_sum += r->edit_similarity_sum;
        avg.avg_comp += r->comp_rate();
        avg.avg_link += r->link_rate();
        avg.avg_editsim += r->mean_edit_similarity();
        if (auto f = r->func_rate()) {
          func_sum += *f;
          ++func_cols;
        }
      }
      const double cols = static_cast<double>(rows.size());
      avg.avg_comp /= cols;
      avg.avg_link /= cols;
      avg.avg_editsim /= cols;
      if (func_cols) avg.avg_func = func_sum / static_cast<double>(func_cols);
      averages.push_back(std::move(avg));
    }
    for (auto& a : averages) table.rows.push_back(std::move(a));
  }

  std::stable_sort(table.rows.begin(), table.rows.end(), [](const ReportRow& x, const ReportRow& y) {
    return std::tuple(x.arch, x.config, opt_rank(x.opt)) <
           std::tuple(y.arch, y.config, opt_rank(y.opt));
  });
  return table;
}

std::optional<ReportFormat> parse_report_format(std::string_view text) {
  if (text == "csv") return ReportFormat::csv;
  if (text == "json") return ReportFormat::json;
  if (text == "markdown" || text == "md") return ReportFormat::markdown;
  return std::nullopt;
}

std::string_view extension_for(ReportFormat f) {
  switch (f) {
    case ReportFormat::csv: return "csv";
    case ReportFormat::json: return "json";
    case ReportFormat::markdown: return "md";
  }
  return "txt";
}

std::string render_report(const ReportTable& t, ReportFormat format) {
  std::string out;
  switch (format) {
    case ReportFormat::csv: {
      out = "arch,opt,config,comp,link,func,editsim,n\n";
      for (const auto& r : t.rows) {
        out += r.arch + "," + r.opt + "," + r.config + "," + fixed(r.comp_rate(), 1) + "," +
               fixed(r.link_rate(), 1) + "," + rate_cell(r.func_rate()) + "," +
               fixed(r.mean_edit_similarity(), 4) + "," + std::to_string(r.n) + "\n";
      }
      return out;
    }
    case ReportFormat::json: {
      json rows = json::array();
      for (const auto& r : t.rows) {
        auto func = r.func_rate();
        rows.push_back({{"arch", r.arch},
                        {"opt", r.opt},
                        {"config", r.config},
                        {"comp", r.comp_rate()},
                        {"link", r.link_rate()},
                        {"func", func ? json(*func) : json(nullptr)},
                        {"editsim", r.mean_edit_similarity()},
                        {"n", r.n},
                        {"functional_not_measured", r.functional_not_measured()}});
      }
      return json{{"rows", rows}}.dump(2) + "\n";
    }
    case ReportFormat::markdown: {
      std::map<std::string, std::vector<const ReportRow*>> by_arch;
      std::vector<std::string> arch_order;
      for (const auto& r : t.rows) {
        if (!by_arch.count(r.arch)) arch_order.push_back(r.arch);
        by_arch[r.arch].push_back(&r);
      }
      for (const auto& arch : arch_order) {
        if (!out.empty()) out += "\n";
        out += "## " + arch + "\n\n";
        out += "| opt | config | comp (%) | link (%) | func (%) | editsim | n |\n";
        out += "|---|---|---:|---:|---:|---:|---:|\n";
        for (const ReportRow* r : by_arch[arch]) {
          out += "| " + r->opt + " | " + r->config + " | " + fixed(r->comp_rate(), 1) + " | " +
                 fixed(r->link_rate(), 1) + " | " + rate_cell(r->func_rate()) + " | " +
                 fixed(r->mean_edit_similarity(), 4) + " | " + std::to_string(r->n) + " |\n";
        }
      }
      return out;
    }
  }
  return out;
}

void emit_report(const ReportTable& t, ReportFormat format, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << render_report(t, format);
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace graphdec
