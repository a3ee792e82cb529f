// SPDX-License-Identifier: Apache-2.0
#include "graphdec/prompt_builder.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "graphdec/errors.hpp"
#include "graphdec/hash.hpp"
#include "rules_data.hpp"

namespace graphdec {

namespace {

constexpr std::string_view kTaskDescription =
    "You are an expert reverse engineer. The user message describes one function "
    "recovered from a compiled binary. [RAW_DECOMPILED_CODE] holds the decompiler's "
    "pseudo-C for it. When present, [FUNCTION_CONTEXT] summarizes the function, "
    "[CFG_OVERVIEW] lists every basic block with its successors (for a conditional "
    "block the taken branch is listed first) and its structural roles, and "
    "[BLOCK_DETAILS] gives the distilled intermediate operations of each block "
    "under the same block ids.\n"
    "Rewrite the function as clean, compilable C that behaves exactly like the "
    "binary. Keep the function name and signature. Reply with the C source in a "
    "single ```c fenced code block.";

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::string hex(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "0x%llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string constant_text(const ConstantRef& c) {
  if (const auto* i = std::get_if<std::int64_t>(&c.value)) return std::to_string(*i);
  return std::get<std::string>(c.value);
}

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

struct Segment {
  std::string name;
  std::string text;
};

struct Joined {
  std::string text;
  std::vector<std::pair<std::string, TextSpan>> spans;
};

Joined join_segments(const std::vector<Segment>& segments) {
  Joined out;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (i) out.text += '\n';
    std::size_t start = out.text.size();
    out.text += segments[i].text;
    out.spans.emplace_back(segments[i].name, TextSpan{start, out.text.size()});
  }
  return out;
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    lines.emplace_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return lines;
}

// BLOCK_DETAILS keeping only the first `keep` body lines, plus a marker when
// anything was dropped.
std::string truncated_details(const std::vector<std::string>& lines, std::size_t keep) {
  // lines[0] is the header.
  const std::size_t body = lines.size() - 1;
  std::string out = lines[0] + "\n";
  for (std::size_t i = 1; i <= keep && i < lines.size(); ++i) out += lines[i] + "\n";
  if (keep < body) {
    out += "[... truncated: " + std::to_string(body - keep) + " of " + std::to_string(body) +
           " lines omitted ...]\n";
  }
  return out;
}

}  // namespace

std::string PromptConfig::canonical() const {
  std::ostringstream out;
  out << "include_function_context=" << include_function_context
      << ";include_cfg=" << include_cfg << ";include_rules=" << include_rules
      << ";token_budget=" << token_budget << ";rule_set_version=" << rule_set_version;
  return out.str();
}

std::string config_fingerprint(const PromptConfig& config) {
  return fingerprint_hex(config.canonical());
}

std::optional<TextSpan> PromptBundle::span(std::string_view segment) const {
  for (const auto& [name, s] : segment_spans) {
    if (name == segment) return s;
  }
  return std::nullopt;
}

std::string_view PromptBundle::segment_text(std::string_view segment) const {
  auto s = span(segment);
  if (!s) return {};
  return std::string_view(user_text).substr(s->start, s->end - s->start);
}

std::vector<std::string> PromptBundle::segment_names() const {
  std::vector<std::string> names;
  for (const auto& [name, s] : segment_spans) names.push_back(name);
  return names;
}

int estimate_tokens(std::size_t chars) { return static_cast<int>((chars + 3) / 4); }

std::string segment_header(std::string_view name) {
  return "[" + std::string(name) + "]";
}

std::string_view task_description() { return kTaskDescription; }

std::string render_function_context(const FunctionAnalysis& f, const StructuralAnalysis& a,
                                    bool include_value_lists) {
  std::ostringstream out;
  out << segment_header(kFunctionContext) << "\n";
  out << "function: " << f.name << "\n";
  out << "signature: " << f.signature << "\n";
  out << "architecture: " << to_string(f.architecture) << "\n";
  out << "optimization: " << to_string(f.opt_level) << "\n";
  out << "blocks: " << a.cfg.size() << ", loops: " << a.loops.size() << "\n";

  if (!a.loops.empty()) {
    std::vector<std::string> headers;
    for (const auto& loop : a.loops) headers.push_back(a.cfg.id(loop.header));
    out << "loop headers: " << join(headers, ", ") << "\n";
  }
  std::size_t exits = 0;
  for (const auto& r : a.roles) exits += r.has(Role::exit) ? 1 : 0;
  out << "exit blocks: " << exits << "\n";
  out << "control flow: " << (a.reducible ? "reducible" : "irreducible") << "\n";

  std::vector<std::string> callees;
  for (const auto& c : f.call_sites) {
    std::string entry = c.callee_name + (c.is_import ? " (import)" : "");
    if (std::find(callees.begin(), callees.end(), entry) == callees.end()) {
      callees.push_back(std::move(entry));
    }
  }
  out << "calls: " << (callees.empty() ? "none" : join(callees, ", ")) << "\n";

  const auto& strings = f.metadata.string_refs;
  const auto& constants = f.metadata.constants;
  if (include_value_lists) {
    std::vector<std::string> quoted;
    for (const auto& s : strings) quoted.push_back(quote(s));
    out << "strings: " << (quoted.empty() ? "none" : join(quoted, ", ")) << "\n";
    std::vector<std::string> consts;
    for (const auto& c : constants) consts.push_back(constant_text(c) + " (" + c.in_block + ")");
    out << "constants: " << (consts.empty() ? "none" : join(consts, ", ")) << "\n";
  } else {
    out << "strings: (" << strings.size() << " omitted)\n";
    out << "constants: (" << constants.size() << " omitted)\n";
  }
  return out.str();
}

std::string render_cfg_overview(const StructuralAnalysis& a) {
  std::string out = segment_header(kCfgOverview) + "\n";
  for (NodeIndex v : a.order) {
    std::vector<std::string> succs;
    for (const auto& e : a.cfg.succ(v)) succs.push_back(a.cfg.id(e.target));
    std::vector<std::string> roles;
    for (auto r : a.roles[v].names()) roles.emplace_back(r);
    out += a.cfg.id(v) + " -> [" + join(succs, ", ") + "] ; roles: {" + join(roles, ", ") +
           "}\n";
  }
  return out;
}

std::string render_block_details(const FunctionAnalysis& f, const StructuralAnalysis& a) {
  std::string out = segment_header(kBlockDetails) + "\n";
  for (NodeIndex v : a.order) {
    const BlockId& id = a.cfg.id(v);
    const BasicBlock* block = f.find_block(id);
    out += id + " @ " + hex(a.cfg.address(v));
    if (auto it = f.block_source_map.find(id); it != f.block_source_map.end()) {
      out += " (pseudo-C lines " + std::to_string(it->second.start_line) + "-" +
             std::to_string(it->second.end_line) + ")";
    }
    out += ":\n";
    if (block == nullptr || block->distilled_ops.empty()) {
      out += "  (no operations)\n";
      continue;
    }
    for (const auto& op : block->distilled_ops) out += "  " + op + "\n";
  }
  return out;
}

std::string render_raw_code(const FunctionAnalysis& f) {
  std::string out = segment_header(kRawDecompiledCode) + "\n" + f.raw_pseudo_c;
  if (out.back() != '\n') out += '\n';
  return out;
}

std::vector<std::string> rule_set_versions() {
  std::vector<std::string> out;
  for (const auto& set : detail::embedded_rule_sets()) out.emplace_back(set.version);
  return out;
}

std::vector<std::string> rule_catalog(ArchId arch, std::string_view version) {
  for (const auto& set : detail::embedded_rule_sets()) {
    if (set.version != version) continue;
    std::vector<std::string> rules;
    for (const auto& line : split_lines(set.text)) {
      if (line.empty() || line[0] == '#') continue;
      auto colon = line.find(':');
      if (colon == std::string::npos) continue;
      std::string_view scope = std::string_view(line).substr(0, colon);
      std::string_view text = std::string_view(line).substr(colon + 1);
      while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
      if (scope == "all" || scope == to_string(arch)) rules.emplace_back(text);
    }
    return rules;
  }
  throw UnknownRuleSetVersion("unknown rule set version '" + std::string(version) + "'");
}

PromptBundle assemble_prompt(const FunctionAnalysis& f, const StructuralAnalysis& a,
                             const PromptConfig& config) {
  if (config.token_budget < kMinTokenBudget) {
    throw ContractError("token budget must be at least " + std::to_string(kMinTokenBudget));
  }
  // Resolve the catalog even when rules are off so a bad version fails early.
  auto catalog = rule_catalog(f.architecture, config.rule_set_version);

  PromptBundle bundle;
  bundle.function_name = f.name;
  bundle.config_fingerprint = config_fingerprint(config);
  bundle.system_text = std::string(kTaskDescription);
  if (config.include_rules) {
    bundle.rules = std::move(catalog);
    bundle.system_text += "\n\nCritical rules:\n";
    for (std::size_t i = 0; i < bundle.rules.size(); ++i) {
      bundle.system_text += std::to_string(i + 1) + ". " + bundle.rules[i] + "\n";
    }
  } else {
    bundle.system_text += "\n";
  }

  std::vector<Segment> segments;
  std::optional<std::size_t> context_at, details_at;
  if (config.include_function_context) {
    context_at = segments.size();
    segments.push_back({std::string(kFunctionContext), render_function_context(f, a)});
  }
  if (config.include_cfg) {
    segments.push_back({std::string(kCfgOverview), render_cfg_overview(a)});
    details_at = segments.size();
    segments.push_back({std::string(kBlockDetails), render_block_details(f, a)});
  }
  segments.push_back({std::string(kRawDecompiledCode), render_raw_code(f)});

  auto tokens_for = [&](const std::vector<Segment>& segs) {
    return estimate_tokens(bundle.system_text.size() + join_segments(segs).text.size());
  };
  const int budget = config.token_budget;

  if (tokens_for(segments) > budget && details_at) {
    auto lines = split_lines(segments[*details_at].text);
    const std::size_t body = lines.size() - 1;
    // Largest prefix of the details body that fits; fitting is monotone in
    // the number of kept lines.
    std::size_t lo = 0, hi = body;
    while (lo < hi) {
      std::size_t mid = (lo + hi + 1) / 2;
      auto trial = segments;
      trial[*details_at].text = truncated_details(lines, mid);
      if (tokens_for(trial) <= budget) {
        lo = mid;
      } else {
        hi = mid - 1;
      }
    }
    segments[*details_at].text = truncated_details(lines, lo);
    bundle.truncations.push_back("BLOCK_DETAILS: kept " + std::to_string(lo) + " of " +
                                 std::to_string(body) + " lines");
  }
  if (tokens_for(segments) > budget && context_at) {
    segments[*context_at].text = render_function_context(f, a, false);
    bundle.truncations.push_back("FUNCTION_CONTEXT: string and constant lists omitted");
  }
  if (tokens_for(segments) > budget) {
    throw BudgetImpossible("token budget " + std::to_string(budget) +
                           " cannot hold the task description, CFG overview and raw code (" +
                           std::to_string(tokens_for(segments)) + " tokens after truncation)");
  }

  auto joined = join_segments(segments);
  bundle.user_text = std::move(joined.text);
  bundle.segment_spans = std::move(joined.spans);
  bundle.estimated_tokens = estimate_tokens(bundle.system_text.size() + bundle.user_text.size());
  return bundle;
}

std::vector<std::pair<std::string, std::string>> parse_cfg_overview_edges(
    std::string_view segment) {
  std::vector<std::pair<std::string, std::string>> edges;
  for (const auto& line : split_lines(segment)) {
    auto arrow = line.find(" -> [");
    if (arrow == std::string::npos) continue;
    std::string from = line.substr(0, arrow);
    auto close = line.find(']', arrow);
    if (close == std::string::npos) continue;
    std::string list = line.substr(arrow + 5, close - arrow - 5);
    std::size_t pos = 0;
    while (pos < list.size()) {
      auto comma = list.find(", ", pos);
      if (comma == std::string::npos) comma = list.size();
      edges.emplace_back(from, list.substr(pos, comma - pos));
      pos = comma + 2;
    }
  }
  return edges;
}

}  // namespace graphdec
