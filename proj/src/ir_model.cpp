// SPDX-License-Identifier: Apache-2.0
#include "graphdec/ir_model.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "graphdec/errors.hpp"

namespace graphdec {

using nlohmann::json;

namespace {

constexpr std::pair<ArchId, std::string_view> kArchNames[] = {
    {ArchId::x86_32, "x86_32"},   {ArchId::x86_64, "x86_64"},
    {ArchId::arm_32, "arm_32"},   {ArchId::aarch64, "aarch64"},
    {ArchId::mips_32, "mips_32"}, {ArchId::mips_64, "mips_64"},
};

constexpr std::pair<OptLevel, std::string_view> kOptNames[] = {
    {OptLevel::O0, "O0"},
    {OptLevel::O1, "O1"},
    {OptLevel::O2, "O2"},
    {OptLevel::O3, "O3"},
};

constexpr std::pair<EdgeKind, std::string_view> kEdgeKindNames[] = {
    {EdgeKind::fallthrough, "fallthrough"},
    {EdgeKind::taken_branch, "taken-branch"},
    {EdgeKind::unconditional, "unconditional"},
    {EdgeKind::computed, "computed"},
};

template <typename Enum, std::size_t N>
std::string_view lookup_name(const std::pair<Enum, std::string_view> (&table)[N],
                             Enum value) {
  for (const auto& [e, name] : table) {
    if (e == value) return name;
  }
  return "?";
}

template <typename Enum, std::size_t N>
std::optional<Enum> lookup_value(
    const std::pair<Enum, std::string_view> (&table)[N], std::string_view text) {
  for (const auto& [e, name] : table) {
    if (name == text) return e;
  }
  return std::nullopt;
}

// Typed accessors that turn nlohmann type errors into SchemaError with the
// offending path.
const json& require(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw SchemaError(path + ": expected object");
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw SchemaError(path + ": missing required key '" + key + "'");
  }
  return *it;
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw SchemaError(path + ": expected string");
  return v.get<std::string>();
}

std::uint64_t as_address(const json& v, const std::string& path) {
  if (!v.is_number_unsigned()) {
    throw SchemaError(path + ": expected unsigned decimal integer");
  }
  return v.get<std::uint64_t>();
}

int as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw SchemaError(path + ": expected integer");
  return v.get<int>();
}

const json& as_array(const json& v, const std::string& path) {
  if (!v.is_array()) throw SchemaError(path + ": expected array");
  return v;
}

std::vector<std::string> as_string_list(const json& v, const std::string& path) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < as_array(v, path).size(); ++i) {
    out.push_back(as_string(v[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::vector<std::string> optional_string_list(const json& obj, const char* key,
                                              const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) return {};
  return as_string_list(*it, path + "." + key);
}

}  // namespace

std::string_view to_string(ArchId arch) { return lookup_name(kArchNames, arch); }
std::string_view to_string(OptLevel opt) { return lookup_name(kOptNames, opt); }
std::string_view to_string(EdgeKind kind) {
  return lookup_name(kEdgeKindNames, kind);
}

std::optional<ArchId> parse_arch(std::string_view text) {
  return lookup_value(kArchNames, text);
}
std::optional<OptLevel> parse_opt_level(std::string_view text) {
  return lookup_value(kOptNames, text);
}
std::optional<EdgeKind> parse_edge_kind(std::string_view text) {
  return lookup_value(kEdgeKindNames, text);
}

ArchId host_arch() {
#if defined(__x86_64__) || defined(_M_X64)
  return ArchId::x86_64;
#elif defined(__i386__) || defined(_M_IX86)
  return ArchId::x86_32;
#elif defined(__aarch64__)
  return ArchId::aarch64;
#elif defined(__arm__)
  return ArchId::arm_32;
#elif defined(__mips__) && defined(__mips64)
  return ArchId::mips_64;
#elif defined(__mips__)
  return ArchId::mips_32;
#else
#error "unsupported host architecture"
#endif
}

const BasicBlock* FunctionAnalysis::find_block(std::string_view id) const {
  for (const auto& b : blocks) {
    if (b.id == id) return &b;
  }
  return nullptr;
}

FunctionAnalysis parse_function_bundle(std::string_view raw) {
  json doc;
  try {
    doc = json::parse(raw);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("$: expected object");

  const json& version = require(doc, "schema_version", "$");
  if (!version.is_number_integer() || version.get<int>() != kSchemaVersion) {
    throw SchemaError("$.schema_version: expected " +
                      std::to_string(kSchemaVersion));
  }

  FunctionAnalysis f;
  f.name = as_string(require(doc, "name", "$"), "$.name");
  f.signature = as_string(require(doc, "signature", "$"), "$.signature");

  auto arch_text = as_string(require(doc, "architecture", "$"), "$.architecture");
  auto arch = parse_arch(arch_text);
  if (!arch) throw SchemaError("$.architecture: unknown architecture '" + arch_text + "'");
  f.architecture = *arch;

  auto opt_text = as_string(require(doc, "opt_level", "$"), "$.opt_level");
  auto opt = parse_opt_level(opt_text);
  if (!opt) throw SchemaError("$.opt_level: unknown level '" + opt_text + "'");
  f.opt_level = *opt;

  f.entry_block = as_string(require(doc, "entry_block", "$"), "$.entry_block");

  const json& blocks = as_array(require(doc, "blocks", "$"), "$.blocks");
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    std::string path = "$.blocks[" + std::to_string(i) + "]";
    BasicBlock b;
    b.id = as_string(require(blocks[i], "id", path), path + ".id");
    b.start_address =
        as_address(require(blocks[i], "start_address", path), path + ".start_address");
    b.distilled_ops = as_string_list(require(blocks[i], "distilled_ops", path),
                                     path + ".distilled_ops");
    f.blocks.push_back(std::move(b));
  }

  const json& edges = as_array(require(doc, "edges", "$"), "$.edges");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    std::string path = "$.edges[" + std::to_string(i) + "]";
    CfgEdge e;
    e.from = as_string(require(edges[i], "from", path), path + ".from");
    e.to = as_string(require(edges[i], "to", path), path + ".to");
    auto kind_text = as_string(require(edges[i], "kind", path), path + ".kind");
    auto kind = parse_edge_kind(kind_text);
    if (!kind) throw SchemaError(path + ".kind: unknown edge kind '" + kind_text + "'");
    e.kind = *kind;
    f.edges.push_back(std::move(e));
  }

  const json& calls = as_array(require(doc, "call_sites", "$"), "$.call_sites");
  for (std::size_t i = 0; i < calls.size(); ++i) {
    std::string path = "$.call_sites[" + std::to_string(i) + "]";
    CallSite c;
    c.in_block = as_string(require(calls[i], "in_block", path), path + ".in_block");
    c.callee_name =
        as_string(require(calls[i], "callee_name", path), path + ".callee_name");
    const json& imp = require(calls[i], "is_import", path);
    if (!imp.is_boolean()) throw SchemaError(path + ".is_import: expected boolean");
    c.is_import = imp.get<bool>();
    f.call_sites.push_back(std::move(c));
  }

  const json& meta = require(doc, "metadata", "$");
  if (!meta.is_object()) throw SchemaError("$.metadata: expected object");
  f.metadata.loop_header_hints =
      optional_string_list(meta, "loop_header_hints", "$.metadata");
  f.metadata.string_refs = optional_string_list(meta, "string_refs", "$.metadata");
  f.metadata.imported_functions =
      optional_string_list(meta, "imported_functions", "$.metadata");
  if (auto it = meta.find("constants"); it != meta.end()) {
    const json& consts = as_array(*it, "$.metadata.constants");
    for (std::size_t i = 0; i < consts.size(); ++i) {
      std::string path = "$.metadata.constants[" + std::to_string(i) + "]";
      ConstantRef c;
      const json& value = require(consts[i], "value", path);
      if (value.is_number_integer()) {
        c.value = value.get<std::int64_t>();
      } else if (value.is_string()) {
        c.value = value.get<std::string>();
      } else {
        throw SchemaError(path + ".value: expected integer or string");
      }
      c.in_block = as_string(require(consts[i], "in_block", path), path + ".in_block");
      f.metadata.constants.push_back(std::move(c));
    }
  }

  f.raw_pseudo_c = as_string(require(doc, "raw_pseudo_c", "$"), "$.raw_pseudo_c");

  const json& spans = require(doc, "block_source_map", "$");
  if (!spans.is_object()) throw SchemaError("$.block_source_map: expected object");
  for (const auto& [id, span] : spans.items()) {
    std::string path = "$.block_source_map." + id;
    SourceSpan s;
    s.start_line = as_int(require(span, "start_line", path), path + ".start_line");
    s.end_line = as_int(require(span, "end_line", path), path + ".end_line");
    f.block_source_map.emplace(id, s);
  }
  return f;
}

std::string serialize_function_bundle(const FunctionAnalysis& f) {
  json doc = json::object();
  doc["schema_version"] = kSchemaVersion;
  doc["name"] = f.name;
  doc["signature"] = f.signature;
  doc["architecture"] = to_string(f.architecture);
  doc["opt_level"] = to_string(f.opt_level);
  doc["entry_block"] = f.entry_block;

  json blocks = json::array();
  for (const auto& b : f.blocks) {
    blocks.push_back({{"id", b.id},
                      {"start_address", b.start_address},
                      {"distilled_ops", b.distilled_ops}});
  }
  doc["blocks"] = std::move(blocks);

  json edges = json::array();
  for (const auto& e : f.edges) {
    edges.push_back({{"from", e.from}, {"to", e.to}, {"kind", to_string(e.kind)}});
  }
  doc["edges"] = std::move(edges);

  json calls = json::array();
  for (const auto& c : f.call_sites) {
    calls.push_back({{"in_block", c.in_block},
                     {"callee_name", c.callee_name},
                     {"is_import", c.is_import}});
  }
  doc["call_sites"] = std::move(calls);

  json consts = json::array();
  for (const auto& c : f.metadata.constants) {
    json value = std::holds_alternative<std::int64_t>(c.value)
                     ? json(std::get<std::int64_t>(c.value))
                     : json(std::get<std::string>(c.value));
    consts.push_back({{"value", std::move(value)}, {"in_block", c.in_block}});
  }
  doc["metadata"] = {{"loop_header_hints", f.metadata.loop_header_hints},
                     {"string_refs", f.metadata.string_refs},
                     {"imported_functions", f.metadata.imported_functions},
                     {"constants", std::move(consts)}};

  doc["raw_pseudo_c"] = f.raw_pseudo_c;

  json spans = json::object();
  for (const auto& [id, s] : f.block_source_map) {
    spans[id] = {{"start_line", s.start_line}, {"end_line", s.end_line}};
  }
  doc["block_source_map"] = std::move(spans);
  return doc.dump(2) + "\n";
}

FunctionAnalysis load_function_bundle(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_function_bundle(buf.str());
  } catch (const SchemaError& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

int count_lines(std::string_view text) {
  if (text.empty()) return 0;
  int n = static_cast<int>(std::count(text.begin(), text.end(), '\n'));
  if (text.back() != '\n') ++n;
  return n;
}

std::string_view to_string(Violation::Kind kind) {
  switch (kind) {
    case Violation::Kind::duplicate_block_id: return "duplicate-block-id";
    case Violation::Kind::duplicate_start_address: return "duplicate-start-address";
    case Violation::Kind::missing_entry_block: return "missing-entry-block";
    case Violation::Kind::dangling_edge_endpoint: return "dangling-edge-endpoint";
    case Violation::Kind::duplicate_edge: return "duplicate-edge";
    case Violation::Kind::dangling_call_site: return "dangling-call-site";
    case Violation::Kind::dangling_metadata_block: return "dangling-metadata-block";
    case Violation::Kind::span_out_of_range: return "span-out-of-range";
    case Violation::Kind::span_unknown_block: return "span-unknown-block";
    case Violation::Kind::empty_raw_pseudo_c: return "empty-raw-pseudo-c";
    case Violation::Kind::empty_block_ops: return "empty-block-ops";
  }
  return "?";
}

ValidationReport validate_bundle(const FunctionAnalysis& f) {
  ValidationReport report;
  auto add = [&](Violation::Kind kind, const BlockId& block, std::string msg) {
    report.violations.push_back({kind, block, std::move(msg)});
  };

  std::unordered_set<std::string> ids;
  std::unordered_map<std::uint64_t, BlockId> addresses;
  for (const auto& b : f.blocks) {
    if (!ids.insert(b.id).second) {
      add(Violation::Kind::duplicate_block_id, b.id, "block id " + b.id + " appears more than once");
    }
    auto [it, inserted] = addresses.emplace(b.start_address, b.id);
    if (!inserted) {
      add(Violation::Kind::duplicate_start_address, b.id,
          "block " + b.id + " shares start address " + std::to_string(b.start_address) +
              " with " + it->second);
    }
  }
  auto known = [&](const BlockId& id) { return ids.count(id) != 0; };

  if (!known(f.entry_block)) {
    add(Violation::Kind::missing_entry_block, f.entry_block,
        "entry block " + f.entry_block + " is not among the blocks");
  }

  std::set<std::tuple<BlockId, BlockId, EdgeKind>> seen_edges;
  std::unordered_set<std::string> has_successor;
  for (const auto& e : f.edges) {
    for (const BlockId* end : {&e.from, &e.to}) {
      if (!known(*end)) {
        add(Violation::Kind::dangling_edge_endpoint, *end,
            "edge " + e.from + " -> " + e.to + " references unknown block " + *end);
      }
    }
    if (!seen_edges.emplace(e.from, e.to, e.kind).second) {
      add(Violation::Kind::duplicate_edge, e.from,
          "duplicate edge " + e.from + " -> " + e.to + " (" +
              std::string(to_string(e.kind)) + ")");
    }
    has_successor.insert(e.from);
  }

  for (const auto& c : f.call_sites) {
    if (!known(c.in_block)) {
      add(Violation::Kind::dangling_call_site, c.in_block,
          "call to " + c.callee_name + " placed in unknown block " + c.in_block);
    }
  }
  for (const auto& h : f.metadata.loop_header_hints) {
    if (!known(h)) {
      add(Violation::Kind::dangling_metadata_block, h,
          "loop header hint references unknown block " + h);
    }
  }
  for (const auto& c : f.metadata.constants) {
    if (!known(c.in_block)) {
      add(Violation::Kind::dangling_metadata_block, c.in_block,
          "constant references unknown block " + c.in_block);
    }
  }

  if (f.raw_pseudo_c.empty()) {
    add(Violation::Kind::empty_raw_pseudo_c, "", "raw_pseudo_c is empty");
  }
  const int lines = count_lines(f.raw_pseudo_c);
  for (const auto& [id, span] : f.block_source_map) {
    if (!known(id)) {
      add(Violation::Kind::span_unknown_block, id, "source span for unknown block " + id);
    }
    if (span.start_line < 1 || span.end_line < span.start_line || span.end_line > lines) {
      add(Violation::Kind::span_out_of_range, id,
          "span (" + std::to_string(span.start_line) + "," +
              std::to_string(span.end_line) + ") of " + id + " lies outside lines 1.." +
              std::to_string(lines));
    }
  }

  // Only synthetic entry/exit blocks may carry no operations.
  for (const auto& b : f.blocks) {
    bool synthetic = b.id == f.entry_block || has_successor.count(b.id) == 0;
    if (b.distilled_ops.empty() && !synthetic) {
      add(Violation::Kind::empty_block_ops, b.id,
          "block " + b.id + " has no distilled operations");
    }
  }
  return report;
}

}  // namespace graphdec
