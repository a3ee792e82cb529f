// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <json.hpp>

#include "graphdec/errors.hpp"
#include "graphdec/ir_model.hpp"

namespace graphdec {
namespace {

using nlohmann::json;

std::string read_fixture(const std::string& name) {
  std::ifstream in(std::string(GRAPHDEC_TEST_FIXTURES_DIR) + "/" + name);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json minimal_bundle() {
  return json::parse(R"json({
    "schema_version": 1,
    "name": "f",
    "signature": "int f(void)",
    "architecture": "x86_64",
    "opt_level": "O0",
    "entry_block": "BB0",
    "blocks": [{"id": "BB0", "start_address": 4096, "distilled_ops": ["RETURN 0:4"]}],
    "edges": [],
    "call_sites": [],
    "metadata": {},
    "raw_pseudo_c": "int f(){return 0;}",
    "block_source_map": {}
  })json");
}

TEST(ParseBundle, MinimalBundle) {
  auto f = parse_function_bundle(minimal_bundle().dump());
  EXPECT_EQ(f.name, "f");
  EXPECT_EQ(f.blocks.size(), 1u);
  EXPECT_TRUE(f.edges.empty());
  EXPECT_EQ(f.entry_block, "BB0");
  EXPECT_EQ(f.architecture, ArchId::x86_64);
  EXPECT_TRUE(validate_bundle(f).ok());
}

TEST(ParseBundle, MissingEntryBlockIsSchemaError) {
  auto doc = minimal_bundle();
  doc.erase("entry_block");
  EXPECT_THROW(parse_function_bundle(doc.dump()), SchemaError);
}

TEST(ParseBundle, RejectsWrongTypesAndUnknownEnums) {
  auto bad_arch = minimal_bundle();
  bad_arch["architecture"] = "riscv64";
  EXPECT_THROW(parse_function_bundle(bad_arch.dump()), SchemaError);

  auto bad_version = minimal_bundle();
  bad_version["schema_version"] = 2;
  EXPECT_THROW(parse_function_bundle(bad_version.dump()), SchemaError);

  auto bad_address = minimal_bundle();
  bad_address["blocks"][0]["start_address"] = "0x1000";
  EXPECT_THROW(parse_function_bundle(bad_address.dump()), SchemaError);

  auto bad_kind = minimal_bundle();
  bad_kind["edges"] = json::array({{{"from", "BB0"}, {"to", "BB0"}, {"kind", "jump"}}});
  EXPECT_THROW(parse_function_bundle(bad_kind.dump()), SchemaError);

  EXPECT_THROW(parse_function_bundle("{not json"), SchemaError);
}

TEST(ParseBundle, IgnoresUnknownKeys) {
  auto doc = minimal_bundle();
  doc["exporter"] = "something";
  doc["blocks"][0]["comment"] = 3;
  EXPECT_NO_THROW(parse_function_bundle(doc.dump()));
}

TEST(ParseBundle, SampleExportRoundTrips) {
  auto f = parse_function_bundle(read_fixture("sample_export.json"));
  EXPECT_EQ(f.blocks.size(), 3u);
  EXPECT_EQ(f.edges.size(), 3u);
  EXPECT_EQ(f.call_sites.size(), 1u);
  EXPECT_TRUE(validate_bundle(f).ok());
  auto again = parse_function_bundle(serialize_function_bundle(f));
  EXPECT_EQ(again, f);
  EXPECT_EQ(serialize_function_bundle(again), serialize_function_bundle(f));
}

TEST(Validate, DanglingEdgeNamesBlock) {
  auto f = parse_function_bundle(minimal_bundle().dump());
  f.edges.push_back({"BB0", "BB9", EdgeKind::unconditional});
  auto report = validate_bundle(f);
  ASSERT_EQ(report.violations.size(), 1u);
  EXPECT_EQ(report.violations[0].kind, Violation::Kind::dangling_edge_endpoint);
  EXPECT_EQ(report.violations[0].block, "BB9");
  EXPECT_NE(report.violations[0].message.find("BB9"), std::string::npos);
}

TEST(Validate, SpanOutOfRange) {
  auto f = parse_function_bundle(minimal_bundle().dump());
  f.raw_pseudo_c = "a\nb\nc\nd\ne\n";
  f.block_source_map["BB0"] = {10, 12};
  auto report = validate_bundle(f);
  ASSERT_EQ(report.violations.size(), 1u);
  EXPECT_EQ(report.violations[0].kind, Violation::Kind::span_out_of_range);
}

TEST(Validate, EmptyOpsOnlyForSyntheticBlocks) {
  auto f = parse_function_bundle(minimal_bundle().dump());
  f.blocks[0].distilled_ops.clear();
  f.blocks.push_back({"BB1", 4100, {}});
  f.blocks.push_back({"BB2", 4104, {}});
  f.edges.push_back({"BB0", "BB1", EdgeKind::fallthrough});
  f.edges.push_back({"BB1", "BB2", EdgeKind::fallthrough});
  auto report = validate_bundle(f);
  ASSERT_EQ(report.violations.size(), 1u);
  EXPECT_EQ(report.violations[0].kind, Violation::Kind::empty_block_ops);
  EXPECT_EQ(report.violations[0].block, "BB1");
}

TEST(CountLines, TrailingNewlineDoesNotAddLine) {
  EXPECT_EQ(count_lines(""), 0);
  EXPECT_EQ(count_lines("x"), 1);
  EXPECT_EQ(count_lines("x\n"), 1);
  EXPECT_EQ(count_lines("x\ny"), 2);
  EXPECT_EQ(count_lines("x\n\n"), 2);
}

TEST(Enums, RoundTripNames) {
  for (auto a : kAllArchs) EXPECT_EQ(parse_arch(to_string(a)), a);
  for (auto o : kAllOptLevels) EXPECT_EQ(parse_opt_level(to_string(o)), o);
  EXPECT_EQ(to_string(EdgeKind::taken_branch), "taken-branch");
  EXPECT_FALSE(parse_arch("sparc").has_value());
}

// ---- property tests

FunctionAnalysis random_valid_bundle(std::mt19937_64& rng) {
  FunctionAnalysis f;
  f.name = "fn";
  f.signature = "int fn(int)";
  f.architecture = kAllArchs[rng() % 6];
  f.opt_level = kAllOptLevels[rng() % 4];
  const std::size_t n = 1 + rng() % 8;
  for (std::size_t i = 0; i < n; ++i) {
    BasicBlock b{"BB" + std::to_string(i), 0x1000 + 4 * i, {}};
    for (std::size_t k = 0; k < 1 + rng() % 3; ++k) b.distilled_ops.push_back("op" + std::to_string(k));
    f.blocks.push_back(b);
  }
  f.entry_block = "BB0";
  const EdgeKind kinds[] = {EdgeKind::fallthrough, EdgeKind::taken_branch, EdgeKind::unconditional,
                            EdgeKind::computed};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < rng() % 3; ++k) {
      CfgEdge e{"BB" + std::to_string(i), "BB" + std::to_string(rng() % n), kinds[rng() % 4]};
      if (std::find(f.edges.begin(), f.edges.end(), e) == f.edges.end()) f.edges.push_back(e);
    }
  }
  if (rng() % 2) f.call_sites.push_back({"BB" + std::to_string(rng() % n), "memcpy", true});
  if (rng() % 2) f.metadata.loop_header_hints.push_back("BB" + std::to_string(rng() % n));
  if (rng() % 2) f.metadata.constants.push_back({std::int64_t(rng() % 100), "BB0"});
  if (rng() % 2) f.metadata.constants.push_back({std::string("name"), "BB0"});
  if (rng() % 2) f.metadata.string_refs.push_back("hello \"world\"\n");
  const int lines = 1 + static_cast<int>(rng() % 10);
  for (int i = 0; i < lines; ++i) f.raw_pseudo_c += "line " + std::to_string(i) + "\n";
  for (std::size_t i = 0; i < n; ++i) {
    if (rng() % 2) {
      int a = 1 + static_cast<int>(rng() % lines);
      int b = a + static_cast<int>(rng() % (lines - a + 1));
      f.block_source_map["BB" + std::to_string(i)] = {a, b};
    }
  }
  return f;
}

void mutate(FunctionAnalysis& f, std::mt19937_64& rng) {
  switch (rng() % 10) {
    case 0: f.blocks.push_back(f.blocks[rng() % f.blocks.size()]); break;
    case 1: f.blocks.back().start_address = f.blocks.front().start_address; break;
    case 2: f.entry_block = "BB" + std::to_string(50 + rng() % 3); break;
    case 3: f.edges.push_back({"BB0", "BB" + std::to_string(20 + rng() % 3), EdgeKind::computed}); break;
    case 4:
      if (!f.edges.empty()) f.edges.push_back(f.edges[rng() % f.edges.size()]);
      break;
    case 5: f.call_sites.push_back({"BB77", "puts", true}); break;
    case 6: f.metadata.constants.push_back({std::int64_t(1), "BB78"}); break;
    case 7: f.block_source_map["BB0"] = {0, 200}; break;
    case 8: f.block_source_map["BB99"] = {1, 1}; break;
    case 9: f.blocks[rng() % f.blocks.size()].distilled_ops.clear(); break;
  }
  if (rng() % 15 == 0) f.raw_pseudo_c.clear();
}

// Rescans every reference independently of validate_bundle.
std::multiset<std::pair<Violation::Kind, std::string>> brute_violations(const FunctionAnalysis& f) {
  using K = Violation::Kind;
  std::multiset<std::pair<K, std::string>> out;
  auto known = [&](const std::string& id) {
    return std::any_of(f.blocks.begin(), f.blocks.end(), [&](const BasicBlock& b) { return b.id == id; });
  };
  for (std::size_t i = 0; i < f.blocks.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (f.blocks[j].id == f.blocks[i].id) {
        out.insert({K::duplicate_block_id, f.blocks[i].id});
        break;
      }
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (f.blocks[j].start_address == f.blocks[i].start_address) {
        out.insert({K::duplicate_start_address, f.blocks[i].id});
        break;
      }
    }
  }
  if (!known(f.entry_block)) out.insert({K::missing_entry_block, f.entry_block});
  for (std::size_t i = 0; i < f.edges.size(); ++i) {
    const auto& e = f.edges[i];
    if (!known(e.from)) out.insert({K::dangling_edge_endpoint, e.from});
    if (!known(e.to)) out.insert({K::dangling_edge_endpoint, e.to});
    for (std::size_t j = 0; j < i; ++j) {
      if (f.edges[j] == e) {
        out.insert({K::duplicate_edge, e.from});
        break;
      }
    }
  }
  for (const auto& c : f.call_sites) {
    if (!known(c.in_block)) out.insert({K::dangling_call_site, c.in_block});
  }
  for (const auto& h : f.metadata.loop_header_hints) {
    if (!known(h)) out.insert({K::dangling_metadata_block, h});
  }
  for (const auto& c : f.metadata.constants) {
    if (!known(c.in_block)) out.insert({K::dangling_metadata_block, c.in_block});
  }
  if (f.raw_pseudo_c.empty()) out.insert({K::empty_raw_pseudo_c, ""});
  int lines = 0;
  for (std::size_t i = 0; i < f.raw_pseudo_c.size(); ++i) {
    if (f.raw_pseudo_c[i] == '\n' || i + 1 == f.raw_pseudo_c.size()) ++lines;
  }
  for (const auto& [id, s] : f.block_source_map) {
    if (!known(id)) out.insert({K::span_unknown_block, id});
    if (!(1 <= s.start_line && s.start_line <= s.end_line && s.end_line <= lines)) {
      out.insert({K::span_out_of_range, id});
    }
  }
  for (const auto& b : f.blocks) {
    bool has_succ = std::any_of(f.edges.begin(), f.edges.end(), [&](const CfgEdge& e) { return e.from == b.id; });
    if (b.distilled_ops.empty() && b.id != f.entry_block && has_succ) out.insert({K::empty_block_ops, b.id});
  }
  return out;
}

TEST(Property, RoundTripRandomBundles) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 300; ++i) {
    auto f = random_valid_bundle(rng);
    ASSERT_TRUE(validate_bundle(f).ok()) << serialize_function_bundle(f);
    EXPECT_EQ(parse_function_bundle(serialize_function_bundle(f)), f);
  }
}

TEST(Property, ValidatorMatchesBruteForceChecker) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) {
    auto f = random_valid_bundle(rng);
    for (std::size_t k = 0; k < rng() % 4; ++k) mutate(f, rng);
    std::multiset<std::pair<Violation::Kind, std::string>> got;
    for (const auto& v : validate_bundle(f).violations) got.insert({v.kind, v.block});
    EXPECT_EQ(got, brute_violations(f)) << serialize_function_bundle(f);
  }
}

}  // namespace
}  // namespace graphdec
