// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "graphdec/errors.hpp"
#include "graphdec/prompt_builder.hpp"
#include "oracles.hpp"

namespace graphdec {
namespace {

const std::string kFixtures = GRAPHDEC_TEST_FIXTURES_DIR;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

FunctionAnalysis sample() { return load_function_bundle(kFixtures + "/sample_export.json"); }

// A function shaped like g, with ops_per_block ops in every block.
FunctionAnalysis from_graph(const testing::RandomGraph& g, std::size_t ops_per_block = 2) {
  FunctionAnalysis f;
  f.name = "synthetic";
  f.signature = "int synthetic(int param_1)";
  f.entry_block = "BB0";
  for (NodeIndex n = 0; n < g.nodes; ++n) {
    BasicBlock b{"BB" + std::to_string(n), 0x1000 + 0x20 * n, {}};
    for (std::size_t k = 0; k < ops_per_block; ++k) {
      b.distilled_ops.push_back("v" + std::to_string(k) + " = INT_ADD param_1, " + std::to_string(n));
    }
    f.blocks.push_back(std::move(b));
  }
  for (auto [a, b] : g.edges) {
    f.edges.push_back({"BB" + std::to_string(a), "BB" + std::to_string(b), EdgeKind::unconditional});
  }
  f.raw_pseudo_c = "int synthetic(int param_1)\n{\n  return param_1;\n}\n";
  return f;
}

PromptBundle assemble(const FunctionAnalysis& f, const PromptConfig& c = {}) {
  return assemble_prompt(f, analyze_function(f), c);
}

TEST(Prompt, SegmentOrderAndSpans) {
  auto p = assemble(sample());
  EXPECT_EQ(p.segment_names(), (std::vector<std::string>{"FUNCTION_CONTEXT", "CFG_OVERVIEW",
                                                         "BLOCK_DETAILS", "RAW_DECOMPILED_CODE"}));
  for (const auto& [name, span] : p.segment_spans) {
    EXPECT_EQ(p.user_text.substr(span.start, name.size() + 2), "[" + name + "]");
  }
  EXPECT_EQ(p.segment_spans.back().second.end, p.user_text.size());
  EXPECT_TRUE(p.truncations.empty());
  EXPECT_EQ(p.estimated_tokens,
            estimate_tokens(p.system_text.size() + p.user_text.size()));
}

TEST(Prompt, GoldenSegments) {
  auto f = sample();
  auto a = analyze_function(f);
  EXPECT_EQ(render_function_context(f, a), slurp(kFixtures + "/golden/checksum_function_context.txt"));
  EXPECT_EQ(render_cfg_overview(a), slurp(kFixtures + "/golden/checksum_cfg_overview.txt"));
  EXPECT_EQ(render_block_details(f, a), slurp(kFixtures + "/golden/checksum_block_details.txt"));
  auto p = assemble_prompt(f, a, {});
  EXPECT_EQ("[SYSTEM]\n" + p.system_text + "\n[USER]\n" + p.user_text,
            slurp(kFixtures + "/golden/checksum_full_prompt.txt"));
}

TEST(Prompt, EveryBlockAndEdgeRenderedOnce) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    auto g = testing::random_cfg(rng);
    auto f = from_graph(g);
    auto p = assemble(f);
    auto overview = p.segment_text(kCfgOverview);
    auto rendered = parse_cfg_overview_edges(overview);
    std::vector<std::pair<std::string, std::string>> expected;
    for (const auto& e : f.edges) expected.emplace_back(e.from, e.to);
    std::sort(rendered.begin(), rendered.end());
    std::sort(expected.begin(), expected.end());
    ASSERT_EQ(rendered, expected);
    for (const auto& b : f.blocks) {
      std::string head = b.id + " -> [";
      std::size_t count = 0;
      for (std::size_t pos = overview.find(head); pos != std::string_view::npos;
           pos = overview.find(head, pos + 1)) {
        if (pos == 0 || overview[pos - 1] == '\n') ++count;
      }
      ASSERT_EQ(count, 1u) << b.id;
    }
  }
}

TEST(Prompt, Deterministic) {
  auto f = sample();
  auto a = assemble(f);
  auto b = assemble(f);
  EXPECT_EQ(a.system_text, b.system_text);
  EXPECT_EQ(a.user_text, b.user_text);
  EXPECT_EQ(a.config_fingerprint, b.config_fingerprint);
}

TEST(Prompt, TogglesOnlyAddSegments) {
  auto f = sample();
  auto full = assemble(f);
  for (int mask = 0; mask < 8; ++mask) {
    PromptConfig c;
    c.include_function_context = mask & 1;
    c.include_cfg = mask & 2;
    c.include_rules = mask & 4;
    auto p = assemble(f, c);
    for (const auto& name : p.segment_names()) {
      EXPECT_EQ(p.segment_text(name), full.segment_text(name)) << name;
    }
    EXPECT_EQ(p.span(kFunctionContext).has_value(), c.include_function_context);
    EXPECT_EQ(p.span(kCfgOverview).has_value(), c.include_cfg);
    EXPECT_EQ(p.span(kBlockDetails).has_value(), c.include_cfg);
    EXPECT_TRUE(p.span(kRawDecompiledCode).has_value());
    EXPECT_EQ(p.rules.empty(), !c.include_rules);
    EXPECT_EQ(p.system_text.find("Critical rules") != std::string::npos, c.include_rules);
  }
}

TEST(Prompt, BaseConfigIsRawCodeOnly) {
  PromptConfig c;
  c.include_function_context = false;
  c.include_cfg = false;
  c.include_rules = false;
  auto p = assemble(sample(), c);
  EXPECT_EQ(p.segment_names(), (std::vector<std::string>{"RAW_DECOMPILED_CODE"}));
  EXPECT_EQ(p.system_text, std::string(task_description()) + "\n");
}

TEST(Prompt, FingerprintTracksConfig) {
  PromptConfig a, b;
  b.include_rules = false;
  EXPECT_NE(config_fingerprint(a), config_fingerprint(b));
  EXPECT_EQ(config_fingerprint(a), config_fingerprint(PromptConfig{}));
  EXPECT_EQ(config_fingerprint(a).size(), 16u);
}

TEST(Budget, TruncatesBlockDetailsFirst) {
  testing::RandomGraph chain{60, {}};
  for (NodeIndex n = 0; n + 1 < 60; ++n) chain.edges.emplace_back(n, n + 1);
  auto f = from_graph(chain, 10);
  auto untruncated = assemble(f);
  ASSERT_GT(untruncated.estimated_tokens, 1024);

  PromptConfig c;
  c.token_budget = 1024;
  auto p = assemble(f, c);
  EXPECT_LE(p.estimated_tokens, 1024);
  EXPECT_EQ(p.segment_text(kCfgOverview), untruncated.segment_text(kCfgOverview));
  EXPECT_EQ(p.segment_text(kRawDecompiledCode), untruncated.segment_text(kRawDecompiledCode));
  EXPECT_EQ(p.system_text, untruncated.system_text);
  ASSERT_FALSE(p.truncations.empty());
  EXPECT_EQ(p.truncations[0].rfind("BLOCK_DETAILS", 0), 0u);
  auto details = p.segment_text(kBlockDetails);
  EXPECT_NE(details.find("lines omitted ...]"), std::string_view::npos);
  // Whatever survives is a prefix of the full segment.
  auto full_details = untruncated.segment_text(kBlockDetails);
  auto kept = details.substr(0, details.rfind("[... truncated"));
  EXPECT_EQ(full_details.substr(0, kept.size()), kept);
}

TEST(Budget, ImpossibleAndBelowMinimum) {
  auto f = sample();
  f.raw_pseudo_c = std::string(4000, 'x') + "\n";
  PromptConfig c;
  c.token_budget = kMinTokenBudget;
  EXPECT_THROW(assemble(f, c), BudgetImpossible);
  c.token_budget = kMinTokenBudget - 1;
  EXPECT_THROW(assemble(sample(), c), ContractError);
  // The minimum itself is accepted when the fixed parts fit.
  c.token_budget = kMinTokenBudget;
  c.include_rules = false;
  c.include_cfg = false;
  EXPECT_NO_THROW(assemble(sample(), c));
}

TEST(Rules, VersionsAndArchAddenda) {
  EXPECT_EQ(rule_set_versions(), (std::vector<std::string>{"v1"}));
  auto x86 = rule_catalog(ArchId::x86_64, "v1");
  auto mips = rule_catalog(ArchId::mips_32, "v1");
  EXPECT_GE(x86.size(), 5u);
  EXPECT_EQ(mips.size(), x86.size() + 1);
  EXPECT_NE(mips.back().find("delay-slot"), std::string::npos);
  EXPECT_THROW(rule_catalog(ArchId::x86_64, "v99"), UnknownRuleSetVersion);
  PromptConfig c;
  c.rule_set_version = "v99";
  EXPECT_THROW(assemble(sample(), c), UnknownRuleSetVersion);
  c.include_rules = false;
  EXPECT_THROW(assemble(sample(), c), UnknownRuleSetVersion);
}

TEST(Rules, LibraryCallRuleNamesMemcpy) {
  auto f = sample();
  f.metadata.imported_functions = {"memcpy"};
  f.call_sites = {{"BB0", "memcpy", true}};
  auto p = assemble(f);
  EXPECT_NE(p.system_text.find("memcpy"), std::string::npos);
  EXPECT_NE(p.segment_text(kFunctionContext).find("calls: memcpy (import)"), std::string_view::npos);
}

TEST(Context, ValueListsAndEscaping) {
  auto f = sample();
  f.metadata.string_refs = {"say \"hi\"\n"};
  auto a = analyze_function(f);
  auto text = render_function_context(f, a);
  EXPECT_NE(text.find("strings: \"say \\\"hi\\\"\\n\""), std::string::npos);
  auto brief = render_function_context(f, a, false);
  EXPECT_NE(brief.find("strings: (1 omitted)"), std::string::npos);
  EXPECT_NE(brief.find("constants: (1 omitted)"), std::string::npos);
}

TEST(Details, MissingSpanAndRawNewline) {
  auto f = sample();
  f.block_source_map.erase("BB2");
  f.raw_pseudo_c.pop_back();
  auto a = analyze_function(f);
  auto details = render_block_details(f, a);
  EXPECT_NE(details.find("BB2 @ 0x401155:\n"), std::string::npos);
  auto raw = render_raw_code(f);
  EXPECT_EQ(raw.back(), '\n');
}

}  // namespace
}  // namespace graphdec
