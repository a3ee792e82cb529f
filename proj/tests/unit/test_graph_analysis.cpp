// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "graphdec/errors.hpp"
#include "graphdec/graph_analysis.hpp"
#include "oracles.hpp"

namespace graphdec {
namespace {

using testing::RandomGraph;

// Blocks named A.. at increasing addresses; edges given by letter.
FunctionAnalysis lettered(std::string_view names,
                          std::vector<std::tuple<char, char, EdgeKind>> edges) {
  FunctionAnalysis f;
  f.name = "g";
  f.raw_pseudo_c = "x\n";
  std::uint64_t addr = 0x100;
  for (char c : names) {
    f.blocks.push_back({std::string(1, c), addr, {"op"}});
    addr += 0x10;
  }
  f.entry_block = std::string(1, names.front());
  for (auto [a, b, k] : edges) f.edges.push_back({std::string(1, a), std::string(1, b), k});
  return f;
}

std::vector<std::string> ids(const Cfg& g, const std::vector<NodeIndex>& nodes) {
  std::vector<std::string> out;
  for (auto n : nodes) out.push_back(g.id(n));
  return out;
}

FunctionAnalysis diamond() {
  return lettered("ABCD", {{'A', 'C', EdgeKind::fallthrough},
                           {'A', 'B', EdgeKind::taken_branch},
                           {'B', 'D', EdgeKind::unconditional},
                           {'C', 'D', EdgeKind::fallthrough}});
}

TEST(BuildCfg, SingleBlock) {
  auto f = lettered("A", {});
  auto g = Cfg::build(f.blocks, f.edges, f.entry_block);
  EXPECT_EQ(g.size(), 1u);
  EXPECT_TRUE(g.succ(0).empty());
}

TEST(BuildCfg, DiamondSuccessorOrderAndPreds) {
  auto f = diamond();
  auto g = Cfg::build(f.blocks, f.edges, f.entry_block);
  auto a = *g.index_of("A");
  ASSERT_EQ(g.succ(a).size(), 2u);
  EXPECT_EQ(g.id(g.succ(a)[0].target), "B");  // taken branch ranks first
  EXPECT_EQ(g.pred(*g.index_of("D")).size(), 2u);
}

TEST(BuildCfg, UnknownEndpointIsContractError) {
  auto f = lettered("AB", {{'A', 'B', EdgeKind::fallthrough}});
  f.edges.push_back({"A", "Z", EdgeKind::computed});
  EXPECT_THROW(Cfg::build(f.blocks, f.edges, f.entry_block), ContractError);
}

TEST(Dominators, ChainAndDiamond) {
  auto chain = lettered("ABC", {{'A', 'B', EdgeKind::fallthrough}, {'B', 'C', EdgeKind::fallthrough}});
  auto s = analyze_function(chain);
  EXPECT_EQ(s.dominators.idom(1), NodeIndex{0});
  EXPECT_EQ(s.dominators.idom(2), NodeIndex{1});
  EXPECT_FALSE(s.dominators.idom(0).has_value());

  auto d = analyze_function(diamond());
  EXPECT_EQ(d.dominators.idom(*d.cfg.index_of("D")), *d.cfg.index_of("A"));
}

TEST(Loops, AcyclicHasNone) { EXPECT_TRUE(analyze_function(diamond()).loops.empty()); }

TEST(Loops, TwoNodeCycle) {
  auto f = lettered("AB", {{'A', 'B', EdgeKind::fallthrough}, {'B', 'A', EdgeKind::unconditional}});
  auto s = analyze_function(f);
  ASSERT_EQ(s.loops.size(), 1u);
  EXPECT_EQ(s.cfg.id(s.loops[0].header), "A");
  EXPECT_EQ(ids(s.cfg, s.loops[0].body), (std::vector<std::string>{"A", "B"}));
}

TEST(Loops, SelfLoop) {
  auto f = lettered("A", {{'A', 'A', EdgeKind::taken_branch}});
  auto s = analyze_function(f);
  ASSERT_EQ(s.loops.size(), 1u);
  EXPECT_EQ(ids(s.cfg, s.loops[0].body), (std::vector<std::string>{"A"}));
}

TEST(Loops, BackEdgesToSameHeaderMerge) {
  auto f = lettered("ABC", {{'A', 'B', EdgeKind::fallthrough},
                            {'A', 'C', EdgeKind::taken_branch},
                            {'B', 'A', EdgeKind::unconditional},
                            {'C', 'A', EdgeKind::unconditional}});
  auto s = analyze_function(f);
  ASSERT_EQ(s.loops.size(), 1u);
  EXPECT_EQ(s.loops[0].back_edges.size(), 2u);
  EXPECT_EQ(s.loops[0].body.size(), 3u);
}

TEST(Reducibility, Examples) {
  EXPECT_TRUE(analyze_function(diamond()).reducible);
  auto irreducible = lettered("ABC", {{'A', 'B', EdgeKind::taken_branch},
                                      {'A', 'C', EdgeKind::fallthrough},
                                      {'B', 'C', EdgeKind::fallthrough},
                                      {'C', 'B', EdgeKind::unconditional}});
  auto s = analyze_function(irreducible);
  EXPECT_FALSE(s.reducible);
  auto regions = irreducible_regions(s.cfg);
  ASSERT_EQ(regions.size(), 1u);
  EXPECT_EQ(ids(s.cfg, regions[0]), (std::vector<std::string>{"B", "C"}));
  EXPECT_TRUE(s.roles[*s.cfg.index_of("B")].has(Role::irreducible_member));
  EXPECT_FALSE(s.roles[*s.cfg.index_of("A")].has(Role::irreducible_member));

  auto loop = lettered("ABC", {{'A', 'B', EdgeKind::fallthrough},
                               {'B', 'B', EdgeKind::taken_branch},
                               {'B', 'C', EdgeKind::fallthrough}});
  EXPECT_TRUE(analyze_function(loop).reducible);
}

TEST(Roles, DiamondAndLoopAndUnreachable) {
  auto d = analyze_function(diamond());
  EXPECT_EQ(d.roles[*d.cfg.index_of("A")].names(), (std::vector<std::string_view>{"entry", "branch"}));
  EXPECT_EQ(d.roles[*d.cfg.index_of("D")].names(), (std::vector<std::string_view>{"join", "exit"}));

  auto loop = lettered("ABC", {{'A', 'B', EdgeKind::fallthrough},
                               {'A', 'C', EdgeKind::taken_branch},
                               {'B', 'A', EdgeKind::unconditional}});
  auto l = analyze_function(loop);
  // One predecessor (B) only, so A is not a join.
  EXPECT_EQ(l.roles[0].names(), (std::vector<std::string_view>{"entry", "loop-header", "branch"}));
  EXPECT_EQ(l.roles[2].names(), (std::vector<std::string_view>{"exit"}));

  auto orphan = lettered("ABX", {{'A', 'B', EdgeKind::fallthrough}});
  auto o = analyze_function(orphan);
  EXPECT_EQ(o.roles[*o.cfg.index_of("X")].names(), (std::vector<std::string_view>{"unreachable"}));
  std::size_t entries = 0;
  for (const auto& r : o.roles) entries += r.has(Role::entry) ? 1 : 0;
  EXPECT_EQ(entries, 1u);
}

TEST(BlockOrder, ChainDiamondUnreachable) {
  auto chain = lettered("ABC", {{'A', 'B', EdgeKind::fallthrough}, {'B', 'C', EdgeKind::fallthrough}});
  auto c = analyze_function(chain);
  EXPECT_EQ(ids(c.cfg, c.order), (std::vector<std::string>{"A", "B", "C"}));

  auto d = analyze_function(diamond());
  EXPECT_EQ(ids(d.cfg, d.order), (std::vector<std::string>{"A", "B", "C", "D"}));

  auto x = lettered("AXB", {{'A', 'B', EdgeKind::fallthrough}});
  auto s = analyze_function(x);
  EXPECT_EQ(ids(s.cfg, s.order), (std::vector<std::string>{"A", "B", "X"}));
}

// ---- property tests against brute-force oracles

TEST(Property, DominatorsMatchPathIntersection) {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 300; ++i) {
    RandomGraph rg = testing::random_cfg(rng);
    Cfg g = testing::to_cfg(rg);
    auto dom = compute_dominators(g);
    auto sets = testing::brute_dominators(rg);
    auto idoms = testing::brute_idoms(sets);
    for (NodeIndex n = 0; n < rg.nodes; ++n) {
      ASSERT_EQ(dom.is_reachable(n), sets[n].has_value());
      ASSERT_EQ(dom.idom(n), idoms[n]) << "node " << n << " graph " << i;
      for (NodeIndex d = 0; d < rg.nodes; ++d) {
        bool expected = sets[n].has_value() && sets[n]->count(d) > 0;
        ASSERT_EQ(dom.dominates(d, n), expected);
      }
    }
  }
}

TEST(Property, LoopsMatchOracleAndHeadersDominateBodies) {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 300; ++i) {
    RandomGraph rg = testing::random_cfg(rng);
    Cfg g = testing::to_cfg(rg);
    auto dom = compute_dominators(g);
    auto loops = detect_natural_loops(g, dom);
    auto expected = testing::brute_loops(rg, testing::brute_dominators(rg));
    ASSERT_EQ(loops.size(), expected.size());
    for (std::size_t k = 0; k < loops.size(); ++k) {
      if (k > 0) {
        EXPECT_LT(loops[k - 1].header, loops[k].header);
      }
      auto it = expected.find(loops[k].header);
      ASSERT_NE(it, expected.end());
      EXPECT_EQ(std::set<NodeIndex>(loops[k].body.begin(), loops[k].body.end()), it->second);
      for (NodeIndex m : loops[k].body) EXPECT_TRUE(dom.dominates(loops[k].header, m));
      for (const auto& e : loops[k].back_edges) EXPECT_EQ(e.to, loops[k].header);
    }
  }
}

TEST(Property, BlockOrderIsDeterministicPermutation) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 300; ++i) {
    RandomGraph rg = testing::random_cfg(rng);
    Cfg g = testing::to_cfg(rg);
    auto order = block_order(g);
    auto sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (NodeIndex n = 0; n < g.size(); ++n) ASSERT_EQ(sorted[n], n);
    EXPECT_EQ(block_order(testing::to_cfg(rg)), order);
    EXPECT_EQ(order.front(), g.entry());
  }
}

TEST(Property, ReducibleCyclesHaveOneDominatingHeader) {
  std::mt19937_64 rng(31);
  int reducible_with_cycles = 0;
  for (int i = 0; i < 300; ++i) {
    RandomGraph rg = testing::random_cfg(rng, 8);
    Cfg g = testing::to_cfg(rg);
    bool reducible = check_reducibility(g);
    EXPECT_EQ(reducible, irreducible_regions(g).empty());
    if (!reducible) continue;
    auto dom = compute_dominators(g);
    auto loops = detect_natural_loops(g, dom);
    std::set<NodeIndex> headers;
    for (const auto& l : loops) headers.insert(l.header);
    for (const auto& cycle : testing::simple_cycles(rg)) {
      if (!dom.is_reachable(cycle.front())) continue;
      ++reducible_with_cycles;
      std::vector<NodeIndex> dominating;
      for (NodeIndex h : cycle) {
        if (std::all_of(cycle.begin(), cycle.end(), [&](NodeIndex m) { return dom.dominates(h, m); })) {
          dominating.push_back(h);
        }
      }
      ASSERT_EQ(dominating.size(), 1u);
      EXPECT_TRUE(headers.count(dominating[0]));
    }
  }
  EXPECT_GT(reducible_with_cycles, 0);
}

TEST(Property, DagsAreReducible) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 200; ++i) {
    RandomGraph rg = testing::random_cfg(rng);
    rg.edges.erase(std::remove_if(rg.edges.begin(), rg.edges.end(),
                                  [](auto e) { return e.second <= e.first; }),
                   rg.edges.end());
    EXPECT_TRUE(check_reducibility(testing::to_cfg(rg)));
  }
}

}  // namespace
}  // namespace graphdec
