// SPDX-License-Identifier: Apache-2.0
//
// Structural facts about a function's CFG: dominators, natural loops,
// reducibility, block roles and a deterministic rendering order.
//
// Nodes are addressed by dense indices ordered by ascending start address, so
// index order doubles as the start-address tie-break everywhere below.
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "graphdec/ir_model.hpp"

namespace graphdec {

using NodeIndex = std::size_t;

struct SuccEdge {
  NodeIndex target;
  EdgeKind kind;

  bool operator==(const SuccEdge&) const = default;
};

class Cfg {
 public:
  // Successor lists are ordered by edge kind (taken-branch, fallthrough,
  // unconditional, computed) and then by target start address. Throws
  // ContractError if the entry or an edge endpoint is unknown.
  static Cfg build(std::span<const BasicBlock> blocks, std::span<const CfgEdge> edges,
                   const BlockId& entry);

  // Synthetic graph with nodes "BB0".."BB{n-1}" at addresses 0..n-1 and
  // unconditional edges. Used by tests and property generators.
  static Cfg from_edges(std::size_t node_count,
                        std::span<const std::pair<NodeIndex, NodeIndex>> edges,
                        NodeIndex entry = 0);

  std::size_t size() const { return ids_.size(); }
  NodeIndex entry() const { return entry_; }
  const BlockId& id(NodeIndex n) const { return ids_[n]; }
  std::uint64_t address(NodeIndex n) const { return addresses_[n]; }
  std::optional<NodeIndex> index_of(std::string_view id) const;

  std::span<const SuccEdge> succ(NodeIndex n) const { return succ_[n]; }
  std::span<const NodeIndex> pred(NodeIndex n) const { return pred_[n]; }
  std::size_t edge_count() const;

  // Nodes reachable from the entry, as a membership mask.
  std::vector<bool> reachable() const;

 private:
  void finish();

  std::vector<BlockId> ids_;
  std::unordered_map<BlockId, NodeIndex> index_;
  std::vector<std::uint64_t> addresses_;
  std::vector<std::vector<SuccEdge>> succ_;
  std::vector<std::vector<NodeIndex>> pred_;
  NodeIndex entry_ = 0;
};

class DominatorTree {
 public:
  DominatorTree() = default;
  explicit DominatorTree(std::vector<std::optional<NodeIndex>> idom,
                         std::vector<bool> reachable);

  // Immediate dominator; empty for the entry and for unreachable nodes.
  std::optional<NodeIndex> idom(NodeIndex n) const { return idom_[n]; }
  bool is_reachable(NodeIndex n) const { return reachable_[n]; }
  // Reflexive: every reachable node dominates itself.
  bool dominates(NodeIndex a, NodeIndex b) const;
  std::size_t size() const { return idom_.size(); }

 private:
  std::vector<std::optional<NodeIndex>> idom_;
  std::vector<bool> reachable_;
};

struct LoopEdge {
  NodeIndex from;
  NodeIndex to;
  EdgeKind kind;

  bool operator==(const LoopEdge&) const = default;
};

struct Loop {
  NodeIndex header;
  std::vector<LoopEdge> back_edges;
  std::vector<NodeIndex> body;  // sorted, includes header

  bool contains(NodeIndex n) const;
  bool operator==(const Loop&) const = default;
};

enum class Role : unsigned {
  entry = 1u << 0,
  loop_header = 1u << 1,
  branch = 1u << 2,
  join = 1u << 3,
  exit = 1u << 4,
  unreachable = 1u << 5,
  irreducible_member = 1u << 6,
};

class RoleSet {
 public:
  RoleSet() = default;
  bool has(Role r) const { return (bits_ & static_cast<unsigned>(r)) != 0; }
  void add(Role r) { bits_ |= static_cast<unsigned>(r); }
  bool empty() const { return bits_ == 0; }
  // Role names in fixed order, e.g. {"entry", "branch"}.
  std::vector<std::string_view> names() const;
  bool operator==(const RoleSet&) const = default;

 private:
  unsigned bits_ = 0;
};

std::string_view to_string(Role role);

// Iterative dataflow over reverse postorder (Cooper, Harvey, Kennedy).
DominatorTree compute_dominators(const Cfg& g);

// One Loop per header; back edges to the same header are merged. Sorted by
// header start address, which is the numeric order of "BB{k}" ids.
std::vector<Loop> detect_natural_loops(const Cfg& g, const DominatorTree& dom);

// True iff T1 (self-loop removal) and T2 (merge a node into its unique
// predecessor) collapse the reachable part of g to a single node.
bool check_reducibility(const Cfg& g);

// Nodes of the strongly connected parts of the T1/T2 residue, grouped per
// region. Empty iff the graph is reducible.
std::vector<std::vector<NodeIndex>> irreducible_regions(const Cfg& g);

std::vector<RoleSet> classify_block_roles(const Cfg& g, std::span<const Loop> loops,
                                          const DominatorTree& dom);

// Reverse postorder of a DFS from the entry in which the first successor in
// succ-list order is laid out first; unreachable nodes follow in address order.
std::vector<NodeIndex> block_order(const Cfg& g);

// Everything the prompt needs, computed once per function.
struct StructuralAnalysis {
  Cfg cfg;
  DominatorTree dominators;
  std::vector<Loop> loops;
  std::vector<RoleSet> roles;
  std::vector<NodeIndex> order;
  bool reducible = true;
};

StructuralAnalysis analyze_function(const FunctionAnalysis& f);

}  // namespace graphdec
