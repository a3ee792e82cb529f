// SPDX-License-Identifier: Apache-2.0
#include "graphdec/graph_analysis.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "graphdec/errors.hpp"

namespace graphdec {

namespace {

int kind_rank(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::taken_branch: return 0;
    case EdgeKind::fallthrough: return 1;
    case EdgeKind::unconditional: return 2;
    case EdgeKind::computed: return 3;
  }
  return 4;
}

// Plain reverse postorder over reachable nodes; successor order does not
// matter for the dominator fixpoint.
std::vector<NodeIndex> reverse_postorder(const Cfg& g) {
  std::vector<NodeIndex> post;
  if (g.size() == 0) return post;
  std::vector<bool> seen(g.size(), false);
  std::vector<std::pair<NodeIndex, std::size_t>> stack;
  stack.emplace_back(g.entry(), 0);
  seen[g.entry()] = true;
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    auto succ = g.succ(node);
    if (next < succ.size()) {
      NodeIndex t = succ[next++].target;
      if (!seen[t]) {
        seen[t] = true;
        stack.emplace_back(t, 0);
      }
    } else {
      post.push_back(node);
      stack.pop_back();
    }
  }
  std::reverse(post.begin(), post.end());
  return post;
}

// T1/T2 reduction on the reachable subgraph. Returns, for every surviving
// super-node, the original nodes it absorbed, plus the residue successor sets.
struct Residue {
  std::vector<bool> alive;
  std::vector<std::vector<NodeIndex>> members;
  std::vector<std::set<NodeIndex>> succ;
  std::size_t alive_count = 0;
};

Residue reduce(const Cfg& g) {
  const std::size_t n = g.size();
  Residue r;
  r.alive = g.reachable();
  r.members.resize(n);
  r.succ.resize(n);
  std::vector<std::set<NodeIndex>> pred(n);
  for (NodeIndex v = 0; v < n; ++v) {
    if (!r.alive[v]) continue;
    r.members[v].push_back(v);
    for (const auto& e : g.succ(v)) {
      r.succ[v].insert(e.target);
      pred[e.target].insert(v);
    }
  }

  bool changed = true;
  while (changed) {
    changed = false;
    for (NodeIndex v = 0; v < n; ++v) {
      if (!r.alive[v]) continue;
      // T1
      if (r.succ[v].erase(v) != 0) {
        pred[v].erase(v);
        changed = true;
      }
      // T2
      if (v == g.entry() || pred[v].size() != 1) continue;
      NodeIndex p = *pred[v].begin();
      for (NodeIndex s : r.succ[v]) {
        pred[s].erase(v);
        pred[s].insert(p);
        r.succ[p].insert(s);
      }
      r.succ[p].erase(v);
      r.members[p].insert(r.members[p].end(), r.members[v].begin(), r.members[v].end());
      r.members[v].clear();
      r.succ[v].clear();
      pred[v].clear();
      r.alive[v] = false;
      changed = true;
    }
  }
  r.alive_count = static_cast<std::size_t>(std::count(r.alive.begin(), r.alive.end(), true));
  return r;
}

}  // namespace

Cfg Cfg::build(std::span<const BasicBlock> blocks, std::span<const CfgEdge> edges,
               const BlockId& entry) {
  std::vector<const BasicBlock*> sorted;
  for (const auto& b : blocks) sorted.push_back(&b);
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
    return a->start_address < b->start_address;
  });

  Cfg g;
  for (const auto* b : sorted) {
    g.index_.emplace(b->id, g.ids_.size());
    g.ids_.push_back(b->id);
    g.addresses_.push_back(b->start_address);
  }
  g.succ_.resize(g.ids_.size());

  auto entry_index = g.index_of(entry);
  if (!entry_index) throw ContractError("entry block " + entry + " is not a block");
  g.entry_ = *entry_index;

  for (const auto& e : edges) {
    auto from = g.index_of(e.from);
    auto to = g.index_of(e.to);
    if (!from || !to) {
      throw ContractError("edge " + e.from + " -> " + e.to + " references an unknown block");
    }
    g.succ_[*from].push_back({*to, e.kind});
  }
  g.finish();
  return g;
}

Cfg Cfg::from_edges(std::size_t node_count,
                    std::span<const std::pair<NodeIndex, NodeIndex>> edges,
                    NodeIndex entry) {
  Cfg g;
  for (std::size_t i = 0; i < node_count; ++i) {
    g.ids_.push_back("BB" + std::to_string(i));
    g.index_.emplace(g.ids_.back(), i);
    g.addresses_.push_back(i);
  }
  g.succ_.resize(node_count);
  if (entry >= node_count) throw ContractError("entry index out of range");
  g.entry_ = entry;
  for (auto [from, to] : edges) {
    if (from >= node_count || to >= node_count) {
      throw ContractError("edge endpoint out of range");
    }
    g.succ_[from].push_back({to, EdgeKind::unconditional});
  }
  g.finish();
  return g;
}

void Cfg::finish() {
  for (auto& list : succ_) {
    std::stable_sort(list.begin(), list.end(), [this](const SuccEdge& a, const SuccEdge& b) {
      int ra = kind_rank(a.kind);
      int rb = kind_rank(b.kind);
      if (ra != rb) return ra < rb;
      return addresses_[a.target] < addresses_[b.target];
    });
  }
  pred_.assign(ids_.size(), {});
  for (NodeIndex n = 0; n < ids_.size(); ++n) {
    for (const auto& e : succ_[n]) pred_[e.target].push_back(n);
  }
}

std::optional<NodeIndex> Cfg::index_of(std::string_view id) const {
  auto it = index_.find(BlockId(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Cfg::edge_count() const {
  std::size_t n = 0;
  for (const auto& list : succ_) n += list.size();
  return n;
}

std::vector<bool> Cfg::reachable() const {
  std::vector<bool> seen(size(), false);
  if (size() == 0) return seen;
  std::vector<NodeIndex> work{entry_};
  seen[entry_] = true;
  while (!work.empty()) {
    NodeIndex n = work.back();
    work.pop_back();
    for (const auto& e : succ_[n]) {
      if (!seen[e.target]) {
        seen[e.target] = true;
        work.push_back(e.target);
      }
    }
  }
  return seen;
}

DominatorTree::DominatorTree(std::vector<std::optional<NodeIndex>> idom,
                             std::vector<bool> reachable)
    : idom_(std::move(idom)), reachable_(std::move(reachable)) {}

bool DominatorTree::dominates(NodeIndex a, NodeIndex b) const {
  if (!reachable_[a] || !reachable_[b]) return false;
  std::optional<NodeIndex> cur = b;
  while (cur) {
    if (*cur == a) return true;
    cur = idom_[*cur];
  }
  return false;
}

bool Loop::contains(NodeIndex n) const {
  return std::binary_search(body.begin(), body.end(), n);
}

std::string_view to_string(Role role) {
  switch (role) {
    case Role::entry: return "entry";
    case Role::loop_header: return "loop-header";
    case Role::branch: return "branch";
    case Role::join: return "join";
    case Role::exit: return "exit";
    case Role::unreachable: return "unreachable";
    case Role::irreducible_member: return "irreducible-region-member";
  }
  return "?";
}

std::vector<std::string_view> RoleSet::names() const {
  static constexpr Role kOrder[] = {Role::entry, Role::loop_header, Role::branch,
                                    Role::join,  Role::exit,        Role::unreachable,
                                    Role::irreducible_member};
  std::vector<std::string_view> out;
  for (Role r : kOrder) {
    if (has(r)) out.push_back(to_string(r));
  }
  return out;
}

DominatorTree compute_dominators(const Cfg& g) {
  const std::size_t n = g.size();
  std::vector<std::optional<NodeIndex>> idom(n);
  std::vector<bool> reachable(n, false);
  if (n == 0) return DominatorTree(std::move(idom), std::move(reachable));

  const auto rpo = reverse_postorder(g);
  std::vector<std::size_t> rpo_number(n, 0);
  for (std::size_t i = 0; i < rpo.size(); ++i) {
    rpo_number[rpo[i]] = i;
    reachable[rpo[i]] = true;
  }

  // The entry temporarily points at itself so the intersection walk stops.
  std::vector<std::optional<NodeIndex>> doms(n);
  doms[g.entry()] = g.entry();

  auto intersect = [&](NodeIndex a, NodeIndex b) {
    while (a != b) {
      while (rpo_number[a] > rpo_number[b]) a = *doms[a];
      while (rpo_number[b] > rpo_number[a]) b = *doms[b];
    }
    return a;
  };

  bool changed = true;
  while (changed) {
    changed = false;
    for (NodeIndex v : rpo) {
      if (v == g.entry()) continue;
      std::optional<NodeIndex> candidate;
      for (NodeIndex p : g.pred(v)) {
        if (!doms[p]) continue;
        candidate = candidate ? intersect(p, *candidate) : p;
      }
      if (candidate && doms[v] != candidate) {
        doms[v] = candidate;
        changed = true;
      }
    }
  }

  for (NodeIndex v : rpo) {
    if (v != g.entry()) idom[v] = doms[v];
  }
  return DominatorTree(std::move(idom), std::move(reachable));
}

std::vector<Loop> detect_natural_loops(const Cfg& g, const DominatorTree& dom) {
  std::map<NodeIndex, Loop> by_header;
  for (NodeIndex v = 0; v < g.size(); ++v) {
    if (!dom.is_reachable(v)) continue;
    for (const auto& e : g.succ(v)) {
      if (!dom.dominates(e.target, v)) continue;
      auto& loop = by_header[e.target];
      loop.header = e.target;
      loop.back_edges.push_back({v, e.target, e.kind});
    }
  }

  std::vector<Loop> loops;
  for (auto& [header, loop] : by_header) {
    std::vector<bool> in_body(g.size(), false);
    in_body[header] = true;
    std::vector<NodeIndex> work;
    for (const auto& be : loop.back_edges) {
      if (!in_body[be.from]) {
        in_body[be.from] = true;
        work.push_back(be.from);
      }
    }
    while (!work.empty()) {
      NodeIndex v = work.back();
      work.pop_back();
      for (NodeIndex p : g.pred(v)) {
        if (!in_body[p] && dom.is_reachable(p)) {
          in_body[p] = true;
          work.push_back(p);
        }
      }
    }
    for (NodeIndex v = 0; v < g.size(); ++v) {
      if (in_body[v]) loop.body.push_back(v);
    }
    loops.push_back(std::move(loop));
  }
  return loops;
}

bool check_reducibility(const Cfg& g) {
  if (g.size() == 0) return true;
  return reduce(g).alive_count == 1;
}

std::vector<std::vector<NodeIndex>> irreducible_regions(const Cfg& g) {
  std::vector<std::vector<NodeIndex>> regions;
  if (g.size() == 0) return regions;
  Residue r = reduce(g);
  if (r.alive_count <= 1) return regions;

  // Tarjan over the residue graph.
  const std::size_t n = g.size();
  std::vector<int> index(n, -1), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<NodeIndex> stack;
  int counter = 0;

  auto strongconnect = [&](auto&& self, NodeIndex v) -> void {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = true;
    for (NodeIndex w : r.succ[v]) {
      if (index[w] < 0) {
        self(self, w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] != index[v]) return;
    std::vector<NodeIndex> component;
    NodeIndex w;
    do {
      w = stack.back();
      stack.pop_back();
      on_stack[w] = false;
      component.push_back(w);
    } while (w != v);
    // T1 already removed self loops, so only multi-node components are cycles.
    if (component.size() < 2) return;
    std::vector<NodeIndex> region;
    for (NodeIndex s : component) {
      region.insert(region.end(), r.members[s].begin(), r.members[s].end());
    }
    std::sort(region.begin(), region.end());
    regions.push_back(std::move(region));
  };

  for (NodeIndex v = 0; v < n; ++v) {
    if (r.alive[v] && index[v] < 0) strongconnect(strongconnect, v);
  }
  std::sort(regions.begin(), regions.end());
  return regions;
}

std::vector<RoleSet> classify_block_roles(const Cfg& g, std::span<const Loop> loops,
                                          const DominatorTree& dom) {
  std::vector<RoleSet> roles(g.size());
  for (NodeIndex v = 0; v < g.size(); ++v) {
    if (!dom.is_reachable(v)) {
      roles[v].add(Role::unreachable);
      continue;
    }
    if (v == g.entry()) roles[v].add(Role::entry);

    std::set<NodeIndex> succs;
    for (const auto& e : g.succ(v)) succs.insert(e.target);
    if (succs.size() >= 2) roles[v].add(Role::branch);
    if (succs.empty()) roles[v].add(Role::exit);

    std::set<NodeIndex> preds;
    for (NodeIndex p : g.pred(v)) {
      if (dom.is_reachable(p)) preds.insert(p);
    }
    if (preds.size() >= 2) roles[v].add(Role::join);
  }
  for (const auto& loop : loops) roles[loop.header].add(Role::loop_header);
  for (const auto& region : irreducible_regions(g)) {
    for (NodeIndex v : region) roles[v].add(Role::irreducible_member);
  }
  return roles;
}

std::vector<NodeIndex> block_order(const Cfg& g) {
  std::vector<NodeIndex> post;
  std::vector<bool> seen(g.size(), false);
  if (g.size() > 0) {
    // Successors are pushed last-to-first so the first successor's subtree
    // finishes last and therefore comes first after reversal.
    std::vector<std::pair<NodeIndex, std::size_t>> stack;
    stack.emplace_back(g.entry(), 0);
    seen[g.entry()] = true;
    while (!stack.empty()) {
      auto& [node, visited] = stack.back();
      auto succ = g.succ(node);
      if (visited < succ.size()) {
        NodeIndex t = succ[succ.size() - 1 - visited].target;
        ++visited;
        if (!seen[t]) {
          seen[t] = true;
          stack.emplace_back(t, 0);
        }
      } else {
        post.push_back(node);
        stack.pop_back();
      }
    }
  }
  std::vector<NodeIndex> order(post.rbegin(), post.rend());
  for (NodeIndex v = 0; v < g.size(); ++v) {
    if (!seen[v]) order.push_back(v);
  }
  return order;
}

StructuralAnalysis analyze_function(const FunctionAnalysis& f) {
  StructuralAnalysis a;
  a.cfg = Cfg::build(f.blocks, f.edges, f.entry_block);
  a.dominators = compute_dominators(a.cfg);
  a.loops = detect_natural_loops(a.cfg, a.dominators);
  a.roles = classify_block_roles(a.cfg, a.loops, a.dominators);
  a.order = block_order(a.cfg);
  a.reducible = check_reducibility(a.cfg);
  return a;
}

}  // namespace graphdec
