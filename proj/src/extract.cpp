#include "treeduce/extract.hpp"

#include <algorithm>
#include <map>

namespace treeduce {

namespace {

std::vector<int> depths(const Tree& t) {
  std::vector<int> d(t.size(), 0);
  for (NodeId id : t.preorder())
    if (t.node(id).parent != kNoNode) d[id] = d[t.node(id).parent] + 1;
  return d;
}

}  // namespace

std::vector<NodeId> pair_constituents(const Tree& x, const Tree& y, const ConstituentAlignment& c) {
  // Aligned source nodes with the same target set share a link set, and the
  // targets in that set are exactly the chain on the other side.
  std::map<std::vector<NodeId>, std::vector<NodeId>> chains;
  for (NodeId s = 0; s < static_cast<NodeId>(x.size()); ++s) {
    auto targets = c.targets_of(s);
    if (!targets.empty()) chains[targets].push_back(s);
  }
  auto dx = depths(x);
  auto dy = depths(y);
  std::vector<NodeId> partner(x.size(), kNoNode);
  for (auto& [targets, sources] : chains) {
    std::vector<NodeId> tgt = targets;
    std::sort(sources.begin(), sources.end(), [&](NodeId a, NodeId b) { return dx[a] > dx[b]; });
    std::sort(tgt.begin(), tgt.end(), [&](NodeId a, NodeId b) { return dy[a] > dy[b]; });
    for (std::size_t i = 0; i < sources.size(); ++i)
      partner[sources[i]] = tgt[std::min(i, tgt.size() - 1)];
  }
  if (!c.contains(x.root(), y.root()))
    throw ExtractionError("root pair (" + x.label(x.root()) + ", " + y.label(y.root()) + ") is not aligned");
  partner[x.root()] = y.root();
  return partner;
}

namespace {

struct Option {
  std::vector<NodeId> cuts;  // source nodes turned into frontiers, surface order
  int nodes = 0;
  int frontiers = 0;
  bool minimal = true;
};

class Extractor {
 public:
  Extractor(const Tree& x, const Tree& y, const ConstituentAlignment& c, const ExtractOptions& opt)
      : x_(x), y_(y), opt_(opt), partner_(pair_constituents(x, y, c)), null_(x.size(), true) {
    for (NodeId s : x_.postorder()) {
      if (partner_[s] != kNoNode || !c.targets_of(s).empty()) null_[s] = false;
      for (NodeId ch : x_.children(s))
        if (!null_[ch]) null_[s] = false;
    }
  }

  std::vector<SyncRule> run() {
    std::vector<SyncRule> out;
    for (NodeId v : x_.preorder()) {
      if (partner_[v] == kNoNode || x_.is_terminal(v)) continue;
      NodeId t = partner_[v];
      for (const Option& o : descend(v, t, 0)) {
        if (!o.minimal && (o.nodes > opt_.max_nodes || o.frontiers > opt_.max_vars)) continue;
        auto rule = build(v, t, o);
        if (!o.minimal && static_cast<int>(rule.gamma().size()) > opt_.max_nodes) continue;
        out.push_back(std::move(rule));
      }
    }
    return out;
  }

 private:
  bool over_caps(const Option& o) const {
    return !o.minimal && (o.nodes > opt_.max_nodes || o.frontiers > opt_.max_vars);
  }

  // Ways of realising `u` (a node strictly below the rule root) in alpha.
  std::vector<Option> child_options(NodeId u, NodeId t, int skipped) {
    if (x_.is_terminal(u)) return {Option{{}, 1, 0, true}};
    bool cuttable = null_[u] || (partner_[u] != kNoNode && y_.is_ancestor_or_self(t, partner_[u]));
    if (!cuttable) return descend(u, t, skipped);
    std::vector<Option> out{Option{{u}, 1, 1, true}};
    if (skipped < opt_.depth) {
      for (Option& o : descend(u, t, skipped + 1)) {
        o.minimal = false;
        if (!over_caps(o)) out.push_back(std::move(o));
      }
    }
    return out;
  }

  // Ways of realising `u` as an internal alpha node.
  std::vector<Option> descend(NodeId u, NodeId t, int skipped) {
    std::vector<Option> acc{Option{{}, 1, 0, true}};
    for (NodeId ch : x_.children(u)) {
      auto opts = child_options(ch, t, skipped);
      std::vector<Option> next;
      next.reserve(acc.size() * opts.size());
      for (const Option& a : acc)
        for (const Option& b : opts) {
          Option o = a;
          o.cuts.insert(o.cuts.end(), b.cuts.begin(), b.cuts.end());
          o.nodes += b.nodes;
          o.frontiers += b.frontiers;
          o.minimal = a.minimal && b.minimal;
          if (!over_caps(o)) next.push_back(std::move(o));
        }
      acc = std::move(next);
    }
    return acc;
  }

  SyncRule build(NodeId v, NodeId t, const Option& o) {
    std::map<NodeId, int> src_var;  // cut source node -> link
    std::map<NodeId, int> tgt_var;  // claimed target node -> link
    int next = 0;
    for (NodeId u : o.cuts) {
      if (null_[u]) {
        src_var[u] = kEpsilon;
      } else {
        src_var[u] = next;
        tgt_var[partner_[u]] = next;
        ++next;
      }
    }
    Tree alpha = copy_cut(x_, v, src_var);
    Tree gamma = copy_cut(y_, t, tgt_var);
    return SyncRule(std::move(alpha), std::move(gamma), kExtracted);
  }

  static Tree copy_cut(const Tree& src, NodeId from, const std::map<NodeId, int>& cuts) {
    Tree out;
    std::vector<std::pair<NodeId, NodeId>> stack{{from, kNoNode}};
    while (!stack.empty()) {
      auto [id, parent] = stack.back();
      stack.pop_back();
      auto cut = cuts.find(id);
      NodeId copy;
      if (cut != cuts.end()) {
        copy = out.add_node(src.label(id), NodeKind::frontier, cut->second);
      } else {
        copy = out.add_node(src.label(id), src.node(id).kind);
        const auto& ch = src.children(id);
        for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.emplace_back(*it, copy);
      }
      if (parent == kNoNode) out.set_root(copy);
      else out.add_child(parent, copy);
    }
    out.finalize();
    return out;
  }

  const Tree& x_;
  const Tree& y_;
  ExtractOptions opt_;
  std::vector<NodeId> partner_;
  std::vector<bool> null_;
};

}  // namespace

std::vector<SyncRule> extract_minimal(const Tree& x, const Tree& y, const ConstituentAlignment& c) {
  return extract_specialized(x, y, c, ExtractOptions{});
}

std::vector<SyncRule> extract_specialized(const Tree& x, const Tree& y, const ConstituentAlignment& c,
                                          const ExtractOptions& options) {
  if (options.depth < 0) throw ExtractionError("negative specialization depth");
  return Extractor(x, y, c, options).run();
}

}  // namespace treeduce
