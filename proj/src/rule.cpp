#include "treeduce/rule.hpp"

#include <algorithm>

namespace treeduce {

std::string provenance_string(unsigned flags) {
  std::string out;
  auto add = [&](unsigned bit, const char* name) {
    if (!(flags & bit)) return;
    if (!out.empty()) out += '+';
    out += name;
  };
  add(kExtracted, "extracted");
  add(kCopy, "copy");
  add(kDelete, "delete");
  return out.empty() ? "none" : out;
}

unsigned parse_provenance(const std::string& text) {
  unsigned flags = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('+', start);
    if (end == std::string::npos) end = text.size();
    std::string part = text.substr(start, end - start);
    if (part == "extracted") flags |= kExtracted;
    else if (part == "copy") flags |= kCopy;
    else if (part == "delete") flags |= kDelete;
    else if (part != "none") throw RuleError("unknown provenance '" + part + "'");
    start = end + 1;
  }
  return flags;
}

namespace {

Tree relink(const Tree& t, const std::vector<int>& remap) {
  Tree out;
  for (const Node& n : t.nodes()) {
    int link = n.link;
    if (n.kind == NodeKind::frontier && link != kEpsilon) link = remap.at(static_cast<std::size_t>(link));
    out.add_node(n.label, n.kind, link);
  }
  for (NodeId id = 0; id < static_cast<NodeId>(t.size()); ++id)
    for (NodeId c : t.children(id)) out.add_child(id, c);
  out.set_root(t.root());
  out.finalize();
  return out;
}

}  // namespace

SyncRule::SyncRule(Tree alpha, Tree gamma, unsigned provenance)
    : alpha_(std::move(alpha)), gamma_(std::move(gamma)), provenance_(provenance) {
  if (alpha_.empty() || gamma_.empty()) throw RuleError("rule with an empty side");
  if (!alpha_.is_internal(alpha_.root()))
    throw RuleError("alpha must be rooted at an internal node: " + serialize(alpha_));
  if (gamma_.is_terminal(gamma_.root())) throw RuleError("gamma rooted at a terminal");

  // Renumber variables in alpha's surface order.
  std::vector<NodeId> a_leaves = alpha_.leaves();
  int max_link = -1;
  for (const Node& n : alpha_.nodes())
    if (n.kind == NodeKind::frontier) max_link = std::max(max_link, n.link);
  for (const Node& n : gamma_.nodes())
    if (n.kind == NodeKind::frontier) {
      if (n.link == kEpsilon) throw RuleError("gamma frontier '" + n.label + "' linked to epsilon");
      max_link = std::max(max_link, n.link);
    }
  std::vector<int> remap(static_cast<std::size_t>(max_link + 1), -1);
  int next = 0;
  for (NodeId id : a_leaves) {
    const Node& n = alpha_.node(id);
    if (n.kind != NodeKind::frontier || n.link == kEpsilon) continue;
    if (remap[n.link] != -1) throw RuleError("variable used twice in alpha: " + serialize(alpha_));
    remap[n.link] = next++;
  }
  std::vector<int> gamma_seen(static_cast<std::size_t>(next), 0);
  for (const Node& n : gamma_.nodes()) {
    if (n.kind != NodeKind::frontier) continue;
    if (remap[n.link] == -1)
      throw RuleError("gamma variable without alpha counterpart: " + serialize(gamma_));
    if (gamma_seen[remap[n.link]]++)
      throw RuleError("variable used twice in gamma: " + serialize(gamma_));
  }
  for (int v = 0; v < next; ++v)
    if (!gamma_seen[v]) throw RuleError("alpha variable missing from gamma: " + serialize(alpha_));

  alpha_ = relink(alpha_, remap);
  gamma_ = relink(gamma_, remap);

  alpha_vars_.assign(static_cast<std::size_t>(next), kNoNode);
  gamma_vars_.assign(static_cast<std::size_t>(next), kNoNode);
  for (NodeId id : alpha_.leaves()) {
    if (!alpha_.is_frontier(id)) continue;
    alpha_frontier_.push_back(id);
    if (alpha_.node(id).link != kEpsilon) alpha_vars_[alpha_.node(id).link] = id;
  }
  for (NodeId id : gamma_.leaves())
    if (gamma_.is_frontier(id)) gamma_vars_[gamma_.node(id).link] = id;

  key_ = src_root() + " " + tgt_root() + " ||| " + serialize(alpha_) + " ||| " + serialize(gamma_);
}

std::string SyncRule::links_string() const {
  std::vector<int> gamma_ordinal(alpha_vars_.size(), -1);
  int ordinal = 0;
  for (NodeId id : gamma_.leaves())
    if (gamma_.is_frontier(id)) gamma_ordinal[gamma_.node(id).link] = ordinal++;
  std::string out;
  for (std::size_t i = 0; i < alpha_frontier_.size(); ++i) {
    if (!out.empty()) out += ' ';
    int link = alpha_.node(alpha_frontier_[i]).link;
    out += std::to_string(i) + "-" + (link == kEpsilon ? std::string("e") : std::to_string(gamma_ordinal[link]));
  }
  return out;
}

SyncRule parse_rule(const std::string& x, const std::string& y, const std::string& alpha,
                    const std::string& gamma, unsigned provenance) {
  SyncRule rule(parse_elementary(alpha), parse_elementary(gamma), provenance);
  if (rule.src_root() != x || rule.tgt_root() != y)
    throw RuleError("rule roots '" + x + " " + y + "' disagree with its trees");
  return rule;
}

namespace {

bool match_into(const Tree& elem, NodeId e, const Tree& tree, NodeId n, Binding& out) {
  const Node& en = elem.node(e);
  const Node& tn = tree.node(n);
  switch (en.kind) {
    case NodeKind::terminal:
      return tn.kind == NodeKind::terminal && tn.label == en.label;
    case NodeKind::frontier:
      if (tn.kind != NodeKind::internal || tn.label != en.label) return false;
      if (en.link == kEpsilon) out.deleted.push_back(n);
      else out.vars[en.link] = n;
      return true;
    case NodeKind::internal:
      if (tn.kind != NodeKind::internal || tn.label != en.label ||
          tn.children.size() != en.children.size())
        return false;
      for (std::size_t i = 0; i < en.children.size(); ++i)
        if (!match_into(elem, en.children[i], tree, tn.children[i], out)) return false;
      return true;
  }
  return false;
}

std::optional<Binding> match_elementary(const Tree& elem, int num_vars, const Tree& tree, NodeId node) {
  if (node < 0 || static_cast<std::size_t>(node) >= tree.size()) return std::nullopt;
  Binding b;
  b.vars.assign(static_cast<std::size_t>(num_vars), kNoNode);
  if (!match_into(elem, elem.root(), tree, node, b)) return std::nullopt;
  return b;
}

}  // namespace

std::optional<Binding> match_source(const SyncRule& rule, const Tree& tree, NodeId node) {
  return match_elementary(rule.alpha(), rule.num_vars(), tree, node);
}

std::optional<Binding> match_target(const SyncRule& rule, const Tree& tree, NodeId node) {
  return match_elementary(rule.gamma(), rule.num_vars(), tree, node);
}

std::string production_signature(const Tree& tree, NodeId node) {
  const Node& n = tree.node(node);
  std::string out = n.label;
  for (NodeId c : n.children) {
    out += ' ';
    if (tree.is_terminal(c)) out += '"';
    out += tree.label(c);
  }
  return out;
}

}  // namespace treeduce
