#include "treeduce/synth.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "collins_heads.inc"

namespace treeduce {

HeadTable HeadTable::parse(const std::string& text) {
  HeadTable table;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto tokens = split_ws(line);
    if (tokens.empty() || tokens[0][0] == '#') continue;
    std::vector<Entry> entries;
    Entry current;
    bool expect_dir = true;
    for (std::size_t i = 1; i <= tokens.size(); ++i) {
      if (i == tokens.size() || tokens[i] == ";") {
        if (expect_dir) throw ParseError("head table line " + std::to_string(lineno) + ": missing direction");
        entries.push_back(current);
        current = Entry{};
        expect_dir = true;
        continue;
      }
      if (expect_dir) {
        const std::string& d = tokens[i];
        if (d == "left" || d == "right" || d == "leftdis" || d == "rightdis") {
          current.from_left = d.rfind("left", 0) == 0;
          current.child_major = d.size() > 5 && d.substr(d.size() - 3) == "dis";
        } else {
          throw ParseError("head table line " + std::to_string(lineno) + ": bad direction '" + d + "'");
        }
        expect_dir = false;
      } else {
        current.categories.push_back(tokens[i]);
      }
    }
    table.rules_[tokens[0]] = std::move(entries);
  }
  return table;
}

const HeadTable& HeadTable::standard() {
  static const HeadTable table = parse(kCollinsHeadTable);
  return table;
}

std::size_t HeadTable::find_head(const std::vector<Entry>& entries,
                                 const std::vector<std::string>& children) const {
  const std::size_t n = children.size();
  auto at = [&](bool from_left, std::size_t k) { return from_left ? k : n - 1 - k; };
  for (const Entry& e : entries) {
    if (e.categories.empty()) return at(e.from_left, 0);
    if (e.child_major) {
      for (std::size_t k = 0; k < n; ++k) {
        std::size_t i = at(e.from_left, k);
        if (std::find(e.categories.begin(), e.categories.end(), children[i]) != e.categories.end()) return i;
      }
    } else {
      for (const std::string& cat : e.categories)
        for (std::size_t k = 0; k < n; ++k) {
          std::size_t i = at(e.from_left, k);
          if (children[i] == cat) return i;
        }
    }
  }
  return at(entries.empty() || entries.front().from_left, 0);
}

std::vector<std::size_t> HeadTable::rank(const std::string& parent,
                                         const std::vector<std::string>& children) const {
  std::vector<std::size_t> order;
  auto it = rules_.find(parent);
  if (it == rules_.end()) {
    {
      std::lock_guard<std::mutex> lock(warn_mutex_);
      if (warned_.insert(parent).second)
        spdlog::warn("no head rule for '{}', ranking children rightmost-first", parent);
    }
    for (std::size_t i = children.size(); i-- > 0;) order.push_back(i);
    return order;
  }
  std::vector<std::size_t> remaining(children.size());
  for (std::size_t i = 0; i < remaining.size(); ++i) remaining[i] = i;
  while (!remaining.empty()) {
    std::vector<std::string> labels;
    for (std::size_t i : remaining) labels.push_back(children[i]);
    std::size_t h = find_head(it->second, labels);
    order.push_back(remaining[h]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(h));
  }
  return order;
}

std::vector<std::size_t> rank_heads(const std::string& parent, const std::vector<std::string>& children) {
  return HeadTable::standard().rank(parent, children);
}

namespace {

// Builds [P c1 .. ck] where children marked keep[i] >= 0 become frontiers with
// that link, keep[i] == kEpsilon become epsilon frontiers, and terminals are
// copied literally.
Tree one_level(const Tree& x, NodeId node, const std::vector<int>& links) {
  Tree t;
  NodeId root = t.add_node(x.label(node), NodeKind::internal);
  t.set_root(root);
  const auto& ch = x.children(node);
  for (std::size_t i = 0; i < ch.size(); ++i) {
    NodeId c = x.is_terminal(ch[i]) ? t.add_node(x.label(ch[i]), NodeKind::terminal)
                                    : t.add_node(x.label(ch[i]), NodeKind::frontier, links[i]);
    t.add_child(root, c);
  }
  t.finalize();
  return t;
}

Tree bare_frontier(const std::string& label, int link) {
  Tree t;
  t.set_root(t.add_node(label, NodeKind::frontier, link));
  t.finalize();
  return t;
}

void push_unique(std::vector<SyncRule>& out, std::unordered_set<std::string>& seen, SyncRule rule) {
  if (seen.insert(rule.key()).second) out.push_back(std::move(rule));
}

}  // namespace

std::vector<SyncRule> synthesize_copy_rules(const Tree& x) {
  std::vector<SyncRule> out;
  std::unordered_set<std::string> seen;
  for (NodeId v : x.preorder()) {
    if (!x.is_internal(v)) continue;
    std::vector<int> links;
    int next = 0;
    for (NodeId c : x.children(v)) links.push_back(x.is_terminal(c) ? kEpsilon : next++);
    Tree side = one_level(x, v, links);
    push_unique(out, seen, SyncRule(side, side, kCopy));
  }
  return out;
}

std::vector<SyncRule> synthesize_delete_rules(const Tree& x, const HeadTable& heads) {
  std::vector<SyncRule> out;
  std::unordered_set<std::string> seen;
  for (NodeId v : x.preorder()) {
    if (!x.is_internal(v)) continue;
    const auto& ch = x.children(v);
    if (std::any_of(ch.begin(), ch.end(), [&](NodeId c) { return x.is_terminal(c); })) continue;
    std::vector<std::string> labels;
    for (NodeId c : ch) labels.push_back(x.label(c));
    auto ranking = heads.rank(x.label(v), labels);
    std::vector<bool> retained(ch.size(), false);
    for (std::size_t m = 0; m < ranking.size(); ++m) {
      retained[ranking[m]] = true;
      std::vector<int> links(ch.size(), kEpsilon);
      int next = 0;
      for (std::size_t i = 0; i < ch.size(); ++i)
        if (retained[i]) links[i] = next++;
      Tree alpha = one_level(x, v, links);
      Tree gamma;
      NodeId root = gamma.add_node(x.label(v), NodeKind::internal);
      gamma.set_root(root);
      for (std::size_t i = 0; i < ch.size(); ++i)
        if (retained[i]) gamma.add_child(root, gamma.add_node(labels[i], NodeKind::frontier, links[i]));
      gamma.finalize();
      push_unique(out, seen, SyncRule(alpha, std::move(gamma), kDelete));
      if (m == 0) push_unique(out, seen, SyncRule(alpha, bare_frontier(labels[ranking[0]], 0), kDelete));
    }
  }
  return out;
}

}  // namespace treeduce
