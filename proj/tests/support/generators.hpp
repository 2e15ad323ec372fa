#pragma once

#include <random>
#include <string>
#include <vector>

#include "treeduce/alignment.hpp"
#include "treeduce/tree.hpp"

namespace treeduce::gen {

using Rng = std::mt19937_64;

struct TreeShape {
  std::vector<std::string> phrase_labels{"S", "NP", "VP", "PP", "ADJP", "SBAR"};
  std::vector<std::string> tags{"DT", "NN", "VB", "JJ", "IN"};
  std::vector<std::string> words{"a", "b", "c", "d", "e", "f"};
  int max_depth = 4;
  int max_children = 3;
  /// Probability of stopping early with a preterminal below the root.
  double leaf_prob = 0.35;
};

inline int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

template <class T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(v.size()) - 1))];
}

namespace detail {
inline NodeId grow(Tree& t, Rng& rng, const TreeShape& s, int depth) {
  bool leaf = depth >= s.max_depth ||
              (depth > 0 && std::uniform_real_distribution<double>(0, 1)(rng) < s.leaf_prob);
  if (leaf) {
    NodeId pre = t.add_node(pick(rng, s.tags), NodeKind::internal);
    t.add_child(pre, t.add_node(pick(rng, s.words), NodeKind::terminal));
    return pre;
  }
  NodeId n = t.add_node(depth == 0 ? "S" : pick(rng, s.phrase_labels), NodeKind::internal);
  int k = uniform(rng, 1, s.max_children);
  for (int i = 0; i < k; ++i) t.add_child(n, grow(t, rng, s, depth + 1));
  return n;
}
}  // namespace detail

inline Tree random_tree(Rng& rng, const TreeShape& shape = {}) {
  Tree t;
  t.set_root(detail::grow(t, rng, shape, 0));
  t.finalize();
  return t;
}

/// Copies `x` without the subtrees rooted at nodes marked in `drop`; parents
/// left without children are dropped as well. Returns an empty tree when
/// everything is dropped.
inline Tree prune(const Tree& x, const std::vector<bool>& drop) {
  std::vector<bool> gone(x.size(), false);
  for (NodeId id : x.postorder()) {
    if (drop[id]) {
      gone[id] = true;
      continue;
    }
    if (x.is_terminal(id)) continue;
    bool all = true;
    for (NodeId c : x.children(id)) all = all && gone[c];
    gone[id] = all;
  }
  Tree out;
  if (gone[x.root()]) return out;
  std::vector<NodeId> copy(x.size(), kNoNode);
  for (NodeId id : x.preorder()) {
    NodeId parent = x.node(id).parent;
    if (gone[id] || (parent != kNoNode && copy[parent] == kNoNode)) continue;
    copy[id] = out.add_node(x.label(id), x.node(id).kind);
    if (parent == kNoNode) out.set_root(copy[id]);
    else out.add_child(copy[parent], copy[id]);
  }
  out.finalize();
  return out;
}

/// A compression of `x` made by deleting random non-root constituents.
/// At least one word always survives.
inline Tree random_deletion(Rng& rng, const Tree& x, double p = 0.3) {
  while (true) {
    std::vector<bool> drop(x.size(), false);
    for (NodeId id : x.preorder())
      if (id != x.root() && x.is_internal(id) && std::bernoulli_distribution(p)(rng)) drop[id] = true;
    Tree y = prune(x, drop);
    if (!y.empty()) return y;
  }
}

struct AlignedPair {
  Tree x, y;
  WordAlignment a;
};

inline AlignedPair random_deletion_pair(Rng& rng, const TreeShape& shape = {}, double p = 0.3) {
  AlignedPair pair;
  pair.x = random_tree(rng, shape);
  pair.y = random_deletion(rng, pair.x, p);
  pair.a = *auto_align_deletion(yield_tokens(pair.x), yield_tokens(pair.y));
  return pair;
}

}  // namespace treeduce::gen
