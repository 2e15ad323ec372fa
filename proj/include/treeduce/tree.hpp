#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace treeduce {

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

/// Frontier link value for a non-terminal leaf that is aligned to nothing.
inline constexpr int kEpsilon = -1;

enum class NodeKind : std::uint8_t { internal, terminal, frontier };

/// Inclusive token interval. Subtrees without terminals carry an empty span.
struct Span {
  int lo = 0;
  int hi = -1;

  bool empty() const { return hi < lo; }
  bool contains(int i) const { return !empty() && lo <= i && i <= hi; }
  friend bool operator==(const Span&, const Span&) = default;
};

struct Node {
  std::string label;
  NodeKind kind = NodeKind::internal;
  std::vector<NodeId> children;
  NodeId parent = kNoNode;
  Span span;
  /// Frontier nodes only: variable index (0-based) or kEpsilon.
  int link = kEpsilon;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An ordered labelled tree. Full trees hold internal and terminal nodes;
/// elementary trees (rule sides) may also hold frontier leaves.
///
/// Trees are built with add_node/add_child and sealed with finalize(), which
/// checks the structural invariants and computes token spans.
class Tree {
 public:
  Tree() = default;

  NodeId add_node(std::string label, NodeKind kind, int link = kEpsilon);
  void add_child(NodeId parent, NodeId child);
  void set_root(NodeId root) { root_ = root; }

  /// Validates the tree and assigns token indices left to right from 0.
  /// Throws ParseError on a malformed structure.
  void finalize();

  NodeId root() const { return root_; }
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  const Node& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::string& label(NodeId id) const { return node(id).label; }
  const std::vector<NodeId>& children(NodeId id) const { return node(id).children; }
  bool is_terminal(NodeId id) const { return node(id).kind == NodeKind::terminal; }
  bool is_frontier(NodeId id) const { return node(id).kind == NodeKind::frontier; }
  bool is_internal(NodeId id) const { return node(id).kind == NodeKind::internal; }
  /// Internal node whose children are all terminals.
  bool is_preterminal(NodeId id) const;

  /// Node ids in pre-order (parents before children, left to right).
  const std::vector<NodeId>& preorder() const { return preorder_; }
  /// Node ids in post-order (children before parents, left to right).
  std::vector<NodeId> postorder() const;

  /// Terminal node ids in surface order.
  const std::vector<NodeId>& terminal_nodes() const { return terminals_; }
  /// Leaves (terminals and frontier nodes) in surface order.
  std::vector<NodeId> leaves(NodeId from) const;
  std::vector<NodeId> leaves() const { return leaves(root_); }

  bool is_ancestor_or_self(NodeId ancestor, NodeId node) const;

  /// Deep copy of the subtree at `id` as a new finalized tree.
  Tree subtree(NodeId id) const;

  friend bool operator==(const Tree& a, const Tree& b);

 private:
  void require(NodeId id) const;

  std::vector<Node> nodes_;
  NodeId root_ = kNoNode;
  std::vector<NodeId> preorder_;
  std::vector<NodeId> terminals_;
};

/// Parses a single bracketed tree such as "[NP [NNS records]]".
/// Bare tokens are terminals.
Tree parse_bracketed(std::string_view text);

/// Parses an elementary tree. Bare tokens of the form LABEL#i (1-based) or
/// LABEL#e are frontier non-terminals; other bare tokens are terminals. A
/// single frontier token with no brackets is a valid elementary tree.
Tree parse_elementary(std::string_view text);

/// Canonical bracketed form with single spaces. Frontier leaves are written
/// as LABEL#i / LABEL#e unless `with_links` is false, in which case the bare
/// label is written.
std::string serialize(const Tree& tree, bool with_links = true);
std::string serialize(const Tree& tree, NodeId from, bool with_links = true);

/// Left-to-right terminal tokens. Frontier leaves are excluded.
std::vector<std::string> yield_tokens(const Tree& tree);
std::vector<std::string> yield_tokens(const Tree& tree, NodeId from);

/// Inclusive token span of the subtree, or nullopt for subtrees without
/// terminals.
std::optional<Span> yield_span(const Tree& tree, NodeId node);

/// Treebank file: one tree per line, '#' comments and blank lines skipped.
std::vector<Tree> read_treebank(const std::string& path);
std::vector<Tree> read_treebank_stream(std::istream& in, const std::string& name = "<stream>");
void write_treebank(std::ostream& out, const std::vector<Tree>& trees);

std::string join(const std::vector<std::string>& tokens, std::string_view sep = " ");
std::vector<std::string> split_ws(std::string_view text);

}  // namespace treeduce
