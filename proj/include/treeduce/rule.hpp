#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "treeduce/tree.hpp"

namespace treeduce {

/// Where a rule came from. A rule may carry several flags after merging
/// (e.g. a retain-all deletion rule is also the copy rule).
enum Provenance : unsigned {
  kExtracted = 1u << 0,
  kCopy = 1u << 1,
  kDelete = 1u << 2,
};

std::string provenance_string(unsigned flags);
unsigned parse_provenance(const std::string& text);

class RuleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A synchronous production <X, Y> -> <alpha, gamma, ~>.
///
/// Links are carried on frontier nodes: an alpha frontier holds a variable
/// index or kEpsilon, a gamma frontier always holds a variable index. Variables
/// are numbered in alpha's left-to-right frontier order, so two rules are
/// structurally equal iff their keys are equal.
class SyncRule {
 public:
  /// Validates the pairing and renumbers variables canonically.
  SyncRule(Tree alpha, Tree gamma, unsigned provenance);

  const Tree& alpha() const { return alpha_; }
  const Tree& gamma() const { return gamma_; }
  const std::string& src_root() const { return alpha_.label(alpha_.root()); }
  const std::string& tgt_root() const { return gamma_.label(gamma_.root()); }
  unsigned provenance() const { return provenance_; }
  void set_provenance(unsigned p) { provenance_ = p; }

  int num_vars() const { return static_cast<int>(alpha_vars_.size()); }
  /// Alpha frontier node for each variable.
  const std::vector<NodeId>& alpha_vars() const { return alpha_vars_; }
  /// Gamma frontier node for each variable.
  const std::vector<NodeId>& gamma_vars() const { return gamma_vars_; }
  /// Alpha frontier leaves in surface order (variables and epsilon).
  const std::vector<NodeId>& alpha_frontier() const { return alpha_frontier_; }

  /// "X Y ||| alpha ||| gamma" with co-indexed frontiers.
  const std::string& key() const { return key_; }
  std::string alpha_string() const { return serialize(alpha_); }
  std::string gamma_string() const { return serialize(gamma_); }
  /// Space-separated "i-j" pairs from alpha frontier ordinal to gamma
  /// frontier ordinal, 'e' for epsilon.
  std::string links_string() const;

 private:
  Tree alpha_;
  Tree gamma_;
  unsigned provenance_;
  std::vector<NodeId> alpha_vars_;
  std::vector<NodeId> gamma_vars_;
  std::vector<NodeId> alpha_frontier_;
  std::string key_;
};

using RulePtr = std::shared_ptr<const SyncRule>;

/// "X Y ||| alpha ||| gamma" parsed into a rule (provenance given separately).
SyncRule parse_rule(const std::string& x, const std::string& y, const std::string& alpha,
                    const std::string& gamma, unsigned provenance);

/// Result of matching an elementary tree against a full tree.
struct Binding {
  /// Tree node bound to each variable.
  std::vector<NodeId> vars;
  /// Tree nodes bound to epsilon frontiers (deleted subtrees).
  std::vector<NodeId> deleted;
};

/// Matches alpha against the source subtree rooted at `node`.
std::optional<Binding> match_source(const SyncRule& rule, const Tree& tree, NodeId node);

/// Matches gamma against a target subtree rooted at `node`.
std::optional<Binding> match_target(const SyncRule& rule, const Tree& tree, NodeId node);

/// One-level production signature used to index rules: the label followed by
/// child labels, terminals prefixed by a quote.
std::string production_signature(const Tree& tree, NodeId node);

}  // namespace treeduce
