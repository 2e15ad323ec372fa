#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "treeduce/grammar.hpp"
#include "treeduce/rule.hpp"

namespace treeduce {

class DerivationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DerivationStep {
  RulePtr rule;
  /// Source node matched by the rule's alpha.
  NodeId anchor = kNoNode;
  /// Step index rewriting each of the rule's variables.
  std::vector<int> children;
};

/// Rule applications tiling a source tree. Step 0 rewrites the root; every
/// other step is reached from exactly one parent variable.
class Derivation {
 public:
  Derivation() = default;
  explicit Derivation(std::shared_ptr<const Tree> source) : source_(std::move(source)) {}

  const Tree& source() const { return *source_; }
  const std::shared_ptr<const Tree>& source_ptr() const { return source_; }
  const std::vector<DerivationStep>& steps() const { return steps_; }
  std::vector<DerivationStep>& steps() { return steps_; }
  std::size_t size() const { return steps_.size(); }
  bool empty() const { return steps_.empty(); }

  int add(RulePtr rule, NodeId anchor, std::vector<int> children = {});

  /// Steps in depth-first order (parent, then children left to right in
  /// alpha order).
  std::vector<int> preorder() const;
  /// Serialized rule keys in depth-first order.
  std::vector<std::string> rule_sequence() const;

 private:
  std::shared_ptr<const Tree> source_;
  std::vector<DerivationStep> steps_;
};

/// Replays the derivation, rebuilding the source (deleted subtrees are copied
/// from the source tree) and producing the target. Throws DerivationError if
/// the steps do not tile the source or a variable is left dangling.
std::pair<Tree, Tree> apply_derivation(const Derivation& d);

/// Target terminals, in order.
std::vector<std::string> target_yield(const Derivation& d);

/// Picks a rule among `candidates` (grammar entry indices); `source_only`
/// means only the alpha side will be used, under an epsilon frontier. Return
/// nullopt to abandon sampling.
using RuleChooser =
    std::function<std::optional<std::size_t>(const std::vector<std::size_t>& candidates, bool source_only)>;

struct SampleOptions {
  /// Sampling fails once either tree exceeds this many nodes.
  std::size_t max_nodes = 2000;
  /// Start symbols; empty means the grammar's R_S / R_T.
  std::string src_root;
  std::string tgt_root;
};

/// Generates a tree pair top-down from (R_S, R_T), expanding frontiers in
/// pre-order. Throws DerivationError when a frontier has no applicable rule,
/// the chooser gives up, or the trees grow past the limit.
std::pair<Tree, Tree> sample_pair(const Grammar& g, const RuleChooser& chooser, const SampleOptions& options = {});

/// Uniformly random choice.
RuleChooser uniform_chooser(std::mt19937_64& rng);

}  // namespace treeduce
