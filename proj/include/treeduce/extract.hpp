#pragma once

#include <stdexcept>
#include <vector>

#include "treeduce/alignment.hpp"
#include "treeduce/rule.hpp"

namespace treeduce {

class ExtractionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExtractOptions {
  /// Number of nested alignment matches that may be skipped along one path.
  int depth = 0;
  /// Caps for specialized rules. Minimal rules are never pruned.
  int max_vars = 5;
  int max_nodes = 15;
};

/// The pairing used to anchor rules: each source node paired with at most one
/// target node. Nodes sharing one aligned link set form nested chains, which
/// are paired from the bottom up; surplus source nodes at the top of a chain
/// share the topmost target, surplus target nodes stay unpaired.
std::vector<NodeId> pair_constituents(const Tree& x, const Tree& y, const ConstituentAlignment& c);

/// Minimal rules, one occurrence per anchoring source node, in source
/// pre-order. Throws ExtractionError if the roots are not aligned.
std::vector<SyncRule> extract_minimal(const Tree& x, const Tree& y, const ConstituentAlignment& c);

/// Minimal rules plus every rule obtained by skipping up to `depth` nested
/// alignment matches, subject to the size caps. Each rule is listed once per
/// anchor at which it arises.
std::vector<SyncRule> extract_specialized(const Tree& x, const Tree& y, const ConstituentAlignment& c,
                                          const ExtractOptions& options);

}  // namespace treeduce
