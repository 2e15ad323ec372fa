#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "treeduce/tree.hpp"

namespace treeduce {

/// Word alignment between source and target token positions (0-based).
/// Pairs are kept sorted and unique.
struct WordAlignment {
  std::vector<std::pair<int, int>> pairs;

  void add(int s, int t);
  bool empty() const { return pairs.empty(); }
  friend bool operator==(const WordAlignment&, const WordAlignment&) = default;
};

class AlignmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Pharaoh format: "s-t s-t ...".
WordAlignment parse_alignment(const std::string& line);
std::string format_alignment(const WordAlignment& a);

/// Throws AlignmentError if any index falls outside the yields.
void check_alignment(const WordAlignment& a, std::size_t source_len, std::size_t target_len);

/// Deletion-only alignment: each target token is matched, in order, to the
/// leftmost feasible source token. Returns nullopt when the target is not a
/// subsequence of the source.
std::optional<WordAlignment> auto_align_deletion(const std::vector<std::string>& source,
                                                 const std::vector<std::string>& target);

/// Node pairs (source, target) whose yields are aligned with each other and
/// with nothing outside. Sorted by (source, target).
struct ConstituentAlignment {
  std::vector<std::pair<NodeId, NodeId>> pairs;

  bool contains(NodeId s, NodeId t) const;
  std::vector<NodeId> targets_of(NodeId s) const;
};

ConstituentAlignment constituent_align(const Tree& source, const Tree& target,
                                       const WordAlignment& alignment);

/// The alignment links (indices into alignment.pairs) whose endpoint falls
/// inside the node's yield, for every node of the tree. Terminals and
/// frontier nodes are included.
std::vector<std::vector<int>> node_links(const Tree& tree, const WordAlignment& alignment,
                                         bool source_side);

}  // namespace treeduce
