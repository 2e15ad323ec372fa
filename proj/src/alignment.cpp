#include "treeduce/alignment.hpp"

#include <algorithm>
#include <charconv>
#include <map>

namespace treeduce {

void WordAlignment::add(int s, int t) {
  auto p = std::make_pair(s, t);
  auto it = std::lower_bound(pairs.begin(), pairs.end(), p);
  if (it == pairs.end() || *it != p) pairs.insert(it, p);
}

WordAlignment parse_alignment(const std::string& line) {
  WordAlignment a;
  for (const std::string& item : split_ws(line)) {
    auto dash = item.find('-');
    int s = -1, t = -1;
    bool ok = dash != std::string::npos;
    if (ok) {
      auto r1 = std::from_chars(item.data(), item.data() + dash, s);
      auto r2 = std::from_chars(item.data() + dash + 1, item.data() + item.size(), t);
      ok = r1.ec == std::errc() && r1.ptr == item.data() + dash && r2.ec == std::errc() &&
           r2.ptr == item.data() + item.size() && s >= 0 && t >= 0;
    }
    if (!ok) throw AlignmentError("malformed alignment pair '" + item + "'");
    a.add(s, t);
  }
  return a;
}

std::string format_alignment(const WordAlignment& a) {
  std::string out;
  for (const auto& [s, t] : a.pairs) {
    if (!out.empty()) out += ' ';
    out += std::to_string(s) + "-" + std::to_string(t);
  }
  return out;
}

void check_alignment(const WordAlignment& a, std::size_t source_len, std::size_t target_len) {
  for (const auto& [s, t] : a.pairs) {
    if (s < 0 || static_cast<std::size_t>(s) >= source_len || t < 0 ||
        static_cast<std::size_t>(t) >= target_len)
      throw AlignmentError("alignment pair " + std::to_string(s) + "-" + std::to_string(t) +
                           " out of range for " + std::to_string(source_len) + "x" +
                           std::to_string(target_len) + " tokens");
  }
}

std::optional<WordAlignment> auto_align_deletion(const std::vector<std::string>& source,
                                                 const std::vector<std::string>& target) {
  // Greedy leftmost matching is a valid subsequence embedding whenever one
  // exists, and every embedding deletes exactly |source|-|target| tokens.
  WordAlignment a;
  std::size_t s = 0;
  for (std::size_t t = 0; t < target.size(); ++t) {
    while (s < source.size() && source[s] != target[t]) ++s;
    if (s == source.size()) return std::nullopt;
    a.pairs.emplace_back(static_cast<int>(s), static_cast<int>(t));
    ++s;
  }
  return a;
}

bool ConstituentAlignment::contains(NodeId s, NodeId t) const {
  return std::binary_search(pairs.begin(), pairs.end(), std::make_pair(s, t));
}

std::vector<NodeId> ConstituentAlignment::targets_of(NodeId s) const {
  std::vector<NodeId> out;
  auto it = std::lower_bound(pairs.begin(), pairs.end(), std::make_pair(s, NodeId{-1}));
  for (; it != pairs.end() && it->first == s; ++it) out.push_back(it->second);
  return out;
}

std::vector<std::vector<int>> node_links(const Tree& tree, const WordAlignment& alignment,
                                         bool source_side) {
  std::vector<std::vector<int>> links(tree.size());
  for (NodeId id = 0; id < static_cast<NodeId>(tree.size()); ++id) {
    const Span& span = tree.node(id).span;
    if (span.empty()) continue;
    for (std::size_t k = 0; k < alignment.pairs.size(); ++k) {
      int pos = source_side ? alignment.pairs[k].first : alignment.pairs[k].second;
      if (span.contains(pos)) links[id].push_back(static_cast<int>(k));
    }
  }
  return links;
}

ConstituentAlignment constituent_align(const Tree& source, const Tree& target,
                                       const WordAlignment& alignment) {
  // A pair is aligned iff both sides cover exactly the same non-empty set of
  // alignment links: any link with one endpoint inside and one outside is a
  // crossing link.
  auto src = node_links(source, alignment, true);
  auto tgt = node_links(target, alignment, false);

  std::map<std::vector<int>, std::vector<NodeId>> by_links;
  for (NodeId t = 0; t < static_cast<NodeId>(target.size()); ++t)
    if (!target.is_terminal(t) && !tgt[t].empty()) by_links[tgt[t]].push_back(t);

  ConstituentAlignment out;
  for (NodeId s = 0; s < static_cast<NodeId>(source.size()); ++s) {
    if (source.is_terminal(s) || src[s].empty()) continue;
    auto it = by_links.find(src[s]);
    if (it == by_links.end()) continue;
    for (NodeId t : it->second) out.pairs.emplace_back(s, t);
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  return out;
}

}  // namespace treeduce
