#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "treeduce/rule.hpp"

namespace treeduce {

struct GrammarEntry {
  RulePtr rule;
  long long freq = 0;
};

/// A set of synchronous rules without duplicates, indexed by the one-level
/// production at the root of alpha.
///
/// Adding a rule that is already present sums the frequencies and unions the
/// provenance flags. Lookups are const and safe to run concurrently.
class Grammar {
 public:
  /// Returns the index of the (possibly merged) entry.
  std::size_t add(const SyncRule& rule, long long freq = 1);
  void merge(const Grammar& other);

  std::size_t size() const { return entries_.size(); }
  const std::vector<GrammarEntry>& entries() const { return entries_; }
  const GrammarEntry& entry(std::size_t i) const { return entries_.at(i); }
  std::optional<std::size_t> find(const std::string& key) const;

  /// Entries whose alpha root production equals that of `node`. Full
  /// matching still needs match_source.
  const std::vector<std::size_t>& candidates(const Tree& tree, NodeId node) const;
  /// Entries whose alpha is rooted at `label`.
  std::vector<std::size_t> by_src_root(const std::string& label) const;

  /// Root symbols R_S and R_T. Empty means "take the source tree's root label".
  std::string src_root_symbol;
  std::string tgt_root_symbol;

 private:
  std::vector<GrammarEntry> entries_;
  std::unordered_map<std::string, std::size_t> by_key_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_signature_;
};

/// Keeps at most `k` rules per distinct alpha, by frequency with ties in
/// first-seen order. Rules flagged copy or delete always survive.
Grammar filter_grammar(const Grammar& g, std::size_t max_targets_per_source);

/// Grammar file: `X Y ||| alpha ||| gamma ||| links ||| provenance ||| freq`,
/// one rule per line, '#' comments allowed.
void write_grammar(std::ostream& out, const Grammar& g);
Grammar read_grammar(std::istream& in, const std::string& name = "<stream>");
Grammar load_grammar(const std::string& path);

}  // namespace treeduce
