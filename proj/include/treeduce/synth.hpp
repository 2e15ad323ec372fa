#pragma once

#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "treeduce/rule.hpp"

namespace treeduce {

/// Collins-style head percolation table.
class HeadTable {
 public:
  /// The bundled table.
  static const HeadTable& standard();
  /// Parses the text format documented in data/collins_heads.txt.
  static HeadTable parse(const std::string& text);

  /// Child indices ordered by head rank: the head found by one pass comes
  /// first, is removed, and the pass is repeated on the rest. Parents absent
  /// from the table rank rightmost-first, with one warning per label.
  std::vector<std::size_t> rank(const std::string& parent, const std::vector<std::string>& children) const;

  bool knows(const std::string& parent) const { return rules_.count(parent) > 0; }

 private:
  struct Entry {
    bool from_left = true;
    bool child_major = false;  // the "dis" variants
    std::vector<std::string> categories;
  };

  std::size_t find_head(const std::vector<Entry>& entries, const std::vector<std::string>& children) const;

  std::map<std::string, std::vector<Entry>> rules_;
  mutable std::mutex warn_mutex_;
  mutable std::set<std::string> warned_;

 public:
  HeadTable() = default;
  HeadTable(HeadTable&& other) noexcept : rules_(std::move(other.rules_)) {}
};

/// Convenience wrapper over HeadTable::standard().
std::vector<std::size_t> rank_heads(const std::string& parent, const std::vector<std::string>& children);

/// One copy rule per distinct production of `x`, in pre-order of first use.
std::vector<SyncRule> synthesize_copy_rules(const Tree& x);

/// Head-ranked deletion rules for every production of `x` whose children are
/// all non-terminals: retain the top 1, 2, ... k heads in surface order, plus
/// a parent-elided variant when a single child is retained. Distinct rules in
/// pre-order of first use.
std::vector<SyncRule> synthesize_delete_rules(const Tree& x, const HeadTable& heads = HeadTable::standard());

}  // namespace treeduce
