#pragma once

// Synthetic training corpora.

#include <string>
#include <utility>
#include <vector>

#include "generators.hpp"
#include "treeduce/extract.hpp"
#include "treeduce/grammar.hpp"

namespace treeduce::corpus {

struct Corpus {
  std::vector<std::pair<Tree, Tree>> pairs;
  Grammar grammar;
};

/// Deletion pairs whose words are unique to each pair, with the grammar of
/// their minimal rules. Every lexical rule then belongs to one pair, so each
/// gold derivation owns rule identity features no other pair uses.
inline Corpus separable(gen::Rng& rng, std::size_t n, int max_depth = 3) {
  Corpus c;
  while (c.pairs.size() < n) {
    gen::TreeShape shape;
    shape.max_depth = max_depth;
    shape.words.clear();
    for (int k = 0; k < 6; ++k) shape.words.push_back("p" + std::to_string(c.pairs.size()) + "w" + std::to_string(k));
    Tree x = gen::random_tree(rng, shape);
    Tree y = gen::random_deletion(rng, x, 0.3);
    auto a = auto_align_deletion(yield_tokens(x), yield_tokens(y));
    if (!a) continue;
    std::vector<SyncRule> rules;
    try {
      rules = extract_minimal(x, y, constituent_align(x, y, *a));
    } catch (const ExtractionError&) {
      continue;
    }
    for (const auto& r : rules) c.grammar.add(r);
    c.pairs.emplace_back(std::move(x), std::move(y));
  }
  return c;
}

}  // namespace treeduce::corpus
