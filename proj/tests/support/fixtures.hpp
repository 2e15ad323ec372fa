#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "treeduce/alignment.hpp"
#include "treeduce/derivation.hpp"
#include "treeduce/grammar.hpp"
#include "treeduce/tree.hpp"

namespace treeduce::fixtures {

/// The worked compression pair: a long question and its compression.
inline const char* kLongSource =
    "[S [SBAR [WHNP [RB exactly] [WP what]] [S [NP [NNS records]] [VP [VBD made] [NP [PRP it]]]]] "
    "[CC and] [SBAR [WHNP [WP which]] [S [NP [NNS ones]] [VP [VBP are] [VP [VBN involved]]]]]]";
inline const char* kShortTarget =
    "[S [WHNP [WP what]] [S [NP [NNS records]] [VP [VBP are] [VP [VBN involved]]]]]";
inline const char* kAlignment = "1-0 2-1 8-2 9-3";

struct RuleText {
  std::string x, y, alpha, gamma;
};

/// Minimal rules of the worked pair, written by hand.
inline const std::vector<RuleText>& minimal_rules() {
  static const std::vector<RuleText> rules = {
      {"S", "S", "[S [SBAR WHNP#1 S#2] CC#e SBAR#3]", "[S WHNP#1 [S NP#2 VP#3]]"},
      {"WHNP", "WHNP", "[WHNP RB#e WP#1]", "[WHNP WP#1]"},
      {"WP", "WP", "[WP what]", "[WP what]"},
      {"S", "NP", "[S NP#1 VP#e]", "NP#1"},
      {"NP", "NP", "[NP NNS#1]", "[NP NNS#1]"},
      {"NNS", "NNS", "[NNS records]", "[NNS records]"},
      {"SBAR", "VP", "[SBAR WHNP#e S#1]", "VP#1"},
      {"S", "VP", "[S NP#e VP#1]", "VP#1"},
      {"VP", "VP", "[VP VBP#1 VP#2]", "[VP VBP#1 VP#2]"},
      {"VBP", "VBP", "[VBP are]", "[VBP are]"},
      {"VP", "VP", "[VP VBN#1]", "[VP VBN#1]"},
      {"VBN", "VBN", "[VBN involved]", "[VBN involved]"},
  };
  return rules;
}

/// The toy grammar: the minimal rules with the conjunction kept lexical, in
/// the order the worked derivation numbers them.
inline const std::vector<RuleText>& toy_grammar_rules() {
  static const std::vector<RuleText> rules = {
      {"WHNP", "WHNP", "[WHNP RB#e WP#1]", "[WHNP WP#1]"},
      {"S", "NP", "[S NP#1 VP#e]", "NP#1"},
      {"S", "VP", "[S NP#e VP#1]", "VP#1"},
      {"SBAR", "VP", "[SBAR WHNP#e S#1]", "VP#1"},
      {"S", "S", "[S [SBAR WHNP#1 S#2] [CC and] SBAR#3]", "[S WHNP#1 [S NP#2 VP#3]]"},
      {"WP", "WP", "[WP what]", "[WP what]"},
      {"NP", "NP", "[NP NNS#1]", "[NP NNS#1]"},
      {"NNS", "NNS", "[NNS records]", "[NNS records]"},
      {"VP", "VP", "[VP VBP#1 VP#2]", "[VP VBP#1 VP#2]"},
      {"VBP", "VBP", "[VBP are]", "[VBP are]"},
      {"VP", "VP", "[VP VBN#1]", "[VP VBN#1]"},
      {"VBN", "VBN", "[VBN involved]", "[VBN involved]"},
  };
  return rules;
}

/// Order in which the toy grammar's rules (1-based) rewrite the worked pair,
/// depth first.
inline const std::vector<int>& toy_derivation_order() {
  static const std::vector<int> order = {5, 1, 6, 2, 7, 8, 4, 3, 9, 10, 11, 12};
  return order;
}

inline Grammar toy_grammar() {
  Grammar g;
  for (const RuleText& r : toy_grammar_rules()) g.add(parse_rule(r.x, r.y, r.alpha, r.gamma, kExtracted), 1);
  return g;
}

inline std::string rule_key(const RuleText& r) {
  return parse_rule(r.x, r.y, r.alpha, r.gamma, kExtracted).key();
}

/// Builds a derivation by matching `rules` in depth-first order against the
/// source, starting at its root. Throws if a rule does not fit or rules are
/// left over.
inline Derivation replay(std::shared_ptr<const Tree> x, const std::vector<RulePtr>& rules) {
  Derivation d(x);
  std::size_t next = 0;
  auto step = [&](auto&& self, NodeId anchor) -> int {
    if (next >= rules.size()) throw std::runtime_error("ran out of rules");
    RulePtr r = rules[next++];
    auto b = match_source(*r, *x, anchor);
    if (!b) throw std::runtime_error("rule " + r->key() + " does not match");
    int id = d.add(r, anchor);
    std::vector<int> children;
    for (NodeId v : b->vars) children.push_back(self(self, v));
    d.steps()[static_cast<std::size_t>(id)].children = children;
    return id;
  };
  step(step, x->root());
  if (next != rules.size()) throw std::runtime_error("unused rules");
  return d;
}

/// The worked derivation under the toy grammar.
inline Derivation toy_derivation() {
  auto x = std::make_shared<const Tree>(parse_bracketed(kLongSource));
  std::vector<RulePtr> rules;
  for (int i : toy_derivation_order()) {
    const RuleText& t = toy_grammar_rules()[static_cast<std::size_t>(i - 1)];
    rules.push_back(std::make_shared<const SyncRule>(parse_rule(t.x, t.y, t.alpha, t.gamma, kExtracted)));
  }
  return replay(x, rules);
}

}  // namespace treeduce::fixtures
