#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "treeduce/decoder.hpp"
#include "treeduce/synth.hpp"

using namespace treeduce;

namespace {

std::shared_ptr<const Tree> tree(const std::string& s) { return std::make_shared<const Tree>(parse_bracketed(s)); }

double model_score(const Derivation& d, const WeightVector& w, const NgramModel& lm) {
  return w.dot(derivation_features(d, lm));
}

}  // namespace

TEST_CASE("cube queue pops the corner first and never rises") {
  CubeQueue q;
  q.add_lattice(1.0, {{5.0}});
  auto item = q.pop();
  CHECK(item.priority == 6.0);
  CHECK(item.index == std::vector<std::size_t>{0});
  CHECK(q.empty());

  gen::Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    CubeQueue cq;
    std::vector<double> exhaustive;
    int lattices = gen::uniform(rng, 1, 3);
    for (int l = 0; l < lattices; ++l) {
      double base = gen::uniform(rng, -5, 5);
      std::vector<std::vector<double>> dims(static_cast<std::size_t>(gen::uniform(rng, 0, 3)));
      for (auto& d : dims) {
        d.resize(static_cast<std::size_t>(gen::uniform(rng, 1, 4)));
        for (auto& v : d) v = gen::uniform(rng, -10, 10);
        std::sort(d.rbegin(), d.rend());
      }
      // Exhaustive sums for the oracle.
      std::vector<double> sums{base};
      for (const auto& d : dims) {
        std::vector<double> next;
        for (double s : sums)
          for (double v : d) next.push_back(s + v);
        sums = next;
      }
      exhaustive.insert(exhaustive.end(), sums.begin(), sums.end());
      cq.add_lattice(base, dims);
    }
    std::sort(exhaustive.rbegin(), exhaustive.rend());
    std::vector<double> popped;
    while (!cq.empty()) popped.push_back(cq.pop().priority);
    REQUIRE(popped == exhaustive);
  }
}

TEST_CASE("toy grammar with rule identity weights decodes the worked compression") {
  Grammar g = fixtures::toy_grammar();
  WeightVector w;
  for (const auto& e : g.entries())
    w.set("id.rule:" + e.rule->alpha_string() + " ||| " + e.rule->gamma_string(), 1.0);
  auto x = tree(fixtures::kLongSource);
  DecodeOptions opt;
  opt.synthesis = Synthesis::none;
  DecodeResult r = decode(x, g, w, nullptr, opt);
  CHECK(join(r.yield) == "what records are involved");
  CHECK(serialize(r.target) == fixtures::kShortTarget);
  CHECK(r.score == 12.0);
  CHECK(r.derivation.rule_sequence() == fixtures::toy_derivation().rule_sequence());

  // Exhaustive check over the toy grammar.
  NgramModel lm = train_toy({{"a"}}, 1);
  auto best = oracle::brute_force(g, x, "S", [&](const Derivation& d) { return model_score(d, w, lm); });
  CHECK(best.value == 12.0);
}

TEST_CASE("copy rules alone reproduce the input") {
  gen::Rng rng(32);
  for (int i = 0; i < 200; ++i) {
    auto x = std::make_shared<const Tree>(gen::random_tree(rng));
    WeightVector w;
    std::uniform_real_distribution<double> u(-2, 2);
    for (const auto& r : synthesize_copy_rules(*x))
      for (const auto& [id, v] : rule_features(r, *x, x->root()).entries()) w.set(id, u(rng));
    DecodeOptions opt;
    opt.synthesis = Synthesis::copy;
    DecodeResult r = decode(x, Grammar{}, w, nullptr, opt);
    REQUIRE(r.target == *x);
  }
}

TEST_CASE("uncoverable input names the node") {
  auto x = tree("[S [NP [NN dog]] [VP [VB ran]]]");
  DecodeOptions opt;
  opt.synthesis = Synthesis::none;
  CHECK_THROWS_WITH_AS(decode(x, Grammar{}, WeightVector{}, nullptr, opt), doctest::Contains("NN"), DecodeError);
  Grammar g;
  g.add(parse_rule("NN", "NN", "[NN dog]", "[NN dog]", kCopy));
  CHECK_THROWS_WITH_AS(decode(x, g, WeightVector{}, nullptr, opt), doctest::Contains("source node NP"), DecodeError);
  opt.tgt_root = "FRAG";
  opt.synthesis = Synthesis::copy;
  CHECK_THROWS_WITH_AS(decode(x, g, WeightVector{}, nullptr, opt), doctest::Contains("FRAG"), DecodeError);
}

TEST_CASE("reordering rules are decoded with both contexts") {
  auto x = tree("[S [PP [IN of] [NP [NN tea]]] [VB drink]]");
  Grammar g;
  g.add(parse_rule("PP", "PP", "[PP IN#1 NP#2]", "[PP NP#2 IN#1]", kExtracted));
  NgramModel lm = train_toy({{"tea", "of", "drink"}}, 2);
  WeightVector w;
  w.set(feature::kLm, 1.0);
  w.set("id.rule:[PP IN#1 NP#2] ||| [PP NP#2 IN#1]", 5.0);
  DecodeResult r = decode(x, g, w, &lm, {});
  CHECK(join(r.yield) == "tea of drink");
  CHECK(r.score == doctest::Approx(model_score(r.derivation, w, lm)).epsilon(1e-9));
}

TEST_CASE("infinite beam matches exhaustive search") {
  gen::Rng rng(33);
  int checked = 0;
  while (checked < 30) {
    oracle::Instance in = oracle::random_instance(rng);
    Grammar full = coverage_grammar(*in.x, in.grammar, Synthesis::copy_delete);
    oracle::Enumerator e(full, *in.x);
    const std::string root = in.x->label(in.x->root());
    if (e.count(in.x->root(), root) > 1e4) continue;
    DecodeOptions opt;
    opt.beam = BeamSpec::infinite();
    DecodeResult r = decode(in.x, in.grammar, in.w, &in.lm, opt);
    auto best = oracle::brute_force(full, in.x, root, [&](const Derivation& d) { return model_score(d, in.w, in.lm); });
    REQUIRE(r.score == doctest::Approx(best.value).epsilon(1e-9));
    CHECK(model_score(r.derivation, in.w, in.lm) == doctest::Approx(r.score).epsilon(1e-9));
    CHECK(apply_derivation(r.derivation).first == *in.x);
    ++checked;
  }
}

TEST_CASE("loss augmented search matches exhaustive search") {
  gen::Rng rng(34);
  for (LossKind kind : {LossKind::hamming_token, LossKind::hamming_ngram, LossKind::hamming_cfg, LossKind::edit,
                        LossKind::f1}) {
    int checked = 0;
    while (checked < 10) {
      oracle::Instance in = oracle::random_instance(rng);
      Grammar full = coverage_grammar(*in.x, in.grammar, Synthesis::copy_delete);
      oracle::Enumerator e(full, *in.x);
      const std::string root = in.x->label(in.x->root());
      if (e.count(in.x->root(), root) > 3000) continue;
      LossReference ref({kind, 1.0}, in.reference);
      DecodeOptions opt;
      opt.beam = BeamSpec::infinite();
      DecodeResult r = loss_augmented_decode(in.x, ref, in.grammar, in.w, &in.lm, opt);
      auto objective = [&](const Derivation& d) {
        return compute_loss(ref, apply_derivation(d).second) + model_score(d, in.w, in.lm);
      };
      auto best = oracle::brute_force(full, in.x, root, objective);
      REQUIRE_MESSAGE(r.loss + r.score == doctest::Approx(best.value).epsilon(1e-9), loss_kind_name(kind));
      CHECK(compute_loss(ref, r.target) == doctest::Approx(r.loss).epsilon(1e-12));
      ++checked;
    }
  }
}

TEST_CASE("zero loss search equals plain decoding") {
  gen::Rng rng(35);
  for (int i = 0; i < 30; ++i) {
    oracle::Instance in = oracle::random_instance(rng);
    LossReference ref({LossKind::zero, 1.0}, in.reference);
    DecodeResult a = decode(in.x, in.grammar, in.w, &in.lm, {});
    DecodeResult b = loss_augmented_decode(in.x, ref, in.grammar, in.w, &in.lm, {});
    CHECK(a.yield == b.yield);
    CHECK(a.score == b.score);
    CHECK(a.derivation.rule_sequence() == b.derivation.rule_sequence());
  }
}

TEST_CASE("accumulated LM score equals whole-string rescoring") {
  gen::Rng rng(36);
  for (int i = 0; i < 100; ++i) {
    oracle::Instance in = oracle::random_instance(rng);
    DecodeResult r = decode(in.x, in.grammar, in.w, &in.lm, {});
    FeatureVector rules;
    for (const auto& s : r.derivation.steps()) rules.add(rule_features(*s.rule, *in.x, s.anchor));
    double lm_part = (r.score - in.w.dot(rules)) / in.w.get(feature::kLm);
    REQUIRE(lm_part == doctest::Approx(in.lm.score_sentence(r.yield)).epsilon(1e-6));
  }
}

TEST_CASE("loss augmented result beats the reference derivation") {
  gen::Rng rng(37);
  int checked = 0;
  for (int i = 0; i < 60; ++i) {
    oracle::Instance in = oracle::random_instance(rng);
    // The reference is reachable through the extracted grammar when it came
    // from the first compression.
    Grammar full = coverage_grammar(*in.x, in.grammar, Synthesis::copy_delete);
    oracle::Enumerator e(full, *in.x);
    const std::string root = in.x->label(in.x->root());
    if (e.count(in.x->root(), root) > 3000) continue;
    LossReference ref({LossKind::hamming_token, 1.0}, in.reference);
    double gold = -1e300;
    for (const auto& n : e.all(in.x->root(), root)) {
      Derivation d = oracle::to_derivation(in.x, *n);
      if (apply_derivation(d).second == in.reference) gold = std::max(gold, model_score(d, in.w, in.lm));
    }
    if (gold == -1e300) continue;
    DecodeResult r = loss_augmented_decode(in.x, ref, in.grammar, in.w, &in.lm, {});
    CHECK(r.loss + r.score >= gold - 1e-9);
    ++checked;
  }
  CHECK(checked >= 10);
}

TEST_CASE("wider beams never score lower on a fixed suite") {
  gen::Rng rng(38);
  for (int i = 0; i < 40; ++i) {
    oracle::Instance in = oracle::random_instance(rng);
    DecodeOptions narrow, wide, exact;
    narrow.beam = {2, 4};
    wide.beam = {20, 50};
    exact.beam = BeamSpec::infinite();
    double a = decode(in.x, in.grammar, in.w, &in.lm, narrow).score;
    double b = decode(in.x, in.grammar, in.w, &in.lm, wide).score;
    double c = decode(in.x, in.grammar, in.w, &in.lm, exact).score;
    CHECK(b >= a - 1e-9);
    CHECK(c >= b - 1e-9);
  }
}

TEST_CASE("synthesized rules merge with identical grammar rules") {
  auto x = tree("[S [NP [NN dog]] [VP [VB ran]]]");
  Grammar g;
  g.add(parse_rule("NN", "NN", "[NN dog]", "[NN dog]", kExtracted));
  Grammar full = coverage_grammar(*x, g, Synthesis::copy_delete);
  auto i = full.find(g.entry(0).rule->key());
  REQUIRE(i);
  CHECK(full.entry(*i).rule->provenance() == (kExtracted | kCopy));
  WeightVector w;
  w.set("type:extracted", 1.0);
  DecodeResult r = decode(x, g, w, nullptr, {});
  for (const auto& s : r.derivation.steps())
    if (s.rule->alpha_string() == "[NN dog]") CHECK(s.rule->provenance() == (kExtracted | kCopy));
  CHECK(parse_synthesis("copy") == Synthesis::copy);
  CHECK_THROWS_AS(parse_synthesis("all"), std::invalid_argument);
}
