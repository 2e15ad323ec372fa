#include <doctest.h>

#include <sstream>

#include "fixtures.hpp"
#include "generators.hpp"
#include "treeduce/eval.hpp"
#include "treeduce/losses.hpp"

using namespace treeduce;

namespace {

std::optional<Tokens> toks(const std::string& s) { return split_ws(s); }

}  // namespace

TEST_CASE("compression rate") {
  Tree x = parse_bracketed(fixtures::kLongSource);
  Tree y = parse_bracketed(fixtures::kShortTarget);
  CHECK(compression_rate(yield_tokens(x).size(), yield_tokens(y).size()) == 40.0);
  CHECK(compression_rate(7, 7) == 100.0);
  CHECK(compression_rate(7, 0) == 0.0);
  CHECK_THROWS_AS(compression_rate(0, 0), std::invalid_argument);
}

TEST_CASE("worked prediction scores") {
  std::vector<std::optional<Tokens>> pred{toks("what ones are involved")}, ref{toks("what records are involved")};
  EvalReport r = evaluate_corpus(pred, ref);
  REQUIRE(r.sentences.size() == 1);
  CHECK(r.edit == 2.0);
  CHECK(r.f1_loss == 0.25);
  CHECK(r.hamming == 1.0);
  CHECK_FALSE(r.corpus_rate);
}

TEST_CASE("perfect predictions") {
  std::vector<std::optional<Tokens>> src{toks("a b c d"), toks("e f")}, ref{toks("a c"), toks("f")};
  EvalReport r = evaluate_corpus(ref, ref, src);
  CHECK(r.hamming == 0.0);
  CHECK(r.edit == 0.0);
  CHECK(r.f1_loss == 0.0);
  REQUIRE(r.corpus_rate);
  CHECK(*r.corpus_rate == 50.0);
  CHECK(*r.reference_rate == 50.0);
}

TEST_CASE("corpus means are the means of sentence scores") {
  gen::Rng rng(51);
  std::vector<std::string> words{"a", "b", "c", "d"};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::optional<Tokens>> src, pred, ref;
    int n = gen::uniform(rng, 1, 8);
    for (int i = 0; i < n; ++i) {
      Tokens s(static_cast<std::size_t>(gen::uniform(rng, 1, 6)));
      for (auto& w : s) w = gen::pick(rng, words);
      Tokens p, q;
      for (const auto& w : s) {
        if (gen::uniform(rng, 0, 1)) p.push_back(w);
        if (gen::uniform(rng, 0, 1)) q.push_back(w);
      }
      src.push_back(s);
      pred.push_back(p);
      ref.push_back(q);
    }
    if (gen::uniform(rng, 0, 3) == 0) pred[0] = std::nullopt;
    EvalReport r = evaluate_corpus(pred, ref, src);
    double h = 0, e = 0, f = 0;
    std::size_t s_total = 0, p_total = 0;
    for (const auto& s : r.sentences) {
      std::size_t i = s.line - 1;
      h += compute_loss(LossReference({LossKind::hamming_token, 1.0}, *ref[i]), *pred[i]);
      e += compute_loss(LossReference({LossKind::edit, 1.0}, *ref[i]), *pred[i]);
      f += compute_loss(LossReference({LossKind::f1, 1.0}, *ref[i]), *pred[i]);
      s_total += src[i]->size();
      p_total += pred[i]->size();
    }
    CHECK(r.sentences.size() + r.skipped == static_cast<std::size_t>(n));
    if (r.sentences.empty()) continue;
    double k = static_cast<double>(r.sentences.size());
    CHECK(r.hamming == doctest::Approx(h / k));
    CHECK(r.edit == doctest::Approx(e / k));
    CHECK(r.f1_loss == doctest::Approx(f / k));
    CHECK(*r.corpus_rate == doctest::Approx(100.0 * static_cast<double>(p_total) / static_cast<double>(s_total)));
  }
}

TEST_CASE("token lines accept trees and plain text") {
  std::istringstream in("# comment\n[S [NP [NN dog]] [VP [VB ran]]]\nthe dog ran\n[S [NP\n\nthe cat\t[S [NN cat]]\n");
  auto lines = read_token_lines(in);
  REQUIRE(lines.size() == 5);
  CHECK(*lines[0] == Tokens{"dog", "ran"});
  CHECK(*lines[1] == Tokens{"the", "dog", "ran"});
  CHECK_FALSE(lines[2]);
  CHECK(lines[3]->empty());
  CHECK(*lines[4] == Tokens{"the", "cat"});

  std::vector<std::optional<Tokens>> a{toks("x")}, b{toks("x"), toks("y")};
  CHECK_THROWS_AS(evaluate_corpus(a, b), std::invalid_argument);

  std::ostringstream out;
  write_report_tsv(out, evaluate_corpus(a, a));
  CHECK(out.str() == "pairs\tskipped\tcompression_rate\treference_rate\thamming_token\tedit\tf1_loss\n"
                     "1\t0\tNA\tNA\t0.000000\t0.000000\t0.000000\n");
  CHECK_THROWS_AS(loss_items(LossKind::hamming_cfg, Tokens{"a"}), std::invalid_argument);
}
