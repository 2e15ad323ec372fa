#include <doctest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "generators.hpp"
#include "treeduce/losses.hpp"

using namespace treeduce;

namespace {

const char* kPredicted = "[S [WHNP [WP what]] [S [NP [NNS ones]] [VP [VBP are] [VBN involved]]]]";

Tree reference() { return parse_bracketed(fixtures::kShortTarget); }
Tree predicted() { return parse_bracketed(kPredicted); }

LossReference ref_for(LossKind kind, double scale = 1.0) { return LossReference({kind, scale}, reference()); }

LossArgs args_for(const LossReference& ref, const Tree& t) {
  LossArgs a = init_args(ref);
  accumulate(ref, a, loss_items(ref.spec().kind, t));
  return a;
}

Tree flat(const std::vector<std::string>& words) {
  std::string s = "[S";
  for (const auto& w : words) s += " [X " + w + "]";
  return parse_bracketed(s + "]");
}

// Bag intersection size via sorted ranges.
int overlap(std::vector<std::string> a, std::vector<std::string> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<std::string> common;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
  return static_cast<int>(common.size());
}

std::vector<std::string> random_words(gen::Rng& rng, int max_len) {
  static const std::vector<std::string> vocab{"a", "b", "c", "d", "e"};
  std::vector<std::string> out(static_cast<std::size_t>(gen::uniform(rng, 1, max_len)));
  for (auto& w : out) w = gen::pick(rng, vocab);
  return out;
}

}  // namespace

TEST_CASE("worked prediction: token Hamming") {
  LossReference ref = ref_for(LossKind::hamming_token);
  CHECK(ref.types() == std::vector<std::string>{"are", "involved", "records", "what"});
  CHECK(ref.length() == 4);
  LossArgs a = args_for(ref, predicted());
  CHECK(a.tp == 3);
  CHECK(a.fp == 1);
  CHECK(finalize(ref, a) == 1.0);
  CHECK(strata_key(ref, a) == "3,1");
  CHECK(strata_key(ref, init_args(ref)) == "0,0");
}

TEST_CASE("worked prediction: edit and F1") {
  LossReference edit = ref_for(LossKind::edit);
  LossArgs a = args_for(edit, predicted());
  LossArgs zero = init_args(edit);
  CHECK(zero.cells == std::vector<int>{0, 0, 0, 0, 0});
  // Cells follow the sorted inventory: are, involved, records, what, other.
  CHECK(a.cells == std::vector<int>{1, 1, 0, 1, 1});
  CHECK(finalize(edit, a) == 2.0);
  LossReference f1 = ref_for(LossKind::f1);
  CHECK(finalize(f1, args_for(f1, predicted())) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("worked prediction: ngram and production arguments") {
  LossReference ng = ref_for(LossKind::hamming_ngram);
  CHECK(ng.length() == 13);
  LossArgs a = args_for(ng, predicted());
  CHECK(a.tp == 7);
  CHECK(a.fp == 6);
  LossReference cfg = ref_for(LossKind::hamming_cfg);
  CHECK(cfg.length() == 10);
  LossArgs c = args_for(cfg, predicted());
  CHECK(c.tp == 7);
  CHECK(c.fp == 2);
  CHECK(finalize(cfg, c) == 3.0);
}

TEST_CASE("single items") {
  LossReference ref = ref_for(LossKind::hamming_token);
  LossArgs a = init_args(ref);
  accumulate(ref, a, std::string("ones"));
  CHECK(a.fp == 1);
  accumulate(ref, a, std::string("records"));
  CHECK(a.tp == 1);
}

TEST_CASE("reproducing the reference costs nothing") {
  for (LossKind k : {LossKind::hamming_token, LossKind::hamming_ngram, LossKind::hamming_cfg, LossKind::edit,
                     LossKind::f1, LossKind::zero})
    CHECK_MESSAGE(compute_loss(ref_for(k), reference()) == 0.0, loss_kind_name(k));
}

TEST_CASE("length penalty scale") {
  Tree shorter = parse_bracketed("[S [WHNP [WP what]]]");
  CHECK(compute_loss(ref_for(LossKind::hamming_token, 1.0), shorter) == 3.0);
  CHECK(compute_loss(ref_for(LossKind::hamming_token, 0.5), shorter) == 1.5);
  CHECK(compute_loss(ref_for(LossKind::hamming_token, 0.0), shorter) == 0.0);
  CHECK_THROWS_AS(ref_for(LossKind::hamming_token, -1.0), std::invalid_argument);
}

TEST_CASE("loss names") {
  CHECK(parse_loss_kind("edit") == LossKind::edit);
  CHECK(loss_kind_name(parse_loss_kind("hamming-cfg")) == "hamming-cfg");
  CHECK_THROWS_AS(parse_loss_kind("bleu"), std::invalid_argument);
}

TEST_CASE("ngram items include the boundaries") {
  CHECK(ngram_items({"a"}) == std::vector<std::string>{"a", "<s> a", "a </s>", "<s> a </s>"});
  CHECK(ngram_items({}) == std::vector<std::string>{});
}

TEST_CASE("losses agree with bag recounts from strings") {
  gen::Rng rng(21);
  for (int i = 0; i < 1000; ++i) {
    auto r = random_words(rng, 6);
    auto p = random_words(rng, 7);
    Tree rt = flat(r), pt = flat(p);
    const int m = overlap(p, r);
    const double pr = static_cast<double>(p.size()), rr = static_cast<double>(r.size());

    int fp = 0;
    for (const auto& w : p) fp += std::find(r.begin(), r.end(), w) == r.end();
    double hamming = fp + std::max(rr - pr, 0.0);
    CHECK(compute_loss(LossReference({LossKind::hamming_token, 1.0}, rt), pt) == hamming);

    CHECK(compute_loss(LossReference({LossKind::edit, 1.0}, rt), pt) == pr + rr - 2 * m);

    double prec = m / pr, rec = m / rr;
    double f1 = prec + rec == 0 ? 1.0 : 1.0 - 2 * prec * rec / (prec + rec);
    CHECK(compute_loss(LossReference({LossKind::f1, 1.0}, rt), pt) == doctest::Approx(f1));

    std::vector<std::string> sp = p, sr = r;
    std::sort(sp.begin(), sp.end());
    std::sort(sr.begin(), sr.end());
    bool same_bag = sp == sr;
    CHECK((compute_loss(LossReference({LossKind::edit, 1.0}, rt), pt) == 0.0) == same_bag);
    CHECK((compute_loss(LossReference({LossKind::f1, 1.0}, rt), pt) == 0.0) == same_bag);
  }
}

TEST_CASE("chunked accumulation equals the batch count") {
  gen::Rng rng(22);
  for (LossKind k : {LossKind::hamming_token, LossKind::hamming_ngram, LossKind::edit, LossKind::f1}) {
    for (int i = 0; i < 200; ++i) {
      Tree rt = flat(random_words(rng, 6));
      Tree pt = flat(random_words(rng, 8));
      LossReference ref({k, 1.0}, rt);
      auto items = loss_items(k, pt);
      LossArgs whole = args_for(ref, pt);
      // Random split into chunks, each with its own arguments.
      LossArgs merged = init_args(ref);
      std::size_t at = 0;
      while (at < items.size()) {
        std::size_t len = static_cast<std::size_t>(gen::uniform(rng, 1, 3));
        LossArgs part = init_args(ref);
        for (std::size_t j = at; j < std::min(items.size(), at + len); ++j) accumulate(ref, part, items[j]);
        merged = combine(ref, merged, part);
        at += len;
      }
      REQUIRE(merged == whole);
      CHECK(finalize(ref, merged) == finalize(ref, whole));
      CHECK(finalize(ref, whole) >= 0.0);
      CHECK(partial_loss(ref, whole) <= finalize(ref, whole) + 1e-12);
    }
  }
}

TEST_CASE("equal strata keys give equal losses") {
  gen::Rng rng(23);
  for (LossKind k : {LossKind::hamming_token, LossKind::edit, LossKind::f1}) {
    Tree rt = flat({"a", "b", "b", "c"});
    LossReference ref({k, 1.0}, rt);
    std::map<std::string, double> seen;
    for (int i = 0; i < 500; ++i) {
      Tree pt = flat(random_words(rng, 6));
      LossArgs a = args_for(ref, pt);
      double loss = finalize(ref, a);
      auto [it, fresh] = seen.emplace(strata_key(ref, a), loss);
      if (!fresh) CHECK(it->second == loss);
    }
    CHECK(seen.size() > 5);
  }
}
