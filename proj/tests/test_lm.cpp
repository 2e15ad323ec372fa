#include <doctest.h>

#include <cmath>
#include <sstream>

#include "generators.hpp"
#include "treeduce/lm.hpp"

using namespace treeduce;

namespace {

const char* kBigram = R"(
\data\
ngram 1=4
ngram 2=2

\1-grams:
-1.0	<unk>
-0.5	a	-0.2
-0.6	b	-0.1
-99	<s>	-0.4

\2-grams:
-0.3	a b
-0.7	<s> a

\end\
)";

NgramModel bigram() {
  std::istringstream in(kBigram);
  return NgramModel::read_arpa(in);
}

std::vector<std::vector<std::string>> toy_corpus() {
  return {{"the", "cat", "sat"}, {"the", "dog", "sat"}, {"a", "cat", "ran"}, {"the", "cat", "ran", "off"}};
}

using V = std::vector<std::string>;

}  // namespace

TEST_CASE("stored ngrams read back exactly") {
  NgramModel m = bigram();
  CHECK(m.order() == 2);
  CHECK(m.logprob(V{"a", "b"}) == -0.3);
  CHECK(m.logprob(V{"b"}) == -0.6);
  CHECK(m.unigram("a") == -0.5);
}

TEST_CASE("unseen context backs off") {
  NgramModel m = bigram();
  // x is unknown, so its context weight is that of <unk>, which has none.
  CHECK(m.logprob(V{"x", "b"}) == -0.6);
  CHECK(m.logprob(V{"b", "a"}) == doctest::Approx(-0.1 + -0.5));
  CHECK(m.logprob(V{"a", "a"}) == doctest::Approx(-0.2 + -0.5));
  CHECK(m.logprob(V{"zzz"}) == -1.0);
  // Longer queries only use the last `order` tokens.
  CHECK(m.logprob(V{"q", "a", "b"}) == m.logprob(V{"a", "b"}));
}

TEST_CASE("padded sentence score") {
  NgramModel m = bigram();
  CHECK(m.pad(V{"a"}) == V{"<s>", "a", "</s>"});
  double expect = m.logprob(V{"<s>", "a"}) + m.logprob(V{"a", "b"}) + m.logprob(V{"b", "</s>"});
  CHECK(m.score_sentence(V{"a", "b"}) == doctest::Approx(expect));
  CHECK(m.logprob(V{"<s>", "a"}) == -0.7);
}

TEST_CASE("ARPA load errors carry line numbers") {
  auto load = [](const std::string& text) {
    std::istringstream in(text);
    return NgramModel::read_arpa(in, "lm.arpa");
  };
  auto message = [&](const std::string& text) {
    try {
      load(text);
    } catch (const LmError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("\\data\\\nngram 1=2\n\n\\1-grams:\n-1\t<unk>\n\n\\end\\\n").find("lm.arpa:") == 0);
  CHECK(message("\\data\\\nngram 1=1\n\n\\1-grams:\n-1\ta\n\\end\\\n").find("<unk>") != std::string::npos);
  CHECK(message("\\data\\\nngram 1=1\n\n\\1-grams:\nfoo\t<unk>\n\\end\\\n").find("lm.arpa:5") == 0);
  CHECK(message("\\data\\\nngram 1=1\n\n\\1-grams:\n-1\t<unk>\n").find("missing") != std::string::npos);
  CHECK(message("\\data\\\nngram 1=1\n\\2-grams:\n").find("lm.arpa:3") == 0);
  CHECK_NOTHROW(load("\\data\\\nngram 1=1\n\n\\1-grams:\n-1\t<unk>\n\\end\\\n"));
}

TEST_CASE("unigram toy model by hand") {
  NgramModel m = train_toy({{"a", "b"}}, 1);
  // Three events (a, b, </s>), three types: lambda = 0.75 * 3 / 3.
  double uniform = 0.75 / 4.0;
  double seen = 0.25 / 3.0 + uniform;
  CHECK(m.unigram("a") == doctest::Approx(std::log10(seen)));
  CHECK(m.unigram("b") == doctest::Approx(std::log10(seen)));
  CHECK(m.unigram("</s>") == doctest::Approx(std::log10(seen)));
  CHECK(m.unigram("<unk>") == doctest::Approx(std::log10(uniform)));
  CHECK(3 * seen + uniform == doctest::Approx(1.0));
  // Order 1 ignores the context.
  CHECK(m.logprob(V{"b", "a"}) == m.unigram("a"));
  CHECK(m.logprob(V{"zz", "a"}) == m.unigram("a"));
}

TEST_CASE("empty corpus is rejected") {
  CHECK_THROWS_AS(train_toy({}, 2), LmError);
  CHECK_THROWS_AS(train_toy({{"a"}}, 0), LmError);
}

TEST_CASE("self-trained models normalize for every stored context") {
  for (int order = 1; order <= 3; ++order) {
    NgramModel m = train_toy(toy_corpus(), order);
    V vocab = m.vocabulary();
    REQUIRE(std::find(vocab.begin(), vocab.end(), "<unk>") != vocab.end());
    std::vector<V> contexts{{}};
    std::ostringstream arpa;
    m.write_arpa(arpa);
    // Enumerate stored ngrams of length < order from the ARPA text.
    std::istringstream lines(arpa.str());
    std::string line;
    int section = 0;
    while (std::getline(lines, line)) {
      if (line.size() > 2 && line[0] == '\\' && line.find("-grams") != std::string::npos) {
        section = line[1] - '0';
        continue;
      }
      auto f = split_ws(line);
      if (section == 0 || section >= order || f.size() < 2 || line[0] == '\\') continue;
      contexts.emplace_back(f.begin() + 1, f.begin() + 1 + section);
    }
    if (order > 1) CHECK(contexts.size() > 5);
    for (const V& ctx : contexts) {
      double total = 0.0;
      for (const auto& w : vocab) {
        V q = ctx;
        q.push_back(w);
        total += std::pow(10.0, m.logprob(q));
      }
      CHECK_MESSAGE(total == doctest::Approx(1.0).epsilon(1e-4), "order ", order, " context '", join(ctx), "'");
    }
  }
}

TEST_CASE("self-trained models are context complete") {
  NgramModel m = train_toy(toy_corpus(), 3);
  std::ostringstream arpa;
  m.write_arpa(arpa);
  std::istringstream lines(arpa.str());
  std::string line;
  int section = 0;
  while (std::getline(lines, line)) {
    if (line.size() > 2 && line[0] == '\\' && line.find("-grams") != std::string::npos) {
      section = line[1] - '0';
      continue;
    }
    auto f = split_ws(line);
    if (section < 2 || f.size() < 2 || line[0] == '\\') continue;
    V ctx(f.begin() + 1, f.begin() + section);
    CHECK_MESSAGE(m.find(join(ctx)) != nullptr, join(ctx));
  }
  CHECK(m.find("<s> <s>") != nullptr);
}

TEST_CASE("ARPA export and reload score identically") {
  NgramModel m = train_toy(toy_corpus(), 3);
  std::stringstream io;
  m.write_arpa(io);
  NgramModel back = NgramModel::read_arpa(io);
  gen::Rng rng(1);
  V words = m.vocabulary();
  words.push_back("unseen");
  words.push_back("<s>");
  for (int i = 0; i < 500; ++i) {
    V q(static_cast<std::size_t>(gen::uniform(rng, 1, 3)));
    for (auto& w : q) w = gen::pick(rng, words);
    REQUIRE(back.logprob(q) == m.logprob(q));
  }
  std::ostringstream again;
  back.write_arpa(again);
  CHECK(again.str() == io.str());
}

TEST_CASE("training perplexity beats the uniform model") {
  auto corpus = toy_corpus();
  for (int order = 1; order <= 3; ++order) {
    NgramModel m = train_toy(corpus, order);
    double logsum = 0.0;
    double events = 0.0;
    for (const auto& s : corpus) {
      logsum += m.score_sentence(s);
      events += static_cast<double>(s.size() + 1);
    }
    double uniform = -std::log10(static_cast<double>(m.vocabulary().size()));
    CHECK(logsum / events >= uniform);
  }
}

TEST_CASE("sentence score telescopes over positions") {
  NgramModel m = train_toy(toy_corpus(), 3);
  V s{"the", "cat", "ran", "home"};
  V padded = m.pad(s);
  double total = 0.0;
  for (std::size_t i = 2; i < padded.size(); ++i) total += m.logprob(V(padded.begin() + (i - 2), padded.begin() + i + 1));
  CHECK(m.score_sentence(s) == doctest::Approx(total).epsilon(1e-12));
}
