#include "treeduce/lm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "treeduce/tree.hpp"

namespace treeduce {

namespace {

constexpr double kDiscount = 0.75;
constexpr double kNever = -99.0;

std::string join_span(std::span<const std::string> tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

}  // namespace

NgramModel::NgramModel(int order) : order_(order), table_(static_cast<std::size_t>(order)) {
  if (order < 1) throw LmError("ngram order must be at least 1");
}

const NgramModel::Entry* NgramModel::find(const std::string& key) const {
  std::size_t k = static_cast<std::size_t>(std::count(key.begin(), key.end(), ' ')) + 1;
  if (k > table_.size()) return nullptr;
  auto it = table_[k - 1].find(key);
  return it == table_[k - 1].end() ? nullptr : &it->second;
}

void NgramModel::set(const std::vector<std::string>& ngram, Entry e) {
  if (ngram.empty() || static_cast<int>(ngram.size()) > order_) throw LmError("ngram length out of range");
  table_[ngram.size() - 1][join(ngram)] = e;
  if (ngram.size() == 1) vocab_.insert(ngram[0]);
}

void NgramModel::set_backoff(const std::vector<std::string>& context, double backoff) {
  if (context.empty() || static_cast<int>(context.size()) > order_) throw LmError("context length out of range");
  auto it = table_[context.size() - 1].find(join(context));
  if (it == table_[context.size() - 1].end()) throw LmError("backoff for unstored context '" + join(context) + "'");
  it->second.backoff = backoff;
}

double NgramModel::logprob(std::span<const std::string> ngram) const {
  if (ngram.empty()) throw LmError("empty ngram query");
  if (static_cast<int>(ngram.size()) > order_) ngram = ngram.last(static_cast<std::size_t>(order_));
  std::vector<std::string> mapped;
  mapped.reserve(ngram.size());
  for (const auto& t : ngram) mapped.push_back(in_vocab(t) ? t : kUnk);

  // p(w | h) = p*(h w) if stored, else bow(h) + p(w | h') with h' = h minus
  // its first token.
  double backoff = 0.0;
  for (std::size_t start = 0; start < mapped.size(); ++start) {
    std::span<const std::string> view(mapped.begin() + static_cast<std::ptrdiff_t>(start), mapped.end());
    if (const Entry* e = find(join_span(view))) return backoff + e->logprob;
    if (view.size() > 1)
      if (const Entry* h = find(join_span(view.first(view.size() - 1)))) backoff += h->backoff;
  }
  // The token itself is <unk> but no <unk> entry exists.
  return backoff + kNever;
}

double NgramModel::unigram(const std::string& token) const {
  const std::string& t = in_vocab(token) ? token : kUnk;
  const Entry* e = find(t);
  return e ? e->logprob : kNever;
}

std::vector<std::string> NgramModel::pad(const std::vector<std::string>& tokens) const {
  std::vector<std::string> out(static_cast<std::size_t>(order_ - 1), kBos);
  out.insert(out.end(), tokens.begin(), tokens.end());
  out.push_back(kEos);
  return out;
}

double NgramModel::score_sentence(const std::vector<std::string>& tokens) const {
  auto padded = pad(tokens);
  std::span<const std::string> all(padded);
  double total = 0.0;
  for (std::size_t i = static_cast<std::size_t>(order_ - 1); i < padded.size(); ++i) {
    std::size_t lo = i + 1 >= static_cast<std::size_t>(order_) ? i + 1 - static_cast<std::size_t>(order_) : 0;
    total += logprob(all.subspan(lo, i + 1 - lo));
  }
  return total;
}

std::vector<std::string> NgramModel::vocabulary() const {
  std::vector<std::string> out;
  for (const auto& w : vocab_)
    if (w != kBos) out.push_back(w);
  std::sort(out.begin(), out.end());
  return out;
}

void NgramModel::write_arpa(std::ostream& out) const {
  out << "\n\\data\\\n";
  for (int k = 1; k <= order_; ++k) out << "ngram " << k << "=" << table_[k - 1].size() << "\n";
  for (int k = 1; k <= order_; ++k) {
    out << "\n\\" << k << "-grams:\n";
    std::map<std::string, Entry> sorted(table_[k - 1].begin(), table_[k - 1].end());
    for (const auto& [key, e] : sorted) {
      out << fmt::format("{}\t{}", e.logprob, key);
      if (k < order_ && e.backoff != 0.0) out << fmt::format("\t{}", e.backoff);
      out << "\n";
    }
  }
  out << "\n\\end\\\n";
}

NgramModel NgramModel::read_arpa(std::istream& in, const std::string& name) {
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) -> LmError {
    return LmError(name + ":" + std::to_string(lineno) + ": " + msg);
  };
  bool in_data = false;
  std::vector<std::size_t> counts;
  NgramModel model;
  int section = 0;
  bool ended = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (ended) throw fail("content after \\end\\");
    if (line == "\\data\\") {
      if (in_data || !counts.empty()) throw fail("duplicate \\data\\ header");
      in_data = true;
      continue;
    }
    if (line == "\\end\\") {
      ended = true;
      continue;
    }
    if (in_data && fields[0] == "ngram") {
      std::string spec = line.substr(line.find("ngram") + 5);
      auto eq = spec.find('=');
      if (eq == std::string::npos) throw fail("malformed ngram count line");
      try {
        std::size_t k = std::stoul(spec.substr(0, eq));
        std::size_t n = std::stoul(spec.substr(eq + 1));
        if (k != counts.size() + 1) throw fail("ngram counts out of order");
        counts.push_back(n);
      } catch (const std::logic_error&) {
        throw fail("malformed ngram count line");
      }
      continue;
    }
    if (line.size() > 2 && line[0] == '\\' && line.find("-grams:") != std::string::npos) {
      if (!in_data || counts.empty()) throw fail("section before \\data\\ counts");
      if (model.order_ == 0) model = NgramModel(static_cast<int>(counts.size()));
      int k = 0;
      try {
        k = std::stoi(line.substr(1));
      } catch (const std::logic_error&) {
        throw fail("malformed section header");
      }
      if (k != section + 1 || k > model.order_) throw fail("unexpected section " + line);
      if (section > 0 && model.table_[section - 1].size() != counts[section - 1])
        throw fail("section " + std::to_string(section) + " has " +
                   std::to_string(model.table_[section - 1].size()) + " entries, header says " +
                   std::to_string(counts[section - 1]));
      section = k;
      continue;
    }
    if (section == 0) {
      if (!in_data) continue;  // preamble text
      throw fail("unexpected line in \\data\\ header");
    }
    std::size_t need = static_cast<std::size_t>(section) + 1;
    if (fields.size() != need && fields.size() != need + 1) throw fail("expected " + std::to_string(section) + "-gram entry");
    Entry e;
    try {
      e.logprob = std::stod(fields[0]);
      if (fields.size() == need + 1) e.backoff = std::stod(fields.back());
    } catch (const std::logic_error&) {
      throw fail("malformed number");
    }
    std::vector<std::string> ngram(fields.begin() + 1, fields.begin() + static_cast<std::ptrdiff_t>(need));
    model.set(ngram, e);
  }
  if (!ended) throw fail("missing \\end\\");
  if (section != model.order_ || model.order_ == 0) throw fail("missing ngram sections");
  if (model.table_[section - 1].size() != counts[section - 1]) throw fail("last section size disagrees with header");
  if (!model.in_vocab(kUnk)) throw fail("model has no <unk> entry");
  return model;
}

NgramModel load_arpa(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LmError("cannot open language model " + path);
  return NgramModel::read_arpa(in, path);
}

NgramModel train_toy(const std::vector<std::vector<std::string>>& corpus, int order) {
  if (order < 1) throw LmError("ngram order must be at least 1");
  if (corpus.empty()) throw LmError("cannot train a language model on an empty corpus");
  const std::size_t n = static_cast<std::size_t>(order);

  // counts[k-1][context][word]
  std::vector<std::map<std::vector<std::string>, std::map<std::string, double>>> counts(n);
  NgramModel probe(order);
  for (const auto& sentence : corpus) {
    auto padded = probe.pad(sentence);
    for (std::size_t i = n - 1; i < padded.size(); ++i)
      for (std::size_t k = 1; k <= n; ++k) {
        std::vector<std::string> ctx(padded.begin() + static_cast<std::ptrdiff_t>(i + 1 - k),
                                     padded.begin() + static_cast<std::ptrdiff_t>(i));
        counts[k - 1][ctx][padded[i]] += 1.0;
      }
  }

  NgramModel model(order);
  const auto& unigrams = counts[0][{}];
  double total = 0.0;
  for (const auto& [w, c] : unigrams) total += c;
  const double types = static_cast<double>(unigrams.size());
  const double lambda0 = kDiscount * types / total;
  const double uniform = lambda0 / (types + 1.0);

  // Interpolated probabilities, keyed by full ngram, level by level.
  std::map<std::vector<std::string>, double> prob;
  for (const auto& [w, c] : unigrams) {
    double p = std::max(c - kDiscount, 0.0) / total + uniform;
    prob[{w}] = p;
    model.set({w}, {std::log10(p), 0.0});
  }
  model.set({kUnk}, {std::log10(uniform), 0.0});
  if (order > 1) model.set({kBos}, {kNever, 0.0});

  auto lower = [&](const std::vector<std::string>& ngram) {
    // Interpolated probability of the ngram without its first token.
    std::vector<std::string> tail(ngram.begin() + 1, ngram.end());
    return std::pow(10.0, model.logprob(tail));
  };

  for (std::size_t k = 2; k <= n; ++k) {
    for (const auto& [ctx, words] : counts[k - 1]) {
      double c_h = 0.0;
      for (const auto& [w, c] : words) c_h += c;
      double lambda = kDiscount * static_cast<double>(words.size()) / c_h;
      for (const auto& [w, c] : words) {
        std::vector<std::string> ngram = ctx;
        ngram.push_back(w);
        double p = std::max(c - kDiscount, 0.0) / c_h + lambda * lower(ngram);
        model.set(ngram, {std::log10(p), 0.0});
      }
      // The context is stored one level down; record its backoff weight.
      if (ctx.size() >= 1 && std::all_of(ctx.begin(), ctx.end(), [](const auto& t) { return t == kBos; }) &&
          !model.find(join(ctx))) {
        model.set(ctx, {kNever, 0.0});
      }
      model.set_backoff(ctx, std::log10(lambda));
    }
  }
  return model;
}

}  // namespace treeduce
