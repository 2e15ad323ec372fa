#include "treeduce/eval.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

#include "treeduce/losses.hpp"
#include "treeduce/tree.hpp"

namespace treeduce {

double compression_rate(std::size_t source_tokens, std::size_t target_tokens) {
  if (source_tokens == 0) throw std::invalid_argument("compression rate of an empty source");
  return 100.0 * static_cast<double>(target_tokens) / static_cast<double>(source_tokens);
}

EvalReport evaluate_corpus(const std::vector<std::optional<Tokens>>& predictions,
                           const std::vector<std::optional<Tokens>>& references,
                           const std::vector<std::optional<Tokens>>& sources, double scale) {
  if (predictions.size() != references.size())
    throw std::invalid_argument(fmt::format("{} predictions but {} references", predictions.size(), references.size()));
  if (!sources.empty() && sources.size() != predictions.size())
    throw std::invalid_argument(fmt::format("{} sources but {} predictions", sources.size(), predictions.size()));
  const bool rates = !sources.empty();

  EvalReport r;
  std::size_t src_total = 0, pred_total = 0, ref_total = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& pred = predictions[i];
    const auto& ref = references[i];
    if (!pred || !ref || (rates && (!sources[i] || sources[i]->empty()))) {
      ++r.skipped;
      continue;
    }
    SentenceScores s;
    s.line = i + 1;
    if (rates) {
      s.rate = compression_rate(sources[i]->size(), pred->size());
      src_total += sources[i]->size();
      pred_total += pred->size();
      ref_total += ref->size();
    }
    s.hamming = compute_loss(LossReference({LossKind::hamming_token, scale}, *ref), *pred);
    s.edit = compute_loss(LossReference({LossKind::edit, 1.0}, *ref), *pred);
    s.f1_loss = compute_loss(LossReference({LossKind::f1, 1.0}, *ref), *pred);
    r.hamming += s.hamming;
    r.edit += s.edit;
    r.f1_loss += s.f1_loss;
    r.sentences.push_back(s);
  }
  if (!r.sentences.empty()) {
    const double n = static_cast<double>(r.sentences.size());
    r.hamming /= n;
    r.edit /= n;
    r.f1_loss /= n;
  }
  if (rates && src_total > 0) {
    r.corpus_rate = compression_rate(src_total, pred_total);
    r.reference_rate = compression_rate(src_total, ref_total);
  }
  return r;
}

std::vector<std::optional<Tokens>> read_token_lines(std::istream& in) {
  std::vector<std::optional<Tokens>> out;
  std::string line;
  while (std::getline(in, line)) {
    line.erase(std::min(line.find('\t'), line.size()));
    auto first = line.find_first_not_of(" \t\r");
    if (first != std::string::npos && line[first] == '#') continue;
    if (first != std::string::npos && line[first] == '[') {
      try {
        out.emplace_back(yield_tokens(parse_bracketed(line)));
      } catch (const std::exception&) {
        out.emplace_back(std::nullopt);
      }
    } else {
      out.emplace_back(split_ws(line));
    }
  }
  return out;
}

std::vector<std::optional<Tokens>> read_token_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_token_lines(in);
}

namespace {
std::string rate_field(const std::optional<double>& v) { return v ? fmt::format("{:.4f}", *v) : "NA"; }
}  // namespace

void write_report_tsv(std::ostream& out, const EvalReport& r) {
  out << "pairs\tskipped\tcompression_rate\treference_rate\thamming_token\tedit\tf1_loss\n";
  out << fmt::format("{}\t{}\t{}\t{}\t{:.6f}\t{:.6f}\t{:.6f}\n", r.sentences.size(), r.skipped,
                     rate_field(r.corpus_rate), rate_field(r.reference_rate), r.hamming, r.edit, r.f1_loss);
}

std::string summarize(const EvalReport& r) {
  std::string s = fmt::format("{} pairs scored, {} skipped\n", r.sentences.size(), r.skipped);
  if (r.corpus_rate)
    s += fmt::format("compression rate {:.2f}% (reference {:.2f}%)\n", *r.corpus_rate, *r.reference_rate);
  s += fmt::format("mean token Hamming loss {:.4f}, edit distance {:.4f}, 1-F1 {:.4f}\n", r.hamming, r.edit,
                   r.f1_loss);
  s += "relation-based F1 is not computed (needs a dependency parser)\n";
  return s;
}

}  // namespace treeduce
