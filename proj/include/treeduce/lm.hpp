#pragma once

#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace treeduce {

inline const std::string kBos = "<s>";
inline const std::string kEos = "</s>";
inline const std::string kUnk = "<unk>";

class LmError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Backoff ngram model with log10 probabilities, as stored in ARPA files.
/// Read-only after construction, so concurrent queries are safe.
class NgramModel {
 public:
  struct Entry {
    double logprob = 0.0;
    double backoff = 0.0;
  };

  NgramModel() = default;
  explicit NgramModel(int order);

  int order() const { return order_; }

  /// log10 p(last | preceding), using at most the last `order` tokens.
  /// Unknown tokens are read as <unk>.
  double logprob(std::span<const std::string> ngram) const;
  double logprob(const std::vector<std::string>& ngram) const {
    return logprob(std::span<const std::string>(ngram));
  }
  double unigram(const std::string& token) const;

  /// order-1 copies of <s>, the tokens, then </s>.
  std::vector<std::string> pad(const std::vector<std::string>& tokens) const;
  /// Sum of logprob over every position of the padded sentence after the
  /// start symbols.
  double score_sentence(const std::vector<std::string>& tokens) const;

  bool in_vocab(const std::string& token) const { return vocab_.count(token) > 0; }
  /// Predictable vocabulary (excludes <s>), sorted.
  std::vector<std::string> vocabulary() const;

  /// Direct access to stored entries, keyed by space-joined tokens.
  const Entry* find(const std::string& key) const;
  void set(const std::vector<std::string>& ngram, Entry e);
  void set_backoff(const std::vector<std::string>& context, double backoff);

  void write_arpa(std::ostream& out) const;
  static NgramModel read_arpa(std::istream& in, const std::string& name = "<stream>");

 private:
  int order_ = 0;
  std::vector<std::unordered_map<std::string, Entry>> table_;  // index k-1 holds k-grams
  std::unordered_set<std::string> vocab_;
};

NgramModel load_arpa(const std::string& path);

/// Interpolated absolute discounting (D = 0.75) over padded sentences.
/// Mass removed from the unigrams is shared uniformly by the vocabulary and
/// <unk>.
NgramModel train_toy(const std::vector<std::vector<std::string>>& corpus, int order);

}  // namespace treeduce
