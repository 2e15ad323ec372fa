#pragma once

#include <iosfwd>
#include <map>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "treeduce/lm.hpp"
#include "treeduce/rule.hpp"

namespace treeduce {

class Derivation;

using FeatureId = int;

/// Interned feature names. Ids are stable for the life of the process;
/// names are what gets persisted.
class FeatureSpace {
 public:
  static FeatureSpace& global();

  FeatureId id(const std::string& name);
  /// -1 when the name has never been interned.
  FeatureId find(const std::string& name) const;
  std::string name(FeatureId id) const;
  std::size_t size() const;

 private:
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, FeatureId> ids_;
  std::vector<std::string> names_;
};

/// Sparse real vector. Zero entries are never stored.
class FeatureVector {
 public:
  void add(FeatureId id, double value);
  void add(const std::string& name, double value) { add(FeatureSpace::global().id(name), value); }
  void add(const FeatureVector& other, double scale = 1.0);
  double get(FeatureId id) const;
  double get(const std::string& name) const;

  const std::map<FeatureId, double>& entries() const& { return entries_; }
  std::map<FeatureId, double> entries() && { return std::move(entries_); }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  double dot(const FeatureVector& other) const;
  double squared_norm() const { return dot(*this); }

  /// Entries by name, sorted.
  std::map<std::string, double> named() const;

  friend FeatureVector operator-(const FeatureVector& a, const FeatureVector& b);
  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;

 private:
  std::map<FeatureId, double> entries_;
};

/// Dense weights indexed by feature id; missing ids weigh zero.
class WeightVector {
 public:
  double operator[](FeatureId id) const {
    return id >= 0 && static_cast<std::size_t>(id) < w_.size() ? w_[static_cast<std::size_t>(id)] : 0.0;
  }
  double get(const std::string& name) const { return (*this)[FeatureSpace::global().find(name)]; }
  void set(FeatureId id, double value);
  void set(const std::string& name, double value) { set(FeatureSpace::global().id(name), value); }
  void add(const FeatureVector& v, double scale = 1.0);
  double dot(const FeatureVector& v) const;
  double squared_norm() const;
  std::size_t dimension() const { return w_.size(); }

 private:
  std::vector<double> w_;
};

namespace feature {
inline const std::string kLm = "lm_logprob";
inline const std::string kRuleCount = "rule_count";
inline const std::string kWordsSource = "words.src";
inline const std::string kWordsTarget = "words.tgt";
}  // namespace feature

/// Features of a rule that do not depend on where it is applied.
FeatureVector rule_static_features(const SyncRule& rule);

/// All rule features. The only source-dependent feature is the number of
/// terminals in the whole source sentence.
FeatureVector rule_features(const SyncRule& rule, const Tree& source, NodeId anchor);

/// {lm: log10 p(last | rest)}.
FeatureVector ngram_feature(const NgramModel& model, const std::vector<std::string>& ngram);

/// Sum of rule features over the derivation plus the ngram feature over every
/// ngram of the padded target yield.
FeatureVector derivation_features(const Derivation& d, const NgramModel& model);
/// As above; a null model contributes no ngram feature.
FeatureVector derivation_features(const Derivation& d, const NgramModel* model);

/// Bracketed form with terminals removed: preterminals become bare labels.
std::string unlexicalized(const Tree& tree, bool with_links);

/// Model file: name TAB weight per line, sorted by name. Zero weights are
/// omitted.
void write_model(std::ostream& out, const WeightVector& w);
WeightVector read_model(std::istream& in, const std::string& name = "<stream>");
WeightVector load_model(const std::string& path);

}  // namespace treeduce
