#include "treeduce/features.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <mutex>
#include <set>

#include "treeduce/derivation.hpp"

namespace treeduce {

FeatureSpace& FeatureSpace::global() {
  static FeatureSpace space;
  return space;
}

FeatureId FeatureSpace::id(const std::string& name) {
  {
    std::shared_lock lock(mutex_);
    auto it = ids_.find(name);
    if (it != ids_.end()) return it->second;
  }
  std::unique_lock lock(mutex_);
  auto [it, inserted] = ids_.emplace(name, static_cast<FeatureId>(names_.size()));
  if (inserted) names_.push_back(name);
  return it->second;
}

FeatureId FeatureSpace::find(const std::string& name) const {
  std::shared_lock lock(mutex_);
  auto it = ids_.find(name);
  return it == ids_.end() ? -1 : it->second;
}

std::string FeatureSpace::name(FeatureId id) const {
  std::shared_lock lock(mutex_);
  return names_.at(static_cast<std::size_t>(id));
}

std::size_t FeatureSpace::size() const {
  std::shared_lock lock(mutex_);
  return names_.size();
}

void FeatureVector::add(FeatureId id, double value) {
  if (value == 0.0) return;
  auto [it, inserted] = entries_.emplace(id, value);
  if (inserted) return;
  it->second += value;
  if (it->second == 0.0) entries_.erase(it);
}

void FeatureVector::add(const FeatureVector& other, double scale) {
  if (scale == 0.0) return;
  for (const auto& [id, v] : other.entries_) add(id, v * scale);
}

double FeatureVector::get(FeatureId id) const {
  auto it = entries_.find(id);
  return it == entries_.end() ? 0.0 : it->second;
}

double FeatureVector::get(const std::string& name) const {
  FeatureId id = FeatureSpace::global().find(name);
  return id < 0 ? 0.0 : get(id);
}

double FeatureVector::dot(const FeatureVector& other) const {
  const auto& small = size() <= other.size() ? entries_ : other.entries_;
  const auto& large = size() <= other.size() ? other.entries_ : entries_;
  double total = 0.0;
  for (const auto& [id, v] : small) {
    auto it = large.find(id);
    if (it != large.end()) total += v * it->second;
  }
  return total;
}

std::map<std::string, double> FeatureVector::named() const {
  std::map<std::string, double> out;
  const FeatureSpace& space = FeatureSpace::global();
  for (const auto& [id, v] : entries_) out.emplace(space.name(id), v);
  return out;
}

FeatureVector operator-(const FeatureVector& a, const FeatureVector& b) {
  FeatureVector out = a;
  out.add(b, -1.0);
  return out;
}

void WeightVector::set(FeatureId id, double value) {
  if (id < 0) return;
  if (static_cast<std::size_t>(id) >= w_.size()) w_.resize(static_cast<std::size_t>(id) + 1, 0.0);
  w_[static_cast<std::size_t>(id)] = value;
}

void WeightVector::add(const FeatureVector& v, double scale) {
  for (const auto& [id, x] : v.entries()) set(id, (*this)[id] + scale * x);
}

double WeightVector::dot(const FeatureVector& v) const {
  double total = 0.0;
  for (const auto& [id, x] : v.entries()) total += (*this)[id] * x;
  return total;
}

double WeightVector::squared_norm() const {
  double total = 0.0;
  for (double x : w_) total += x * x;
  return total;
}

namespace {

void unlex_into(const Tree& t, NodeId n, bool with_links, std::string& out) {
  const Node& node = t.node(n);
  if (node.kind == NodeKind::frontier) {
    out += node.label;
    if (with_links) out += node.link == kEpsilon ? "#e" : "#" + std::to_string(node.link + 1);
    return;
  }
  std::vector<NodeId> kept;
  for (NodeId c : node.children)
    if (!t.is_terminal(c)) kept.push_back(c);
  if (kept.empty()) {
    out += node.label;
    return;
  }
  out += "[" + node.label;
  for (NodeId c : kept) {
    out += ' ';
    unlex_into(t, c, with_links, out);
  }
  out += ']';
}

/// Leaves as frontier labels, with each terminal replaced by its parent's
/// label.
std::vector<std::string> leaf_categories(const Tree& t) {
  std::vector<std::string> out;
  for (NodeId n : t.leaves()) {
    const Node& node = t.node(n);
    out.push_back(node.kind == NodeKind::terminal && node.parent != kNoNode ? t.label(node.parent) : node.label);
  }
  return out;
}

void yield_features(FeatureVector& f, const std::string& prefix, const std::vector<std::string>& src,
                    const std::vector<std::string>& tgt) {
  f.add(prefix + ":src=" + join(src, ",") + "|tgt=" + join(tgt, ","), 1.0);
  std::set<std::string> in_tgt(tgt.begin(), tgt.end());
  std::set<std::string> seen;
  for (const auto& w : src) {
    if (!seen.insert(w).second) continue;
    f.add(prefix + (in_tgt.count(w) ? ".both:" : ".src_only:") + w, 1.0);
  }
}

}  // namespace

std::string unlexicalized(const Tree& tree, bool with_links) {
  std::string out;
  unlex_into(tree, tree.root(), with_links, out);
  return out;
}

FeatureVector rule_static_features(const SyncRule& rule) {
  FeatureVector f;
  const unsigned p = rule.provenance();
  if (p & kExtracted) f.add("type:extracted", 1.0);
  if (p & kCopy) f.add("type:copy", 1.0);
  if (p & kDelete) f.add("type:delete", 1.0);

  f.add("root.src:" + rule.src_root(), 1.0);
  f.add("root.tgt:" + rule.tgt_root(), 1.0);
  f.add("root.pair:" + rule.src_root() + "|" + rule.tgt_root(), 1.0);

  const std::string a_plain = serialize(rule.alpha(), false);
  const std::string g_plain = serialize(rule.gamma(), false);
  const std::string a_full = rule.alpha_string();
  const std::string g_full = rule.gamma_string();
  f.add("id.src:" + a_plain, 1.0);
  f.add("id.tgt:" + g_plain, 1.0);
  f.add("id.rule:" + a_full + " ||| " + g_full, 1.0);
  if (a_full == g_full) f.add("id.same", 1.0);

  const std::string ua_plain = unlexicalized(rule.alpha(), false);
  const std::string ug_plain = unlexicalized(rule.gamma(), false);
  const std::string ua_full = unlexicalized(rule.alpha(), true);
  const std::string ug_full = unlexicalized(rule.gamma(), true);
  f.add("unlex.src:" + ua_plain, 1.0);
  f.add("unlex.tgt:" + ug_plain, 1.0);
  f.add("unlex.rule:" + ua_full + " ||| " + ug_full, 1.0);
  if (ua_full == ug_full) f.add("unlex.same", 1.0);

  f.add(feature::kRuleCount, 1.0);
  const auto tgt_words = yield_tokens(rule.gamma());
  f.add(feature::kWordsTarget, static_cast<double>(tgt_words.size()));

  yield_features(f, "yield.term", yield_tokens(rule.alpha()), tgt_words);
  yield_features(f, "yield.nt", leaf_categories(rule.alpha()), leaf_categories(rule.gamma()));

  const double diff =
      static_cast<double>(rule.alpha().leaves().size()) - static_cast<double>(rule.gamma().leaves().size());
  f.add("len.diff", diff);
  if (diff > 0) f.add("len.tgt_shorter", 1.0);
  return f;
}

FeatureVector rule_features(const SyncRule& rule, const Tree& source, NodeId /*anchor*/) {
  FeatureVector f = rule_static_features(rule);
  f.add(feature::kWordsSource, static_cast<double>(source.terminal_nodes().size()));
  return f;
}

FeatureVector ngram_feature(const NgramModel& model, const std::vector<std::string>& ngram) {
  FeatureVector f;
  f.add(feature::kLm, model.logprob(ngram));
  return f;
}

FeatureVector derivation_features(const Derivation& d, const NgramModel* model) {
  auto [src, tgt] = apply_derivation(d);
  FeatureVector f;
  for (const auto& step : d.steps()) f.add(rule_features(*step.rule, d.source(), step.anchor));
  if (model) f.add(feature::kLm, model->score_sentence(yield_tokens(tgt)));
  return f;
}

FeatureVector derivation_features(const Derivation& d, const NgramModel& model) {
  return derivation_features(d, &model);
}

void write_model(std::ostream& out, const WeightVector& w) {
  const FeatureSpace& space = FeatureSpace::global();
  std::map<std::string, double> sorted;
  for (std::size_t i = 0; i < w.dimension(); ++i) {
    double v = w[static_cast<FeatureId>(i)];
    if (v != 0.0) sorted.emplace(space.name(static_cast<FeatureId>(i)), v);
  }
  for (const auto& [name, v] : sorted) out << fmt::format("{}\t{}\n", name, v);
}

WeightVector read_model(std::istream& in, const std::string& name) {
  WeightVector w;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto tab = line.rfind('\t');
    if (tab == std::string::npos || tab == 0)
      throw std::runtime_error(fmt::format("{}:{}: expected 'name<TAB>weight'", name, lineno));
    const char* first = line.data() + tab + 1;
    const char* last = line.data() + line.size();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
      throw std::runtime_error(fmt::format("{}:{}: bad weight '{}'", name, lineno, std::string(first, last)));
    w.set(line.substr(0, tab), v);
  }
  return w;
}

WeightVector load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file " + path);
  return read_model(in, path);
}

}  // namespace treeduce
