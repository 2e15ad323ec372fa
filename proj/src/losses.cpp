#include "treeduce/losses.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <stdexcept>

#include "treeduce/lm.hpp"
#include "treeduce/rule.hpp"

namespace treeduce {

std::string loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::hamming_token: return "hamming-token";
    case LossKind::hamming_ngram: return "hamming-ngram";
    case LossKind::hamming_cfg: return "hamming-cfg";
    case LossKind::edit: return "edit";
    case LossKind::f1: return "f1";
    case LossKind::zero: return "zero";
  }
  return "?";
}

LossKind parse_loss_kind(const std::string& name) {
  for (LossKind k : {LossKind::hamming_token, LossKind::hamming_ngram, LossKind::hamming_cfg, LossKind::edit,
                     LossKind::f1, LossKind::zero})
    if (loss_kind_name(k) == name) return k;
  throw std::invalid_argument("unknown loss '" + name +
                              "' (expected hamming-token, hamming-ngram, hamming-cfg, edit or f1)");
}

LossSpec scale_loss(LossSpec spec, double factor) {
  if (!(factor > 0)) throw std::invalid_argument("loss scaling factor must be positive");
  spec.factor *= factor;
  return spec;
}

bool is_hamming(LossKind kind) {
  return kind == LossKind::hamming_token || kind == LossKind::hamming_ngram || kind == LossKind::hamming_cfg;
}

std::vector<std::string> ngram_items(const std::vector<std::string>& tokens) {
  std::vector<std::string> padded;
  padded.reserve(tokens.size() + 2);
  padded.push_back(kBos);
  padded.insert(padded.end(), tokens.begin(), tokens.end());
  padded.push_back(kEos);
  std::vector<std::string> out;
  for (std::size_t n = 1; n <= kLossNgramOrder; ++n)
    for (std::size_t i = 0; i + n <= padded.size(); ++i) {
      // Skip the bare padding unigrams, and with no tokens the padding bigram.
      if (n == 1 && (i == 0 || i + 1 == padded.size())) continue;
      if (tokens.empty() && n == 2) continue;
      out.push_back(join(std::vector<std::string>(padded.begin() + static_cast<std::ptrdiff_t>(i),
                                                  padded.begin() + static_cast<std::ptrdiff_t>(i + n))));
    }
  return out;
}

std::vector<std::string> cfg_items(const Tree& target) {
  std::vector<std::string> out;
  for (NodeId n : target.preorder())
    if (target.is_internal(n)) out.push_back(production_signature(target, n));
  return out;
}

std::vector<std::string> loss_items(LossKind kind, const Tree& target) {
  switch (kind) {
    case LossKind::hamming_ngram: return ngram_items(yield_tokens(target));
    case LossKind::hamming_cfg: return cfg_items(target);
    case LossKind::zero: return {};
    default: return yield_tokens(target);
  }
}

std::vector<std::string> loss_items(LossKind kind, const std::vector<std::string>& tokens) {
  switch (kind) {
    case LossKind::hamming_ngram: return ngram_items(tokens);
    case LossKind::hamming_cfg: throw std::invalid_argument("the cfg loss needs trees, not token strings");
    case LossKind::zero: return {};
    default: return tokens;
  }
}

LossReference::LossReference(LossSpec spec, const Tree& reference) : spec_(spec) {
  init(loss_items(spec.kind, reference));
}

LossReference::LossReference(LossSpec spec, const std::vector<std::string>& reference) : spec_(spec) {
  init(loss_items(spec.kind, reference));
}

void LossReference::init(const std::vector<std::string>& items) {
  if (spec_.scale < 0) throw std::invalid_argument("length penalty scale must be non-negative");
  if (!(spec_.factor > 0)) throw std::invalid_argument("loss scaling factor must be positive");
  std::map<std::string, int> counts;
  for (auto& item : items) ++counts[item];
  for (const auto& [item, c] : counts) {
    index_.emplace(item, static_cast<int>(types_.size()));
    types_.push_back(item);
    counts_.push_back(c);
    length_ += c;
  }
}

int LossReference::type_index(const std::string& item) const {
  auto it = index_.find(item);
  return it == index_.end() ? -1 : it->second;
}

LossArgs init_args(const LossReference& ref) {
  LossArgs a;
  if (ref.spec().kind == LossKind::edit || ref.spec().kind == LossKind::f1)
    a.cells.assign(static_cast<std::size_t>(ref.num_types()) + 1, 0);
  return a;
}

void accumulate(const LossReference& ref, LossArgs& args, const std::string& item) {
  LossKind k = ref.spec().kind;
  if (k == LossKind::zero) return;
  if (is_hamming(k)) {
    if (ref.contains(item)) ++args.tp;
    else ++args.fp;
    return;
  }
  int t = ref.type_index(item);
  if (t >= 0 && args.cells[static_cast<std::size_t>(t)] < ref.type_count(t)) ++args.cells[static_cast<std::size_t>(t)];
  else ++args.cells.back();
}

void accumulate(const LossReference& ref, LossArgs& args, const std::vector<std::string>& items) {
  for (const auto& item : items) accumulate(ref, args, item);
}

LossArgs combine(const LossReference& ref, const LossArgs& a, const LossArgs& b) {
  LossArgs out = a;
  out.tp += b.tp;
  out.fp += b.fp;
  if (out.cells.empty()) return out;
  out.cells.back() += b.cells.back();
  for (std::size_t i = 0; i + 1 < out.cells.size(); ++i) {
    int sum = out.cells[i] + b.cells[i];
    int cap = ref.type_count(static_cast<int>(i));
    out.cells[i] = std::min(sum, cap);
    out.cells.back() += sum - out.cells[i];
  }
  return out;
}

namespace {

struct Totals {
  double predicted = 0;
  double matched = 0;
};

Totals totals(const LossArgs& args) {
  Totals t;
  for (std::size_t i = 0; i + 1 < args.cells.size(); ++i) {
    t.matched += args.cells[i];
    t.predicted += args.cells[i];
  }
  if (!args.cells.empty()) t.predicted += args.cells.back();
  return t;
}

}  // namespace

namespace {

double raw_loss(const LossReference& ref, const LossArgs& args) {
  const LossSpec& s = ref.spec();
  switch (s.kind) {
    case LossKind::zero: return 0.0;
    case LossKind::edit: {
      Totals t = totals(args);
      return t.predicted + ref.length() - 2.0 * t.matched;
    }
    case LossKind::f1: {
      Totals t = totals(args);
      double p = t.predicted > 0 ? t.matched / t.predicted : 0.0;
      double r = ref.length() > 0 ? t.matched / ref.length() : 0.0;
      if (p + r == 0.0) return 1.0;
      return 1.0 - 2.0 * p * r / (p + r);
    }
    default: {
      double shortfall = std::max(ref.length() - (args.tp + args.fp), 0);
      return args.fp + s.scale * shortfall;
    }
  }
}

}  // namespace

double finalize(const LossReference& ref, const LossArgs& args) { return ref.spec().factor * raw_loss(ref, args); }

double partial_loss(const LossReference& ref, const LossArgs& args) {
  const double f = ref.spec().factor;
  switch (ref.spec().kind) {
    case LossKind::zero: return 0.0;
    case LossKind::edit: return f * args.cells.back();
    case LossKind::f1: return 0.0;
    default: return f * args.fp;
  }
}

std::string strata_key(const LossReference& ref, const LossArgs& args) {
  if (ref.spec().kind == LossKind::zero) return "";
  if (args.cells.empty()) return fmt::format("{},{}", args.tp, args.fp);
  return fmt::format("{}", fmt::join(args.cells, ","));
}

double compute_loss(const LossReference& ref, const Tree& predicted) {
  LossArgs a = init_args(ref);
  accumulate(ref, a, loss_items(ref.spec().kind, predicted));
  return finalize(ref, a);
}

double compute_loss(const LossReference& ref, const std::vector<std::string>& predicted) {
  LossArgs a = init_args(ref);
  accumulate(ref, a, loss_items(ref.spec().kind, predicted));
  return finalize(ref, a);
}

}  // namespace treeduce
