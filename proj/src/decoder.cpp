#include "treeduce/decoder.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "treeduce/synth.hpp"

namespace treeduce {

Synthesis parse_synthesis(const std::string& name) {
  if (name == "copy+delete") return Synthesis::copy_delete;
  if (name == "copy") return Synthesis::copy;
  if (name == "none") return Synthesis::none;
  throw std::invalid_argument("unknown synthesis mode '" + name + "' (expected copy+delete, copy or none)");
}

std::string synthesis_name(Synthesis s) {
  switch (s) {
    case Synthesis::copy_delete: return "copy+delete";
    case Synthesis::copy: return "copy";
    case Synthesis::none: return "none";
  }
  return "?";
}

bool CubeQueue::Order::operator()(const Item& a, const Item& b) const {
  if (a.priority != b.priority) return a.priority < b.priority;
  if (a.lattice != b.lattice) return a.lattice > b.lattice;
  return a.index > b.index;
}

double CubeQueue::priority(const Lattice& l, const std::vector<std::size_t>& index) const {
  double p = l.base;
  for (std::size_t u = 0; u < index.size(); ++u) p += l.values[u][index[u]];
  return p;
}

void CubeQueue::push(std::size_t lattice, std::vector<std::size_t> index) {
  auto& seen = seen_[lattice];
  if (std::find(seen.begin(), seen.end(), index) != seen.end()) return;
  seen.push_back(index);
  double p = priority(lattices_[lattice], index);
  heap_.push({lattice, std::move(index), p});
}

void CubeQueue::add_lattice(double base, std::vector<std::vector<double>> values) {
  for (const auto& v : values)
    if (v.empty()) throw std::invalid_argument("cube lattice with an empty dimension");
  lattices_.push_back({base, std::move(values)});
  seen_.emplace_back();
  push(lattices_.size() - 1, std::vector<std::size_t>(lattices_.back().values.size(), 0));
}

CubeQueue::Item CubeQueue::pop() {
  Item top = heap_.top();
  heap_.pop();
  const Lattice& l = lattices_[top.lattice];
  for (std::size_t u = 0; u < top.index.size(); ++u) {
    if (top.index[u] + 1 >= l.values[u].size()) continue;
    auto next = top.index;
    ++next[u];
    push(top.lattice, std::move(next));
  }
  return top;
}

Grammar coverage_grammar(const Tree& source, const Grammar& g, Synthesis synthesis) {
  Grammar out = g;
  if (synthesis == Synthesis::none) return out;
  for (const auto& r : synthesize_copy_rules(source)) out.add(r, 0);
  if (synthesis == Synthesis::copy_delete)
    for (const auto& r : synthesize_delete_rules(source)) out.add(r, 0);
  return out;
}

namespace {

constexpr int kRulePiece = -1;

struct Hyp {
  double score = 0.0;
  /// score plus the partial loss; what the beam ranks by.
  double rank = 0.0;
  /// rank plus a unigram estimate for the not yet scored prefix.
  double heuristic = 0.0;
  std::vector<std::string> yield;
  LossArgs args;
  RulePtr rule;
  NodeId anchor = kNoNode;
  std::vector<const Hyp*> children;
};

bool better(const Hyp& a, const Hyp& b) {
  if (a.rank != b.rank) return a.rank > b.rank;
  if (a.yield.size() != b.yield.size()) return a.yield.size() < b.yield.size();
  return a.yield < b.yield;
}

class Decoder {
 public:
  Decoder(std::shared_ptr<const Tree> source, const Grammar& g, const WeightVector& w, const NgramModel* lm,
          const LossReference* loss, const DecodeOptions& opt)
      : src_ptr_(std::move(source)), x_(*src_ptr_), g_(g), w_(w), lm_(lm), loss_(loss), opt_(opt) {
    order_ = lm_ ? lm_->order() : 0;
    w_lm_ = w_.get(feature::kLm);
    context_ = std::max(order_ - 1, 0);
    if (loss_ && loss_->spec().kind == LossKind::hamming_ngram) context_ = std::max(context_, kLossNgramOrder - 1);
    synthesize();
  }

  DecodeResult run() {
    cells_.resize(x_.size());
    for (NodeId v : x_.postorder())
      if (x_.is_internal(v)) fill(v);

    std::string root_cat = opt_.tgt_root;
    if (root_cat.empty()) root_cat = g_.tgt_root_symbol;
    if (root_cat.empty()) root_cat = x_.label(x_.root());

    const Hyp* best = nullptr;
    Hyp scored;
    auto it = cells_[x_.root()].find(root_cat);
    if (it != cells_[x_.root()].end()) {
      for (const Hyp& h : it->second) {
        Hyp fin = finish(h);
        if (!best || better(fin, scored)) {
          best = &h;
          scored = std::move(fin);
        }
      }
    }
    if (!best) throw DecodeError(uncovered_message(root_cat));

    DecodeResult r;
    r.derivation = Derivation(src_ptr_);
    build(r.derivation, *best);
    r.target = apply_derivation(r.derivation).second;
    r.yield = best->yield;
    r.score = scored.score;
    r.loss_args = scored.args;
    r.loss = loss_ ? finalize(*loss_, scored.args) : 0.0;
    r.entries = entries_;
    return r;
  }

 private:
  using Cell = std::map<std::string, std::vector<Hyp>>;

  void synthesize() {
    if (opt_.synthesis == Synthesis::none) return;
    auto add = [&](const SyncRule& r) {
      auto existing = g_.find(r.key());
      if (existing) {
        SyncRule merged = *g_.entry(*existing).rule;
        merged.set_provenance(merged.provenance() | r.provenance());
        local_.add(merged, 0);
        shadowed_.insert(*existing);
      } else {
        local_.add(r, 0);
      }
    };
    for (const auto& r : synthesize_copy_rules(x_)) add(r);
    if (opt_.synthesis == Synthesis::copy_delete)
      for (const auto& r : synthesize_delete_rules(x_)) add(r);
  }

  double rule_score(const SyncRule& r) {
    auto it = rule_scores_.find(&r);
    if (it != rule_scores_.end()) return it->second;
    double s = w_.dot(rule_features(r, x_, x_.root()));
    rule_scores_.emplace(&r, s);
    return s;
  }

  double unigram_estimate(const std::vector<std::string>& yield) const {
    if (!lm_ || w_lm_ == 0.0) return 0.0;
    double s = 0.0;
    std::size_t n = std::min(yield.size(), static_cast<std::size_t>(std::max(order_ - 1, 0)));
    for (std::size_t i = 0; i < n; ++i) s += lm_->unigram(yield[i]);
    return w_lm_ * s;
  }

  // Windows [lo, hi) that are not wholly inside one child's yield.
  static bool fresh(const std::vector<int>& piece, std::size_t lo, std::size_t hi) {
    return !(piece[lo] == piece[hi - 1] && piece[lo] >= 0);
  }

  double new_lm(const std::vector<std::string>& seq, const std::vector<int>& piece) const {
    if (!lm_) return 0.0;
    const std::size_t n = static_cast<std::size_t>(order_);
    double total = 0.0;
    std::span<const std::string> all(seq);
    for (std::size_t hi = n; hi <= seq.size(); ++hi)
      if (fresh(piece, hi - n, hi)) total += lm_->logprob(all.subspan(hi - n, n));
    return total;
  }

  void new_loss_ngrams(const std::vector<std::string>& seq, const std::vector<int>& piece, LossArgs& args) const {
    for (std::size_t n = 1; n <= kLossNgramOrder; ++n)
      for (std::size_t lo = 0; lo + n <= seq.size(); ++lo) {
        if (!fresh(piece, lo, lo + n)) continue;
        if (n == 1 && (seq[lo] == kBos || seq[lo] == kEos)) continue;
        if (n == 2 && seq.size() == 2 && seq[0] == kBos) continue;
        accumulate(*loss_, args,
                   join(std::vector<std::string>(seq.begin() + static_cast<std::ptrdiff_t>(lo),
                                                 seq.begin() + static_cast<std::ptrdiff_t>(lo + n))));
      }
  }

  std::string key_of(const std::string& cat, const Hyp& h) const {
    const std::size_t c = static_cast<std::size_t>(context_);
    std::string k = cat;
    k += " |";
    const auto& y = h.yield;
    if (y.size() <= 2 * c) {
      for (const auto& t : y) k += " " + t;
    } else {
      for (std::size_t i = 0; i < c; ++i) k += " " + y[i];
      k += " ... ";
      for (std::size_t i = y.size() - c; i < y.size(); ++i) k += " " + y[i];
    }
    if (loss_) k += " | " + strata_key(*loss_, h.args);
    return k;
  }

  // Exact rescoring of one combination.
  Hyp combine(const SyncRule& r, NodeId v, const std::vector<const Hyp*>& kids) {
    Hyp h;
    h.rule = nullptr;
    h.anchor = v;
    h.children = kids;
    std::vector<int> piece;
    const Tree& gamma = r.gamma();
    for (NodeId leaf : gamma.leaves()) {
      const Node& n = gamma.node(leaf);
      if (n.kind == NodeKind::terminal) {
        h.yield.push_back(n.label);
        piece.push_back(kRulePiece);
      } else {
        const Hyp& k = *kids[static_cast<std::size_t>(n.link)];
        h.yield.insert(h.yield.end(), k.yield.begin(), k.yield.end());
        piece.insert(piece.end(), k.yield.size(), n.link);
      }
    }
    h.score = rule_score(r);
    for (const Hyp* k : kids) h.score += k->score;
    h.score += w_lm_ * new_lm(h.yield, piece);
    if (loss_) {
      h.args = init_args(*loss_);
      for (const Hyp* k : kids) h.args = treeduce::combine(*loss_, h.args, k->args);
      switch (loss_->spec().kind) {
        case LossKind::hamming_ngram: new_loss_ngrams(h.yield, piece, h.args); break;
        case LossKind::hamming_cfg:
          for (NodeId n : gamma.preorder())
            if (gamma.is_internal(n)) accumulate(*loss_, h.args, production_signature(gamma, n));
          break;
        case LossKind::zero: break;
        default:
          for (std::size_t i = 0; i < h.yield.size(); ++i)
            if (piece[i] == kRulePiece) accumulate(*loss_, h.args, h.yield[i]);
      }
      h.rank = h.score + partial_loss(*loss_, h.args);
    } else {
      h.rank = h.score;
    }
    h.heuristic = h.rank + unigram_estimate(h.yield);
    return h;
  }

  struct Option {
    RulePtr rule;
    std::vector<const std::vector<Hyp>*> lists;
  };

  void fill(NodeId v) {
    // Group applicable rules by target category.
    std::map<std::string, std::vector<Option>> groups;
    auto consider = [&](const RulePtr& r) {
      auto b = match_source(*r, x_, v);
      if (!b) return;
      Option o{r, {}};
      for (std::size_t u = 0; u < b->vars.size(); ++u) {
        const std::string& cat = r->gamma().label(r->gamma_vars()[u]);
        auto it = cells_[b->vars[u]].find(cat);
        if (it == cells_[b->vars[u]].end() || it->second.empty()) return;
        o.lists.push_back(&it->second);
      }
      groups[r->tgt_root()].push_back(std::move(o));
    };
    for (std::size_t i : g_.candidates(x_, v)) {
      if (shadowed_.count(i)) continue;
      consider(g_.entry(i).rule);
    }
    if (local_.size() > 0)
      for (std::size_t i : local_.candidates(x_, v)) consider(local_.entry(i).rule);

    for (auto& [cat, options] : groups) {
      CubeQueue queue;
      for (const Option& o : options) {
        std::vector<std::vector<double>> values;
        for (const auto* list : o.lists) {
          std::vector<double> h;
          for (const Hyp& k : *list) h.push_back(k.heuristic);
          values.push_back(std::move(h));
        }
        double base = rule_score(*o.rule);
        for (NodeId leaf : o.rule->gamma().leaves())
          if (o.rule->gamma().is_terminal(leaf) && lm_ && w_lm_ != 0.0)
            base += w_lm_ * lm_->unigram(o.rule->gamma().label(leaf));
        queue.add_lattice(base, std::move(values));
      }
      std::unordered_map<std::string, Hyp> kept;
      std::size_t popped = 0;
      while (!queue.empty() && popped < opt_.beam.total && kept.size() < opt_.beam.unique) {
        CubeQueue::Item item = queue.pop();
        ++popped;
        const Option& o = options[item.lattice];
        std::vector<const Hyp*> kids;
        for (std::size_t u = 0; u < item.index.size(); ++u) kids.push_back(&(*o.lists[u])[item.index[u]]);
        Hyp h = combine(*o.rule, v, kids);
        h.rule = o.rule;
        std::string key = key_of(cat, h);
        auto it = kept.find(key);
        if (it == kept.end()) kept.emplace(std::move(key), std::move(h));
        else if (better(h, it->second)) it->second = std::move(h);
      }
      std::vector<Hyp> list;
      list.reserve(kept.size());
      for (auto& [k, h] : kept) list.push_back(std::move(h));
      std::sort(list.begin(), list.end(), [](const Hyp& a, const Hyp& b) {
        if (a.heuristic != b.heuristic) return a.heuristic > b.heuristic;
        return better(a, b);
      });
      entries_ += list.size();
      cells_[v].emplace(cat, std::move(list));
    }
  }

  // Root padding: n-1 start tokens and one end token around the yield.
  Hyp finish(const Hyp& h) const {
    Hyp out;
    out.yield = h.yield;
    out.score = h.score;
    out.args = h.args;
    if (lm_) {
      std::vector<std::string> seq(static_cast<std::size_t>(order_ - 1), kBos);
      std::vector<int> piece(seq.size(), kRulePiece);
      seq.insert(seq.end(), h.yield.begin(), h.yield.end());
      piece.insert(piece.end(), h.yield.size(), 0);
      seq.push_back(kEos);
      piece.push_back(kRulePiece);
      out.score += w_lm_ * new_lm(seq, piece);
    }
    out.rank = out.score;
    if (loss_) {
      if (loss_->spec().kind == LossKind::hamming_ngram) {
        std::vector<std::string> seq{kBos};
        std::vector<int> piece{kRulePiece};
        seq.insert(seq.end(), h.yield.begin(), h.yield.end());
        piece.insert(piece.end(), h.yield.size(), 0);
        seq.push_back(kEos);
        piece.push_back(kRulePiece);
        new_loss_ngrams(seq, piece, out.args);
      }
      out.rank += finalize(*loss_, out.args);
    }
    return out;
  }

  int build(Derivation& d, const Hyp& h) const {
    int id = d.add(h.rule, h.anchor);
    std::vector<int> kids;
    for (const Hyp* k : h.children) kids.push_back(build(d, *k));
    d.steps()[static_cast<std::size_t>(id)].children = std::move(kids);
    return id;
  }

  std::string uncovered_message(const std::string& root_cat) const {
    for (NodeId v : x_.postorder()) {
      if (!x_.is_internal(v) || !cells_[v].empty()) continue;
      auto span = yield_span(x_, v);
      std::string where = span ? fmt::format("tokens {}-{}", span->lo, span->hi) : std::string("no tokens");
      return fmt::format("no rule covers source node {} ({}, '{}')", x_.label(v), where,
                         join(yield_tokens(x_, v)));
    }
    return fmt::format("no derivation of the source root reaches target category {}", root_cat);
  }

  std::shared_ptr<const Tree> src_ptr_;
  const Tree& x_;
  const Grammar& g_;
  const WeightVector& w_;
  const NgramModel* lm_;
  const LossReference* loss_;
  DecodeOptions opt_;
  int order_ = 0;
  int context_ = 0;
  double w_lm_ = 0.0;
  Grammar local_;
  std::unordered_set<std::size_t> shadowed_;
  std::unordered_map<const SyncRule*, double> rule_scores_;
  std::vector<Cell> cells_;
  std::size_t entries_ = 0;
};

}  // namespace

DecodeResult decode(std::shared_ptr<const Tree> source, const Grammar& g, const WeightVector& w,
                    const NgramModel* lm, const DecodeOptions& options) {
  return Decoder(std::move(source), g, w, lm, nullptr, options).run();
}

DecodeResult loss_augmented_decode(std::shared_ptr<const Tree> source, const LossReference& reference,
                                   const Grammar& g, const WeightVector& w, const NgramModel* lm,
                                   const DecodeOptions& options) {
  return Decoder(std::move(source), g, w, lm, &reference, options).run();
}

}  // namespace treeduce
