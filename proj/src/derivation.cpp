#include "treeduce/derivation.hpp"

#include <algorithm>
#include <map>

namespace treeduce {

int Derivation::add(RulePtr rule, NodeId anchor, std::vector<int> children) {
  steps_.push_back({std::move(rule), anchor, std::move(children)});
  return static_cast<int>(steps_.size()) - 1;
}

std::vector<int> Derivation::preorder() const {
  std::vector<int> out;
  if (steps_.empty()) return out;
  std::vector<int> stack{0};
  std::vector<bool> seen(steps_.size(), false);
  while (!stack.empty()) {
    int s = stack.back();
    stack.pop_back();
    if (s < 0 || static_cast<std::size_t>(s) >= steps_.size() || seen[s])
      throw DerivationError("derivation step graph is not a tree");
    seen[s] = true;
    out.push_back(s);
    const auto& ch = steps_[s].children;
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
  return out;
}

std::vector<std::string> Derivation::rule_sequence() const {
  std::vector<std::string> out;
  for (int s : preorder()) out.push_back(steps_[s].rule->key());
  return out;
}

namespace {

class Replayer {
 public:
  explicit Replayer(const Derivation& d) : d_(d), x_(d.source()), used_(d.size(), false) {}

  std::pair<Tree, Tree> run() {
    if (d_.empty()) throw DerivationError("empty derivation");
    if (d_.steps()[0].anchor != x_.root()) throw DerivationError("first step is not anchored at the source root");
    NodeId s = source_step(0, kNoNode);
    src_.set_root(s);
    src_.finalize();
    NodeId t = target_step(0, kNoNode);
    tgt_.set_root(t);
    tgt_.finalize();
    for (std::size_t i = 0; i < used_.size(); ++i)
      if (!used_[i]) throw DerivationError("step " + std::to_string(i) + " is unreachable");
    return {std::move(src_), std::move(tgt_)};
  }

 private:
  const DerivationStep& step(int i) const {
    if (i < 0 || static_cast<std::size_t>(i) >= d_.size())
      throw DerivationError("dangling step reference " + std::to_string(i));
    return d_.steps()[static_cast<std::size_t>(i)];
  }

  NodeId copy_source(NodeId n, NodeId parent) {
    NodeId c = src_.add_node(x_.label(n), x_.node(n).kind);
    if (parent != kNoNode) src_.add_child(parent, c);
    for (NodeId ch : x_.children(n)) copy_source(ch, c);
    return c;
  }

  NodeId source_step(int i, NodeId parent) {
    const DerivationStep& st = step(i);
    if (used_[i]) throw DerivationError("step " + std::to_string(i) + " used twice");
    used_[i] = true;
    const SyncRule& r = *st.rule;
    auto b = match_source(r, x_, st.anchor);
    if (!b) throw DerivationError("rule '" + r.key() + "' does not match the source at its anchor");
    if (st.children.size() != static_cast<std::size_t>(r.num_vars()))
      throw DerivationError("rule '" + r.key() + "' has " + std::to_string(r.num_vars()) + " variables but " +
                            std::to_string(st.children.size()) + " children");
    for (int v = 0; v < r.num_vars(); ++v) {
      const DerivationStep& child = step(st.children[v]);
      if (child.anchor != b->vars[v])
        throw DerivationError("variable " + std::to_string(v + 1) + " of '" + r.key() + "' is anchored elsewhere");
      if (child.rule->tgt_root() != r.gamma().label(r.gamma_vars()[v]))
        throw DerivationError("variable " + std::to_string(v + 1) + " of '" + r.key() + "' needs target " +
                              r.gamma().label(r.gamma_vars()[v]) + ", got " + child.rule->tgt_root());
    }
    std::size_t next_deleted = 0;
    return copy_alpha(r, r.alpha().root(), parent, st, *b, next_deleted);
  }

  NodeId copy_alpha(const SyncRule& r, NodeId a, NodeId parent, const DerivationStep& st, const Binding& b,
                    std::size_t& next_deleted) {
    const Node& n = r.alpha().node(a);
    if (n.kind == NodeKind::frontier) {
      if (n.link == kEpsilon) return copy_source(b.deleted[next_deleted++], parent);
      return source_step(st.children[n.link], parent);
    }
    NodeId c = src_.add_node(n.label, n.kind);
    if (parent != kNoNode) src_.add_child(parent, c);
    for (NodeId ch : n.children) copy_alpha(r, ch, c, st, b, next_deleted);
    return c;
  }

  NodeId target_step(int i, NodeId parent) {
    const DerivationStep& st = step(i);
    return copy_gamma(*st.rule, st.rule->gamma().root(), parent, st);
  }

  NodeId copy_gamma(const SyncRule& r, NodeId g, NodeId parent, const DerivationStep& st) {
    const Node& n = r.gamma().node(g);
    if (n.kind == NodeKind::frontier) return target_step(st.children[n.link], parent);
    NodeId c = tgt_.add_node(n.label, n.kind);
    if (parent != kNoNode) tgt_.add_child(parent, c);
    for (NodeId ch : n.children) copy_gamma(r, ch, c, st);
    return c;
  }

  const Derivation& d_;
  const Tree& x_;
  std::vector<bool> used_;
  Tree src_, tgt_;
};

}  // namespace

std::pair<Tree, Tree> apply_derivation(const Derivation& d) {
  if (!d.source_ptr()) throw DerivationError("derivation has no source tree");
  return Replayer(d).run();
}

std::vector<std::string> target_yield(const Derivation& d) { return yield_tokens(apply_derivation(d).second); }

namespace {

class Sampler {
 public:
  Sampler(const Grammar& g, const RuleChooser& chooser, const SampleOptions& opt)
      : g_(g), chooser_(chooser), opt_(opt) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      const SyncRule& r = *g.entry(i).rule;
      by_pair_[{r.src_root(), r.tgt_root()}].push_back(i);
      by_src_[r.src_root()].push_back(i);
    }
  }

  std::pair<Tree, Tree> run() {
    std::string rs = opt_.src_root.empty() ? g_.src_root_symbol : opt_.src_root;
    std::string rt = opt_.tgt_root.empty() ? g_.tgt_root_symbol : opt_.tgt_root;
    if (rs.empty() || rt.empty()) throw DerivationError("sampling needs root symbols");
    auto [s, t] = expand(rs, rt, kNoNode);
    x_.set_root(s);
    y_.set_root(t);
    x_.finalize();
    y_.finalize();
    return {std::move(x_), std::move(y_)};
  }

 private:
  const SyncRule& choose(const std::string& src, const std::string* tgt) {
    static const std::vector<std::size_t> kNone;
    const std::vector<std::size_t>* cands = &kNone;
    if (tgt) {
      auto it = by_pair_.find({src, *tgt});
      if (it != by_pair_.end()) cands = &it->second;
    } else {
      auto it = by_src_.find(src);
      if (it != by_src_.end()) cands = &it->second;
    }
    std::string what = tgt ? src + "/" + *tgt : src + "/ε";
    if (cands->empty()) throw DerivationError("no rule rewrites " + what);
    auto pick = chooser_(*cands, tgt == nullptr);
    if (!pick) throw DerivationError("chooser gave up at " + what);
    if (std::find(cands->begin(), cands->end(), *pick) == cands->end())
      throw DerivationError("chooser picked a rule that does not rewrite " + what);
    return *g_.entry(*pick).rule;
  }

  void check_size() const {
    if (x_.size() > opt_.max_nodes || y_.size() > opt_.max_nodes)
      throw DerivationError("sampled trees exceed " + std::to_string(opt_.max_nodes) + " nodes");
  }

  // Expands a linked pair. The source subtree hangs under `sp`; the target
  // subtree is returned detached so the caller can place it in gamma order.
  std::pair<NodeId, NodeId> expand(const std::string& src, const std::string& tgt, NodeId sp) {
    const SyncRule& r = choose(src, &tgt);
    std::vector<NodeId> var_tgt(static_cast<std::size_t>(r.num_vars()), kNoNode);
    NodeId s = build_alpha(r, r.alpha().root(), sp, &var_tgt);
    NodeId t = build_gamma(r, r.gamma().root(), var_tgt);
    return {s, t};
  }

  NodeId expand_source_only(const std::string& src, NodeId sp) {
    const SyncRule& r = choose(src, nullptr);
    return build_alpha(r, r.alpha().root(), sp, nullptr);
  }

  // Null var_tgt means a deleted subtree: every frontier expands source-only.
  NodeId build_alpha(const SyncRule& r, NodeId a, NodeId parent, std::vector<NodeId>* var_tgt) {
    check_size();
    const Node& n = r.alpha().node(a);
    if (n.kind == NodeKind::frontier) {
      if (n.link == kEpsilon || !var_tgt) return expand_source_only(n.label, parent);
      const std::string& tgt = r.gamma().label(r.gamma_vars()[static_cast<std::size_t>(n.link)]);
      auto [s, t] = expand(n.label, tgt, parent);
      (*var_tgt)[static_cast<std::size_t>(n.link)] = t;
      return s;
    }
    NodeId c = x_.add_node(n.label, n.kind);
    if (parent != kNoNode) x_.add_child(parent, c);
    for (NodeId ch : n.children) build_alpha(r, ch, c, var_tgt);
    return c;
  }

  NodeId build_gamma(const SyncRule& r, NodeId g, const std::vector<NodeId>& var_tgt) {
    check_size();
    const Node& n = r.gamma().node(g);
    if (n.kind == NodeKind::frontier) return var_tgt[static_cast<std::size_t>(n.link)];
    NodeId c = y_.add_node(n.label, n.kind);
    for (NodeId ch : n.children) y_.add_child(c, build_gamma(r, ch, var_tgt));
    return c;
  }

  const Grammar& g_;
  const RuleChooser& chooser_;
  SampleOptions opt_;
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> by_pair_;
  std::map<std::string, std::vector<std::size_t>> by_src_;
  Tree x_, y_;
};

}  // namespace

std::pair<Tree, Tree> sample_pair(const Grammar& g, const RuleChooser& chooser, const SampleOptions& options) {
  return Sampler(g, chooser, options).run();
}

RuleChooser uniform_chooser(std::mt19937_64& rng) {
  return [&rng](const std::vector<std::size_t>& candidates, bool) -> std::optional<std::size_t> {
    if (candidates.empty()) return std::nullopt;
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    return candidates[pick(rng)];
  };
}

}  // namespace treeduce
