#include "treeduce/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace treeduce {

namespace {

/// Chart for the max-rule derivation of a tree pair. Cells are indexed by
/// (source node, target node) and filled on demand.
class GoldChart {
 public:
  GoldChart(const Tree& x, const Tree& y, const Grammar& g) : x_(x), y_(y), g_(g), cells_(x.size() * y.size()) {
    std::vector<std::size_t> order(g.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return g.entry(a).rule->key() < g.entry(b).rule->key(); });
    rank_.resize(g.size());
    for (std::size_t r = 0; r < order.size(); ++r) rank_[order[r]] = static_cast<int>(r);
  }

  struct Cell {
    bool done = false;
    bool reachable = false;
    std::size_t entry = 0;
    std::vector<std::pair<NodeId, NodeId>> kids;
    /// Rule ranks in depth-first order; its length is the rule count.
    std::vector<int> sequence;
  };

  const Cell& solve(NodeId vs, NodeId vt) {
    Cell& cell = cells_[index(vs, vt)];
    if (cell.done) return cell;
    cell.done = true;
    if (x_.is_terminal(vs) || y_.is_terminal(vt)) return cell;
    for (std::size_t e : g_.candidates(x_, vs)) {
      const SyncRule& r = *g_.entry(e).rule;
      if (r.tgt_root() != y_.label(vt)) continue;
      auto bs = match_source(r, x_, vs);
      if (!bs) continue;
      auto bt = match_target(r, y_, vt);
      if (!bt) continue;
      std::vector<int> seq{rank_[e]};
      std::vector<std::pair<NodeId, NodeId>> kids;
      bool ok = true;
      for (std::size_t u = 0; u < bs->vars.size() && ok; ++u) {
        const Cell& sub = solve(bs->vars[u], bt->vars[u]);
        ok = sub.reachable;
        if (!ok) break;
        seq.insert(seq.end(), sub.sequence.begin(), sub.sequence.end());
        kids.emplace_back(bs->vars[u], bt->vars[u]);
      }
      if (!ok) continue;
      // The reference may have moved when sub-cells were filled.
      Cell& c = cells_[index(vs, vt)];
      bool better = !c.reachable || seq.size() > c.sequence.size() ||
                    (seq.size() == c.sequence.size() && seq < c.sequence);
      if (better) {
        c.reachable = true;
        c.entry = e;
        c.kids = std::move(kids);
        c.sequence = std::move(seq);
      }
    }
    return cells_[index(vs, vt)];
  }

  int build(Derivation& d, NodeId vs, NodeId vt) {
    const Cell& c = cells_[index(vs, vt)];
    int id = d.add(g_.entry(c.entry).rule, vs);
    std::vector<int> children;
    for (auto [cs, ct] : c.kids) children.push_back(build(d, cs, ct));
    d.steps()[static_cast<std::size_t>(id)].children = std::move(children);
    return id;
  }

 private:
  std::size_t index(NodeId vs, NodeId vt) const {
    return static_cast<std::size_t>(vs) * y_.size() + static_cast<std::size_t>(vt);
  }

  const Tree& x_;
  const Tree& y_;
  const Grammar& g_;
  std::vector<Cell> cells_;
  std::vector<int> rank_;
};

}  // namespace

std::optional<Derivation> gold_derivation(std::shared_ptr<const Tree> x, const Tree& y, const Grammar& g) {
  if (x->empty() || y.empty()) return std::nullopt;
  GoldChart chart(*x, y, g);
  if (!chart.solve(x->root(), y.root()).reachable) return std::nullopt;
  Derivation d(x);
  chart.build(d, x->root(), y.root());
  return d;
}

RestrictedQp::RestrictedQp(std::size_t instances, double C) : blocks_(instances) {
  if (!(C > 0)) throw std::invalid_argument("C must be positive");
  if (instances == 0) throw std::invalid_argument("QP needs at least one instance");
  cap_ = C / static_cast<double>(instances);
  for (Block& b : blocks_) b.idle = cap_;
}

void RestrictedQp::add(std::size_t instance, Constraint c) {
  Block& b = blocks_.at(instance);
  b.norm2.push_back(c.delta.squared_norm());
  b.rows.push_back(std::move(c));
  b.alpha.push_back(0.0);
}

std::size_t RestrictedQp::num_constraints() const {
  std::size_t n = 0;
  for (const Block& b : blocks_) n += b.rows.size();
  return n;
}

double RestrictedQp::slack(std::size_t instance) const {
  double xi = 0.0;
  for (const Constraint& c : blocks_.at(instance).rows) xi = std::max(xi, c.loss - w_.dot(c.delta));
  return xi;
}

double RestrictedQp::primal() const {
  double sum = 0.0;
  for (std::size_t i = 0; i < blocks_.size(); ++i) sum += slack(i);
  return 0.5 * w_.squared_norm() + cap_ * sum;
}

double RestrictedQp::dual() const {
  double lin = 0.0;
  for (const Block& b : blocks_)
    for (std::size_t j = 0; j < b.rows.size(); ++j) lin += b.alpha[j] * b.rows[j].loss;
  return lin - 0.5 * w_.squared_norm();
}

bool RestrictedQp::improve(Block& b, double tolerance) {
  // Index rows.size() stands for the implicit zero constraint.
  const std::size_t idle = b.rows.size();
  std::vector<double> grad(idle + 1, 0.0);
  for (std::size_t j = 0; j < idle; ++j) grad[j] = b.rows[j].loss - w_.dot(b.rows[j].delta);
  auto alpha = [&](std::size_t j) { return j == idle ? b.idle : b.alpha[j]; };
  std::size_t up = idle, down = idle;
  double gmin = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j <= idle; ++j) {
    if (grad[j] > grad[up]) up = j;
    if (alpha(j) > 0 && grad[j] < gmin) {
      gmin = grad[j];
      down = j;
    }
  }
  double diff = grad[up] - gmin;
  if (!(diff > tolerance) || up == down) return false;

  double curvature;
  if (up == idle) curvature = b.norm2[down];
  else if (down == idle) curvature = b.norm2[up];
  else curvature = b.norm2[up] + b.norm2[down] - 2.0 * b.rows[up].delta.dot(b.rows[down].delta);
  double step = curvature > 1e-15 ? std::min(diff / curvature, alpha(down)) : alpha(down);

  if (up == idle) b.idle += step;
  else {
    b.alpha[up] += step;
    w_.add(b.rows[up].delta, step);
  }
  if (down == idle) b.idle = std::max(0.0, b.idle - step);
  else {
    b.alpha[down] = std::max(0.0, b.alpha[down] - step);
    w_.add(b.rows[down].delta, -step);
  }
  return true;
}

double RestrictedQp::gap(const Block& b) const {
  double gmax = 0.0, gmin = b.idle > 0 ? 0.0 : std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < b.rows.size(); ++j) {
    double gj = b.rows[j].loss - w_.dot(b.rows[j].delta);
    gmax = std::max(gmax, gj);
    if (b.alpha[j] > 0) gmin = std::min(gmin, gj);
  }
  return std::isinf(gmin) ? 0.0 : gmax - gmin;
}

RestrictedQp::Stats RestrictedQp::solve(double tolerance, std::size_t max_sweeps) {
  Stats s;
  for (s.sweeps = 1; s.sweeps <= max_sweeps; ++s.sweeps) {
    const std::size_t before = s.updates;
    for (Block& b : blocks_)
      for (std::size_t k = 0; k < 50 * (b.rows.size() + 1) && improve(b, tolerance); ++k) ++s.updates;
    if (s.updates == before) break;
  }
  s.max_gap = 0.0;
  for (const Block& b : blocks_) s.max_gap = std::max(s.max_gap, gap(b));
  if (s.max_gap > tolerance)
    throw TrainingError(fmt::format("QP did not converge after {} sweeps: gap {:.3g} > {:.3g} over {} constraints, "
                                    "primal {:.6g}, dual {:.6g}",
                                    max_sweeps, s.max_gap, tolerance, num_constraints(), primal(), dual()));
  return s;
}

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, n);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<TrainInstance> prepare_instances(const std::vector<std::pair<Tree, Tree>>& pairs, const Grammar& g,
                                             const NgramModel* lm, Synthesis synthesis,
                                             std::vector<std::size_t>* dropped) {
  std::vector<TrainInstance> out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto x = std::make_shared<const Tree>(pairs[i].first);
    const Tree& y = pairs[i].second;
    Grammar full = coverage_grammar(*x, g, synthesis);
    auto gold = gold_derivation(x, y, full);
    if (!gold) {
      spdlog::warn("pair {}: no derivation of the grammar produces the target; skipped", i + 1);
      if (dropped) dropped->push_back(i);
      continue;
    }
    TrainInstance in{x, y, std::move(*gold), {}};
    in.gold_features = derivation_features(in.gold, lm);
    out.push_back(std::move(in));
  }
  return out;
}

TrainResult cutting_plane_train(const std::vector<TrainInstance>& instances, const Grammar& g, const NgramModel* lm,
                                const TrainConfig& config, const std::function<void(const PassLog&)>& on_pass) {
  if (!(config.epsilon > 0)) throw std::invalid_argument("epsilon must be positive");
  if (instances.empty()) throw TrainingError("no training instances");
  const std::size_t n = instances.size();
  RestrictedQp qp(n, config.C);
  TrainResult result;

  for (std::size_t pass = 1; pass <= config.max_passes; ++pass) {
    std::vector<std::optional<Constraint>> found(n);
    std::vector<double> violation(n, 0.0), loss(n, 0.0);
    const WeightVector& w = qp.weights();

    parallel_for(n, config.jobs, [&](std::size_t i) {
      const TrainInstance& in = instances[i];
      LossReference ref(config.loss, in.y);
      DecodeOptions opt;
      opt.beam = config.beam;
      opt.synthesis = config.synthesis;
      opt.tgt_root = in.y.label(in.y.root());
      DecodeResult r = loss_augmented_decode(in.x, ref, g, w, lm, opt);
      FeatureVector delta = in.gold_features - derivation_features(r.derivation, lm);
      double h = r.loss - w.dot(delta);
      double xi = qp.slack(i);
      if (h > xi + config.epsilon) {
        violation[i] = h - xi;
        found[i] = Constraint{std::move(delta), r.loss};
      }
      if (config.track_train_loss) loss[i] = compute_loss(ref, decode(in.x, g, w, lm, opt).target);
    });

    PassLog log;
    log.pass = pass;
    log.min_added_violation = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (!found[i]) continue;
      qp.add(i, std::move(*found[i]));
      ++log.added;
      log.min_added_violation = std::min(log.min_added_violation, violation[i]);
    }
    if (log.added == 0) log.min_added_violation = 0.0;
    log.train_loss = config.track_train_loss ? std::accumulate(loss.begin(), loss.end(), 0.0) / static_cast<double>(n)
                                             : std::numeric_limits<double>::quiet_NaN();
    if (log.added > 0) qp.solve(config.qp_tolerance);
    log.constraints = qp.num_constraints();
    log.objective = qp.primal();
    spdlog::info("pass {}: added {} constraints ({} total), objective {:.6g}{}", log.pass, log.added, log.constraints,
                 log.objective,
                 config.track_train_loss ? fmt::format(", train loss {:.4g}", log.train_loss) : std::string());
    result.passes.push_back(log);
    if (on_pass) on_pass(log);
    if (log.added == 0) {
      result.converged = true;
      break;
    }
  }
  result.weights = qp.weights();
  return result;
}

}  // namespace treeduce
