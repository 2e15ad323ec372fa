#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "treeduce/decoder.hpp"
#include "treeduce/derivation.hpp"
#include "treeduce/features.hpp"
#include "treeduce/grammar.hpp"
#include "treeduce/lm.hpp"
#include "treeduce/losses.hpp"

namespace treeduce {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Derivation of (x, y) under `g` using the most rules; among those, the one
/// whose depth-first rule key sequence is lexicographically smallest.
/// nullopt when no derivation of `g` produces y from x.
std::optional<Derivation> gold_derivation(std::shared_ptr<const Tree> x, const Tree& y, const Grammar& g);

/// One margin constraint <w, delta> >= loss - xi.
struct Constraint {
  FeatureVector delta;
  double loss = 0.0;
};

/// The n-slack working-set QP
///
///   min 1/2 |w|^2 + C/n sum_i xi_i  s.t.  <w, delta> >= loss - xi_i
///
/// solved in the dual by pairwise coordinate ascent within each instance's
/// constraint block. Multipliers stay non-negative and sum to at most C/n per
/// instance.
class RestrictedQp {
 public:
  RestrictedQp(std::size_t instances, double C);

  void add(std::size_t instance, Constraint c);

  struct Stats {
    std::size_t sweeps = 0;
    std::size_t updates = 0;
    /// Largest remaining gap between the most and least attractive
    /// constraint of any instance.
    double max_gap = 0.0;
  };
  /// Throws TrainingError when the gap is still above `tolerance` after
  /// `max_sweeps` sweeps.
  Stats solve(double tolerance = 1e-6, std::size_t max_sweeps = 100000);

  const WeightVector& weights() const { return w_; }
  /// max(0, max_j loss_j - <w, delta_j>) over the instance's constraints.
  double slack(std::size_t instance) const;
  double primal() const;
  double dual() const;
  /// Multiplier per constraint of `instance`, in insertion order.
  const std::vector<double>& multipliers(std::size_t instance) const { return blocks_.at(instance).alpha; }
  const std::vector<Constraint>& constraints(std::size_t instance) const { return blocks_.at(instance).rows; }
  std::size_t num_constraints() const;
  double cap() const { return cap_; }

 private:
  struct Block {
    std::vector<Constraint> rows;
    std::vector<double> alpha;
    std::vector<double> norm2;
    /// Multiplier of the implicit zero constraint; the block sums to cap.
    double idle = 0.0;
  };
  double gap(const Block& b) const;
  bool improve(Block& b, double tolerance);

  double cap_;
  std::vector<Block> blocks_;
  WeightVector w_;
};

struct TrainConfig {
  double C = 0.01;
  LossSpec loss;
  double epsilon = 1e-3;
  std::size_t max_passes = 100;
  BeamSpec beam;
  Synthesis synthesis = Synthesis::copy_delete;
  std::size_t jobs = 1;
  double qp_tolerance = 1e-6;
  /// Decode every instance after each pass to report the training loss.
  bool track_train_loss = true;
};

struct TrainInstance {
  std::shared_ptr<const Tree> x;
  Tree y;
  Derivation gold;
  FeatureVector gold_features;
};

/// Pairs with their gold derivations, found in the grammar the decoder will
/// search (so rule provenance agrees). Unreachable pairs are skipped with a
/// warning; their indices are appended to `dropped` when given.
std::vector<TrainInstance> prepare_instances(const std::vector<std::pair<Tree, Tree>>& pairs, const Grammar& g,
                                             const NgramModel* lm, Synthesis synthesis,
                                             std::vector<std::size_t>* dropped = nullptr);

struct PassLog {
  std::size_t pass = 0;
  std::size_t added = 0;
  std::size_t constraints = 0;
  double objective = 0.0;
  /// Mean loss of plain decoding before this pass's re-solve; NaN when not
  /// tracked.
  double train_loss = 0.0;
  /// Smallest violation among the constraints added this pass.
  double min_added_violation = 0.0;
};

struct TrainResult {
  WeightVector weights;
  std::vector<PassLog> passes;
  bool converged = false;
};

/// Cutting-plane training with margin rescaling. Each pass finds the most
/// violated constraint of every instance under the current weights, adds
/// those violated by more than epsilon beyond the instance's slack and
/// re-solves once. Stops when a pass adds nothing or after max_passes.
TrainResult cutting_plane_train(const std::vector<TrainInstance>& instances, const Grammar& g, const NgramModel* lm,
                                const TrainConfig& config,
                                const std::function<void(const PassLog&)>& on_pass = {});

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first exception
/// is rethrown after all threads finish.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

}  // namespace treeduce
