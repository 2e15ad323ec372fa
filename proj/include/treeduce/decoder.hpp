#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "treeduce/derivation.hpp"
#include "treeduce/features.hpp"
#include "treeduce/grammar.hpp"
#include "treeduce/lm.hpp"
#include "treeduce/losses.hpp"

namespace treeduce {

class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per (source node, target category) limits: distinct chart keys kept and
/// candidates examined.
struct BeamSpec {
  std::size_t unique = 200;
  std::size_t total = 500;

  static BeamSpec infinite() {
    return {std::numeric_limits<std::size_t>::max(), std::numeric_limits<std::size_t>::max()};
  }
  static BeamSpec model_selection() { return {100, 200}; }
};

/// Which coverage rules are built from the input tree before decoding.
enum class Synthesis { copy_delete, copy, none };
Synthesis parse_synthesis(const std::string& name);
std::string synthesis_name(Synthesis s);

struct DecodeOptions {
  BeamSpec beam;
  Synthesis synthesis = Synthesis::copy_delete;
  /// Target root category; empty means the grammar's, else the source root
  /// label.
  std::string tgt_root;
};

struct DecodeResult {
  Derivation derivation;
  Tree target;
  std::vector<std::string> yield;
  /// Model score <w, Psi(d)>.
  double score = 0.0;
  /// Loss against the reference; zero for plain decoding.
  double loss = 0.0;
  LossArgs loss_args;
  /// Chart entries created, a rough effort measure.
  std::size_t entries = 0;
};

/// Best-first enumeration of index combinations over several lattices, each
/// a product of descending-sorted lists. A combination's priority is the
/// lattice base plus the sum of the chosen list values.
class CubeQueue {
 public:
  struct Item {
    std::size_t lattice = 0;
    std::vector<std::size_t> index;
    double priority = 0.0;
  };

  /// `values[u]` must be sorted in descending order and non-empty.
  void add_lattice(double base, std::vector<std::vector<double>> values);
  bool empty() const { return heap_.empty(); }
  /// Removes the best remaining combination and queues its neighbours.
  Item pop();

 private:
  struct Lattice {
    double base = 0.0;
    std::vector<std::vector<double>> values;
  };
  struct Order {
    bool operator()(const Item& a, const Item& b) const;
  };
  double priority(const Lattice& l, const std::vector<std::size_t>& index) const;
  void push(std::size_t lattice, std::vector<std::size_t> index);

  std::vector<Lattice> lattices_;
  std::priority_queue<Item, std::vector<Item>, Order> heap_;
  std::vector<std::vector<std::vector<std::size_t>>> seen_;
};

/// Highest-scoring derivation of `source` under `g`, coverage rules
/// synthesized per `options`. `lm` may be null, in which case no ngram
/// feature is scored. Throws DecodeError when no derivation covers the
/// source.
DecodeResult decode(std::shared_ptr<const Tree> source, const Grammar& g, const WeightVector& w,
                    const NgramModel* lm, const DecodeOptions& options = {});

/// Maximizes loss plus model score.
DecodeResult loss_augmented_decode(std::shared_ptr<const Tree> source, const LossReference& reference,
                                   const Grammar& g, const WeightVector& w, const NgramModel* lm,
                                   const DecodeOptions& options = {});

/// The grammar actually searched for `source`: `g` plus synthesized coverage
/// rules (provenance merged with any identical rule of `g`).
Grammar coverage_grammar(const Tree& source, const Grammar& g, Synthesis synthesis);

}  // namespace treeduce
