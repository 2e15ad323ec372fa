#pragma once

#include <map>
#include <string>
#include <vector>

#include "treeduce/tree.hpp"

namespace treeduce {

enum class LossKind { hamming_token, hamming_ngram, hamming_cfg, edit, f1, zero };

struct LossSpec {
  LossKind kind = LossKind::hamming_token;
  /// Multiplies the short-output penalty of the Hamming losses.
  double scale = 1.0;
  /// Multiplies every loss value, balancing the loss against feature
  /// magnitudes.
  double factor = 1.0;
};

/// `spec` with its loss values multiplied by `factor` (> 0).
LossSpec scale_loss(LossSpec spec, double factor);

/// "hamming-token", "hamming-ngram", "hamming-cfg", "edit", "f1", "zero".
std::string loss_kind_name(LossKind kind);
LossKind parse_loss_kind(const std::string& name);

bool is_hamming(LossKind kind);

/// Longest ngram counted by the ngram loss.
inline constexpr int kLossNgramOrder = 3;

/// Items a target tree contributes under `kind`: tokens, padded ngrams of
/// order 1-3 with at least one real token, or productions.
std::vector<std::string> loss_items(LossKind kind, const Tree& target);
/// The same from a token string; the cfg loss has no string form and throws.
std::vector<std::string> loss_items(LossKind kind, const std::vector<std::string>& tokens);
std::vector<std::string> ngram_items(const std::vector<std::string>& tokens);
/// Productions of every internal node, in pre-order.
std::vector<std::string> cfg_items(const Tree& target);

/// The reference side of a loss: item inventory and counts, fixed for one
/// training instance.
class LossReference {
 public:
  LossReference() = default;
  LossReference(LossSpec spec, const Tree& reference);
  LossReference(LossSpec spec, const std::vector<std::string>& reference);

  const LossSpec& spec() const { return spec_; }
  /// Number of reference items (l for Hamming, the reference total for edit
  /// and F1).
  int length() const { return length_; }
  bool contains(const std::string& item) const { return index_.count(item) > 0; }
  /// Cell of a reference type, or -1.
  int type_index(const std::string& item) const;
  int type_count(int type) const { return counts_[static_cast<std::size_t>(type)]; }
  int num_types() const { return static_cast<int>(counts_.size()); }
  const std::vector<std::string>& types() const { return types_; }

 private:
  void init(const std::vector<std::string>& items);

  LossSpec spec_;
  int length_ = 0;
  std::vector<std::string> types_;
  std::vector<int> counts_;
  std::map<std::string, int> index_;
};

/// Decomposable loss arguments. Hamming kinds use tp/fp. Edit and F1 use
/// `cells`: one clipped count per reference type, then one overflow cell
/// holding predictions beyond the reference counts.
struct LossArgs {
  int tp = 0;
  int fp = 0;
  std::vector<int> cells;

  friend bool operator==(const LossArgs&, const LossArgs&) = default;
};

LossArgs init_args(const LossReference& ref);
void accumulate(const LossReference& ref, LossArgs& args, const std::vector<std::string>& items);
void accumulate(const LossReference& ref, LossArgs& args, const std::string& item);
/// Arguments of the union of two disjoint item bags.
LossArgs combine(const LossReference& ref, const LossArgs& a, const LossArgs& b);
double finalize(const LossReference& ref, const LossArgs& args);
/// Part of the final loss already certain, used to rank partial hypotheses.
double partial_loss(const LossReference& ref, const LossArgs& args);
std::string strata_key(const LossReference& ref, const LossArgs& args);

/// Loss of a whole predicted target tree.
double compute_loss(const LossReference& ref, const Tree& predicted);
double compute_loss(const LossReference& ref, const std::vector<std::string>& predicted);

}  // namespace treeduce
