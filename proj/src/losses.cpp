#include "svkit/losses.hpp"

#include <cmath>

#include "svkit/errors.hpp"

namespace svkit {

void LossWeights::validate() const {
  if (alpha < 0 || beta < 0 || gamma < 0)
    throw Error(ErrorCategory::kConfig, "loss weights must be non-negative");
  if (margin <= 0) throw Error(ErrorCategory::kConfig, "triplet margin must be positive");
  if (triplet_source != 'A' && triplet_source != 'B')
    throw Error(ErrorCategory::kConfig, "triplet source embedding must be A or B");
}

Tensor cross_entropy_loss(Tape& tape, const Tensor& logits, const std::vector<int>& labels) {
  return tape.cross_entropy(logits, labels);
}

double euclidean_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size())
    throw Error(ErrorCategory::kDimension, "euclidean_distance: length mismatch");
  double sq = 0.0;
  for (size_t i = 0; i < a.size(); ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(sq);
}

Tensor triplet_loss(Tape& tape, const TripletBatch& batch, double margin) {
  const Tensor& a = batch.anchors;
  const Tensor& p = batch.positives;
  const Tensor& n = batch.negatives;
  if (!a.same_shape(p) || !a.same_shape(n))
    throw Error(ErrorCategory::kDimension, "triplet batch tensors must share one shape");
  if (a.ndim() != 2)
    throw Error(ErrorCategory::kDimension, "triplet batch tensors must be rank 2");
  Tensor d_ap = tape.sum(tape.square(tape.sub(a, p)), 1);  // [B x 1]
  Tensor d_an = tape.sum(tape.square(tape.sub(a, n)), 1);
  Tensor hinge = tape.relu(tape.add(tape.sub(d_ap, d_an), margin));
  return tape.mean(hinge);
}

Tensor similarity_loss(Tape& tape, const Tensor& logits, const std::vector<double>& targets) {
  return tape.bce_with_logits(logits, targets);
}

Tensor joint_loss(Tape& tape, const Tensor& ce, const Tensor& triplet, const Tensor& sim,
                  const LossWeights& w) {
  w.validate();
  auto check_term = [](const Tensor& t, double weight, const char* name) {
    if (!t.defined() && weight != 0.0)
      throw Error(ErrorCategory::kContract,
                  std::string("joint_loss: ") + name + " term missing but its weight is nonzero");
    if (t.defined() && t.size() != 1)
      throw Error(ErrorCategory::kDimension,
                  std::string("joint_loss: ") + name + " term must be scalar");
  };
  check_term(ce, w.alpha, "cross-entropy");
  check_term(triplet, w.beta, "triplet");
  check_term(sim, w.gamma, "similarity");

  Tensor total;
  auto accumulate = [&](const Tensor& term, double weight) {
    if (!term.defined() || weight == 0.0) return;
    Tensor scaled = tape.scale(term, weight);
    total = total.defined() ? tape.add(total, scaled) : scaled;
  };
  accumulate(ce, w.alpha);
  accumulate(triplet, w.beta);
  accumulate(sim, w.gamma);
  if (!total.defined())
    throw Error(ErrorCategory::kContract, "joint_loss: every term is disabled");
  return total;
}

Tensor maybe_l2_normalize(Tape& tape, const Tensor& rows, bool enabled) {
  if (!enabled) return rows;
  return tape.rows_l2_normalize(rows);
}

}  // namespace svkit
