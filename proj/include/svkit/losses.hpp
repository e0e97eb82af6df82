#pragma once

#include <vector>

#include "svkit/tensor.hpp"

namespace svkit {

// Joint objective weights. alpha scales cross-entropy, beta the triplet
// term, gamma the similarity term; a zero weight disables its branch.
struct LossWeights {
  double alpha = 1.0;
  double beta = 0.1;
  double gamma = 0.3;
  double margin = 0.8;
  bool l2_normalize = false;
  char triplet_source = 'A';  // embedding fed to the triplet loss: 'A' or 'B'

  void validate() const;
};

// Row-aligned (anchor, positive, negative) embeddings, one triplet per row.
struct TripletBatch {
  Tensor anchors;
  Tensor positives;
  Tensor negatives;
};

/// Mean -log softmax[label]; thin wrapper kept for a stable entry point.
Tensor cross_entropy_loss(Tape& tape, const Tensor& logits, const std::vector<int>& labels);

/// Plain Euclidean distance between equal-length vectors.
double euclidean_distance(const std::vector<double>& a, const std::vector<double>& b);

/// mean over rows of max(0, ||a-p||^2 - ||a-n||^2 + margin).
Tensor triplet_loss(Tape& tape, const TripletBatch& batch, double margin);

/// Mean logit-space binary cross-entropy.
Tensor similarity_loss(Tape& tape, const Tensor& logits, const std::vector<double>& targets);

/// alpha*ce + beta*triplet + gamma*sim. Undefined tensors contribute 0 and
/// must only be undefined when their weight is 0.
Tensor joint_loss(Tape& tape, const Tensor& ce, const Tensor& triplet, const Tensor& sim,
                  const LossWeights& w);

/// Row-wise l2 normalization when enabled, identity otherwise.
Tensor maybe_l2_normalize(Tape& tape, const Tensor& rows, bool enabled);

}  // namespace svkit
