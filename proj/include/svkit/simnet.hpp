#pragma once

#include <utility>
#include <vector>

#include "svkit/checkpoint.hpp"
#include "svkit/corpus.hpp"
#include "svkit/embedding.hpp"
#include "svkit/layers.hpp"
#include "svkit/rng.hpp"
#include "svkit/tensor.hpp"

namespace svkit {

struct SimNetConfig {
  size_t input_dim = 512;   // embedding width fed in, already scaled
  size_t lstm_hidden = 1024;  // per direction, subject to scale_factor
  size_t num_blstm_layers = 2;
  std::vector<size_t> fc_dims = {512, 512};
  double scale_factor = 1.0;

  size_t scaled(size_t dim) const;
  void validate() const;
};

// One LSTM direction. Gate layout along the 4H axis: input, forget,
// cell candidate, output. Forget-gate bias starts at 1.
struct LstmDirection {
  Tensor wx;  // [D x 4H]
  Tensor wh;  // [H x 4H]
  Tensor b;   // [4H]

  void init(size_t in, size_t hidden, Rng& rng);
  void collect(ParamSet& set, const std::string& prefix);
};

/// One cell update; x [B x D], h and c [B x H]. Returns (h', c').
std::pair<Tensor, Tensor> lstm_step(Tape& tape, const Tensor& x, const Tensor& h,
                                    const Tensor& c, const LstmDirection& dir);

// Scores an embedding pair by treating it as a two-step sequence through
// stacked BLSTM layers; the readout concatenates each direction's final
// hidden state and passes through batchnormed relu FC layers to one logit.
class SimilarityNet {
 public:
  SimilarityNet(const SimNetConfig& cfg, Rng& rng);

  /// Batched pair logits; x1 and x2 are [P x D] aligned by row.
  Tensor pair_logits(Tape& tape, const Tensor& x1, const Tensor& x2, Mode mode);

  /// Eval probability with the two presentation orders averaged in logit
  /// space before the sigmoid.
  double pair_probability(const std::vector<double>& a, const std::vector<double>& b);

  /// Order-averaged eval logit, the score used on trial lists.
  double pair_score(const std::vector<double>& a, const std::vector<double>& b);

  ParamSet params();
  const SimNetConfig& config() const { return cfg_; }

 private:
  struct Layer {
    LstmDirection fwd;
    LstmDirection bwd;
  };

  SimNetConfig cfg_;
  size_t hidden_ = 0;
  std::vector<Layer> blstm_;
  std::vector<AffineLayer> fc_;
  std::vector<BatchNormLayer> fc_norms_;
  AffineLayer out_;
};

/// Scores every trial with the similarity net, batching pairs.
std::vector<ScoredTrial> score_trials_simnet(SimilarityNet& net,
                                             const std::vector<Trial>& trials,
                                             const std::vector<Embedding>& embeddings);

}  // namespace svkit
