#pragma once

#include <string>
#include <vector>

#include "svkit/checkpoint.hpp"
#include "svkit/corpus.hpp"
#include "svkit/embedding.hpp"
#include "svkit/features.hpp"
#include "svkit/layers.hpp"
#include "svkit/rng.hpp"
#include "svkit/tensor.hpp"

namespace svkit {

struct XVectorConfig {
  size_t feat_dim = 23;
  std::vector<size_t> frame_dims = {512, 512, 512, 512, 1500};
  std::vector<std::vector<int>> contexts = {
      {-2, -1, 0, 1, 2}, {-2, 0, 2}, {-3, 0, 3}, {0}, {0}};
  size_t embed_dim = 512;
  size_t num_speakers = 0;
  double scale_factor = 1.0;

  size_t scaled(size_t dim) const;
  /// Frames consumed by the valid (unpadded) splicing stack.
  size_t min_frames() const;
  void validate() const;
};

// Frame-level TDNN, statistics pooling, and the segment-level stack:
//   embedding A = affine(pool)            (pre-activation)
//   hidden      = relu(batchnorm(embA))
//   embedding B = affine(hidden)          (pre-activation)
//   logits      = affine(relu(batchnorm(embB)))
class XVectorNet {
 public:
  XVectorNet(const XVectorConfig& cfg, Rng& rng);

  /// Frame stack on one utterance's features [T x F] -> [T' x D5].
  Tensor forward_frames(Tape& tape, const Tensor& feats, Mode mode);

  /// Mean and stddev over frames -> [1 x 2*D5].
  Tensor stats_pool(Tape& tape, const Tensor& frames) const;

  struct SegmentOut {
    Tensor emb_a;
    Tensor emb_b;
    Tensor logits;
  };

  /// Segment stack on pooled rows [B x 2*D5]. `l2_normalize` rescales
  /// embedding A before everything downstream.
  SegmentOut forward_pooled(Tape& tape, const Tensor& pooled, Mode mode, bool l2_normalize);

  /// Whole pipeline for one utterance.
  SegmentOut forward_utterance(Tape& tape, const FeatureMatrix& feats, Mode mode,
                               bool l2_normalize = false);

  /// Eval-mode embedding of one utterance; `source` is 'A' or 'B'.
  std::vector<double> extract(const FeatureMatrix& feats, char source = 'A');

  ParamSet params();
  const XVectorConfig& config() const { return cfg_; }
  size_t frame_out_dim() const { return frame_affines_.back().w.cols(); }

 private:
  Tensor splice(Tape& tape, const Tensor& x, const std::vector<int>& offsets) const;

  XVectorConfig cfg_;
  std::vector<AffineLayer> frame_affines_;
  std::vector<BatchNormLayer> frame_norms_;
  AffineLayer emb_a_;
  BatchNormLayer norm_a_;
  AffineLayer emb_b_;
  BatchNormLayer norm_b_;
  AffineLayer softmax_;
};

/// Eval-mode embeddings for every manifest utterance, in manifest order.
std::vector<Embedding> extract_embeddings(XVectorNet& net,
                                          const std::vector<ManifestEntry>& manifest,
                                          const std::string& feature_dir, char source);

}  // namespace svkit
