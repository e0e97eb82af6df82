#include "svkit/xvector.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "svkit/errors.hpp"
#include "svkit/losses.hpp"

namespace svkit {

size_t XVectorConfig::scaled(size_t dim) const {
  const auto s = static_cast<size_t>(std::lround(static_cast<double>(dim) * scale_factor));
  return std::max<size_t>(2, s);
}

size_t XVectorConfig::min_frames() const {
  size_t span = 1;
  for (const auto& ctx : contexts) {
    const auto [lo, hi] = std::minmax_element(ctx.begin(), ctx.end());
    span += static_cast<size_t>(*hi - *lo);
  }
  return span;
}

void XVectorConfig::validate() const {
  if (feat_dim == 0) throw Error(ErrorCategory::kConfig, "feat_dim must be positive");
  if (frame_dims.empty() || frame_dims.size() != contexts.size())
    throw Error(ErrorCategory::kConfig, "frame layer dims and contexts must align");
  for (const auto& ctx : contexts) {
    if (ctx.empty()) throw Error(ErrorCategory::kConfig, "empty splice context");
    for (size_t i = 1; i < ctx.size(); ++i)
      if (ctx[i] <= ctx[i - 1])
        throw Error(ErrorCategory::kConfig, "splice offsets must be strictly increasing");
  }
  if (embed_dim == 0) throw Error(ErrorCategory::kConfig, "embed_dim must be positive");
  if (num_speakers < 2)
    throw Error(ErrorCategory::kConfig, "the softmax needs at least 2 speakers");
  if (scale_factor <= 0 || scale_factor > 1)
    throw Error(ErrorCategory::kConfig, "scale_factor must lie in (0, 1]");
}

XVectorNet::XVectorNet(const XVectorConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg_.validate();
  size_t prev = cfg_.feat_dim;
  for (size_t i = 0; i < cfg_.frame_dims.size(); ++i) {
    const size_t out = cfg_.scaled(cfg_.frame_dims[i]);
    AffineLayer aff;
    aff.init(prev * cfg_.contexts[i].size(), out, rng);
    frame_affines_.push_back(std::move(aff));
    BatchNormLayer bn;
    bn.init(out);
    frame_norms_.push_back(std::move(bn));
    prev = out;
  }
  const size_t emb = cfg_.scaled(cfg_.embed_dim);
  emb_a_.init(2 * prev, emb, rng);
  norm_a_.init(emb);
  emb_b_.init(emb, emb, rng);
  norm_b_.init(emb);
  softmax_.init(emb, cfg_.num_speakers, rng);
}

Tensor XVectorNet::splice(Tape& tape, const Tensor& x, const std::vector<int>& offsets) const {
  const long t = static_cast<long>(x.rows());
  const long lo = offsets.front(), hi = offsets.back();
  const long out_t = t - (hi - lo);
  if (out_t < 1)
    throw Error(ErrorCategory::kContext,
                "utterance too short for the splice stack: " + std::to_string(t) +
                    " frames where at least " + std::to_string(cfg_.min_frames()) +
                    " are required");
  if (offsets.size() == 1) return x;
  std::vector<Tensor> taps;
  taps.reserve(offsets.size());
  for (int off : offsets) {
    const size_t start = static_cast<size_t>(off - lo);
    taps.push_back(tape.slice(x, 0, start, start + static_cast<size_t>(out_t)));
  }
  return tape.concat(taps, 1);
}

Tensor XVectorNet::forward_frames(Tape& tape, const Tensor& feats, Mode mode) {
  if (feats.ndim() != 2 || feats.cols() != cfg_.feat_dim)
    throw Error(ErrorCategory::kDimension,
                "feature dimension " + std::to_string(feats.cols()) + " does not match feat_dim " +
                    std::to_string(cfg_.feat_dim));
  if (feats.rows() < cfg_.min_frames())
    throw Error(ErrorCategory::kContext,
                "utterance too short for the splice stack: " + std::to_string(feats.rows()) +
                    " frames where at least " + std::to_string(cfg_.min_frames()) +
                    " are required");
  Tensor h = feats;
  for (size_t i = 0; i < frame_affines_.size(); ++i) {
    Tensor spliced = splice(tape, h, cfg_.contexts[i]);
    h = tape.relu(frame_norms_[i].apply(tape, frame_affines_[i].apply(tape, spliced), mode));
  }
  return h;
}

Tensor XVectorNet::stats_pool(Tape& tape, const Tensor& frames) const {
  if (frames.rows() < 2)
    throw Error(ErrorCategory::kPooling, "statistics pooling needs at least 2 frames");
  Tensor mu = tape.mean(frames, 0);
  Tensor sd = tape.stddev(frames, 0);
  return tape.concat({mu, sd}, 1);
}

XVectorNet::SegmentOut XVectorNet::forward_pooled(Tape& tape, const Tensor& pooled, Mode mode,
                                                  bool l2_normalize) {
  SegmentOut out;
  out.emb_a = maybe_l2_normalize(tape, emb_a_.apply(tape, pooled), l2_normalize);
  Tensor h = tape.relu(norm_a_.apply(tape, out.emb_a, mode));
  out.emb_b = emb_b_.apply(tape, h);
  Tensor h2 = tape.relu(norm_b_.apply(tape, out.emb_b, mode));
  out.logits = softmax_.apply(tape, h2);
  return out;
}

XVectorNet::SegmentOut XVectorNet::forward_utterance(Tape& tape, const FeatureMatrix& feats,
                                                     Mode mode, bool l2_normalize) {
  if (mode == Mode::kTrain)
    throw Error(ErrorCategory::kContract,
                "forward_utterance runs single utterances and is eval-only; training "
                "batches pooled rows across utterances");
  Tensor x = Tensor::from({feats.rows, feats.cols},
                          std::vector<double>(feats.data.begin(), feats.data.end()));
  Tensor frames = forward_frames(tape, x, mode);
  Tensor pooled = stats_pool(tape, frames);
  return forward_pooled(tape, pooled, mode, l2_normalize);
}

std::vector<double> XVectorNet::extract(const FeatureMatrix& feats, char source) {
  if (source != 'A' && source != 'B')
    throw Error(ErrorCategory::kContract, "embedding source must be A or B");
  Tape tape;
  const SegmentOut out = forward_utterance(tape, feats, Mode::kEval);
  return source == 'A' ? out.emb_a.value() : out.emb_b.value();
}

ParamSet XVectorNet::params() {
  ParamSet set;
  for (size_t i = 0; i < frame_affines_.size(); ++i) {
    const std::string prefix = "frame" + std::to_string(i + 1);
    frame_affines_[i].collect(set, prefix);
    frame_norms_[i].collect(set, prefix + ".bn");
  }
  emb_a_.collect(set, "emb_a");
  norm_a_.collect(set, "emb_a.bn");
  emb_b_.collect(set, "emb_b");
  norm_b_.collect(set, "emb_b.bn");
  softmax_.collect(set, "softmax");
  return set;
}

std::vector<Embedding> extract_embeddings(XVectorNet& net,
                                          const std::vector<ManifestEntry>& manifest,
                                          const std::string& feature_dir, char source) {
  std::vector<Embedding> out;
  out.reserve(manifest.size());
  for (const auto& entry : manifest) {
    const auto cache =
        (std::filesystem::path(feature_dir) / (entry.utterance_id + ".bin")).string();
    const FeatureMatrix feats = load_feature_cache(cache);
    Embedding emb;
    emb.utterance_id = entry.utterance_id;
    emb.speaker_id = entry.speaker_id;
    emb.vec = net.extract(feats, source);
    out.push_back(std::move(emb));
  }
  return out;
}

}  // namespace svkit
