#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "svkit/corpus.hpp"
#include "svkit/features.hpp"
#include "svkit/losses.hpp"
#include "svkit/rng.hpp"
#include "svkit/simnet.hpp"
#include "svkit/xvector.hpp"

namespace svkit {

// Speaker-indexed view of a manifest. Labels follow sorted speaker order.
struct CorpusIndex {
  std::vector<std::string> speakers;
  std::map<std::string, std::vector<std::string>> utterances;
  std::map<std::string, std::string> speaker_by_utterance;
  std::map<std::string, int> labels;
  size_t total_utterances = 0;

  static CorpusIndex build(const std::vector<ManifestEntry>& manifest);

  /// Two speakers minimum, two utterances per speaker minimum.
  void validate() const;

  int label_of(const std::string& speaker) const;
};

struct TrainConfig {
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-8;
  size_t batch_triplets = 16;
  size_t epochs = 3;
  size_t chunk_min = 200;  // frames per training example, drawn uniformly
  size_t chunk_max = 400;
  uint64_t seed = 1;
  LossWeights loss_weights;
  size_t checkpoint_every = 0;  // steps between periodic checkpoints; 0 disables
  size_t checkpoint_retain = 2;

  /// `min_frames` is the receptive field of the frame stack; chunks must
  /// additionally leave batchnorm at least two frame rows.
  void validate(size_t min_frames = 15) const;
};

struct Triplet {
  std::string anchor;
  std::string positive;
  std::string negative;
};

/// Anchor and positive are distinct utterances of one uniformly chosen
/// speaker; the negative comes from a uniformly chosen other speaker.
Triplet sample_triplet(const CorpusIndex& idx, Rng& rng);

using FeatureStore = std::map<std::string, FeatureMatrix>;

/// Loads every manifest utterance's cached features from <dir>/<utt>.bin.
FeatureStore load_features(const std::vector<ManifestEntry>& manifest,
                           const std::string& feature_dir);

// One optimization step's worth of chunked examples. Chunks are stored
// anchors first, then positives, then negatives; labels align with chunks.
struct TrainingBatch {
  struct SimPair {
    size_t first = 0;  // chunk indices
    size_t second = 0;
    double label = 0.0;
  };

  std::vector<Triplet> triplets;
  std::vector<FeatureMatrix> chunks;
  std::vector<int> labels;
  std::vector<SimPair> sim_pairs;  // (a,p) and (a,n), each in both orders
  size_t resampled = 0;            // triplets dropped for a too-short utterance
};

TrainingBatch make_batch(const CorpusIndex& idx, const FeatureStore& features,
                         const TrainConfig& cfg, Rng& rng);

// Momentum SGD with L2 weight decay folded into the gradient:
//   v <- momentum*v + g + weight_decay*w;  w <- w - lr*v.
class SgdOptimizer {
 public:
  SgdOptimizer(ParamSet params, double lr, double momentum, double weight_decay);

  /// Applies one update and zeroes the gradients. A non-finite gradient
  /// aborts before any parameter changes.
  void step();

  size_t num_params() const { return params_.params.size(); }

 private:
  ParamSet params_;
  double lr_;
  double momentum_;
  double weight_decay_;
  std::vector<std::vector<double>> velocity_;
};

enum class SystemKind { kBaseline, kTriplet, kSimnet, kJoint };

std::string to_string(SystemKind kind);
SystemKind system_from_string(const std::string& name);

/// System-specific loss weights: baseline drops triplet and similarity,
/// triplet drops similarity, simnet drops triplet, joint keeps all three.
LossWeights system_weights(SystemKind kind, const LossWeights& configured);

struct StepLog {
  size_t step = 0;
  double ce = 0.0;
  double triplet = 0.0;
  double sim = 0.0;
  double total = 0.0;
  double wall_ms = 0.0;
};

/// CSV with header step,ce,triplet,sim,total,wall_ms.
std::string format_training_log(const std::vector<StepLog>& log);
void write_training_log(const std::string& path, const std::vector<StepLog>& log);

/// Drops the final column of every CSV line; wall time is the one field
/// allowed to differ between otherwise identical runs.
std::string strip_wall_column(const std::string& csv);

struct TrainResult {
  XVectorNet net;
  std::optional<SimilarityNet> sim;
  std::vector<StepLog> log;
  size_t steps = 0;
  size_t resampled = 0;  // triplets redrawn for too-short utterances
};

/// Combined named view of everything a training run mutates.
ParamSet training_params(XVectorNet& net, SimilarityNet* sim);

/// Joint training loop. Steps per epoch cover the corpus once at three
/// chunks per triplet. When `out_dir` is non-empty, periodic checkpoints
/// and final.svkp plus training_log.csv are written there.
TrainResult train_system(SystemKind system, const std::vector<ManifestEntry>& manifest,
                         const FeatureStore& features, XVectorConfig xcfg,
                         SimNetConfig scfg, const TrainConfig& cfg,
                         const std::string& out_dir = "");

}  // namespace svkit
