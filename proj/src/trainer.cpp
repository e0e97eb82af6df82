#include "svkit/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "svkit/errors.hpp"

namespace svkit {

namespace fs = std::filesystem;

CorpusIndex CorpusIndex::build(const std::vector<ManifestEntry>& manifest) {
  CorpusIndex idx;
  std::set<std::string> seen;
  for (const auto& e : manifest) {
    if (!seen.insert(e.utterance_id).second)
      throw Error(ErrorCategory::kCorpus, "duplicate utterance id '" + e.utterance_id + "'");
    idx.utterances[e.speaker_id].push_back(e.utterance_id);
    idx.speaker_by_utterance[e.utterance_id] = e.speaker_id;
    ++idx.total_utterances;
  }
  for (const auto& [spk, utts] : idx.utterances) {
    (void)utts;
    idx.speakers.push_back(spk);
  }
  std::sort(idx.speakers.begin(), idx.speakers.end());
  for (size_t i = 0; i < idx.speakers.size(); ++i)
    idx.labels[idx.speakers[i]] = static_cast<int>(i);
  idx.validate();
  return idx;
}

void CorpusIndex::validate() const {
  if (speakers.size() < 2)
    throw Error(ErrorCategory::kCorpus,
                "need at least 2 speakers, have " + std::to_string(speakers.size()));
  for (const auto& spk : speakers) {
    const auto it = utterances.find(spk);
    if (it == utterances.end() || it->second.size() < 2)
      throw Error(ErrorCategory::kCorpus,
                  "speaker '" + spk + "' needs at least 2 utterances");
  }
}

int CorpusIndex::label_of(const std::string& speaker) const {
  const auto it = labels.find(speaker);
  if (it == labels.end())
    throw Error(ErrorCategory::kLookup, "unknown speaker '" + speaker + "'");
  return it->second;
}

void TrainConfig::validate(size_t min_frames) const {
  if (!(lr > 0.0)) throw Error(ErrorCategory::kConfig, "lr must be positive");
  if (momentum < 0.0 || momentum >= 1.0)
    throw Error(ErrorCategory::kConfig, "momentum must lie in [0, 1)");
  if (weight_decay < 0.0)
    throw Error(ErrorCategory::kConfig, "weight_decay must be non-negative");
  if (batch_triplets == 0)
    throw Error(ErrorCategory::kConfig, "batch_triplets must be positive");
  if (epochs == 0) throw Error(ErrorCategory::kConfig, "epochs must be positive");
  // Two pooled frame rows must survive the splicing stack for batchnorm.
  const size_t floor = min_frames + 1;
  if (chunk_min < floor)
    throw Error(ErrorCategory::kConfig,
                "chunk_min must be at least " + std::to_string(floor) + " frames");
  if (chunk_max < chunk_min)
    throw Error(ErrorCategory::kConfig, "chunk_max must be >= chunk_min");
  loss_weights.validate();
}

Triplet sample_triplet(const CorpusIndex& idx, Rng& rng) {
  if (idx.speakers.size() < 2)
    throw Error(ErrorCategory::kCorpus,
                "need at least 2 speakers, have " + std::to_string(idx.speakers.size()));

  const size_t anchor_spk = rng.uniform_int(idx.speakers.size());
  const auto& anchor_utts = idx.utterances.at(idx.speakers[anchor_spk]);
  if (anchor_utts.size() < 2)
    throw Error(ErrorCategory::kCorpus,
                "speaker '" + idx.speakers[anchor_spk] + "' needs at least 2 utterances");

  const size_t a = rng.uniform_int(anchor_utts.size());
  size_t p = rng.uniform_int(anchor_utts.size() - 1);
  if (p >= a) ++p;

  size_t other_spk = rng.uniform_int(idx.speakers.size() - 1);
  if (other_spk >= anchor_spk) ++other_spk;
  const auto& other_utts = idx.utterances.at(idx.speakers[other_spk]);
  const size_t n = rng.uniform_int(other_utts.size());

  return {anchor_utts[a], anchor_utts[p], other_utts[n]};
}

FeatureStore load_features(const std::vector<ManifestEntry>& manifest,
                           const std::string& feature_dir) {
  FeatureStore store;
  for (const auto& e : manifest) {
    const fs::path path = fs::path(feature_dir) / (e.utterance_id + ".bin");
    store[e.utterance_id] = load_feature_cache(path.string());
  }
  return store;
}

namespace {

const FeatureMatrix& features_of(const FeatureStore& store, const std::string& utt) {
  const auto it = store.find(utt);
  if (it == store.end())
    throw Error(ErrorCategory::kLookup, "no cached features for utterance '" + utt + "'");
  return it->second;
}

// One chunk draw: length uniform in [chunk_min, chunk_max] capped by the
// utterance, then a uniform start. Returns false when the utterance cannot
// hold even a minimum-length chunk.
bool draw_chunk(const FeatureMatrix& feats, const TrainConfig& cfg, Rng& rng,
                FeatureMatrix& out) {
  if (feats.rows < cfg.chunk_min) return false;
  size_t len = cfg.chunk_min;
  if (cfg.chunk_max > cfg.chunk_min)
    len += rng.uniform_int(cfg.chunk_max - cfg.chunk_min + 1);
  len = std::min(len, feats.rows);
  const size_t start = rng.uniform_int(feats.rows - len + 1);
  out.rows = len;
  out.cols = feats.cols;
  out.data.assign(feats.data.begin() + static_cast<ptrdiff_t>(start * feats.cols),
                  feats.data.begin() + static_cast<ptrdiff_t>((start + len) * feats.cols));
  return true;
}

Tensor chunk_tensor(const FeatureMatrix& chunk) {
  return Tensor::from({chunk.rows, chunk.cols}, chunk.data);
}

const std::string& speaker_of_utt(const CorpusIndex& idx, const std::string& utt) {
  const auto it = idx.speaker_by_utterance.find(utt);
  if (it == idx.speaker_by_utterance.end())
    throw Error(ErrorCategory::kLookup, "unknown utterance '" + utt + "'");
  return it->second;
}

}  // namespace

TrainingBatch make_batch(const CorpusIndex& idx, const FeatureStore& features,
                         const TrainConfig& cfg, Rng& rng) {
  TrainingBatch batch;
  const size_t b = cfg.batch_triplets;
  batch.chunks.resize(3 * b);
  batch.labels.resize(3 * b);

  for (size_t t = 0; t < b; ++t) {
    constexpr size_t kMaxAttempts = 64;
    size_t attempt = 0;
    for (;; ++attempt) {
      if (attempt >= kMaxAttempts)
        throw Error(ErrorCategory::kCorpus,
                    "could not draw a triplet of utterances with at least " +
                        std::to_string(cfg.chunk_min) + " feature frames in " +
                        std::to_string(kMaxAttempts) + " attempts");
      const Triplet trip = sample_triplet(idx, rng);
      FeatureMatrix a, p, n;
      if (!draw_chunk(features_of(features, trip.anchor), cfg, rng, a) ||
          !draw_chunk(features_of(features, trip.positive), cfg, rng, p) ||
          !draw_chunk(features_of(features, trip.negative), cfg, rng, n)) {
        ++batch.resampled;
        continue;
      }
      batch.triplets.push_back(trip);
      batch.chunks[t] = std::move(a);
      batch.chunks[b + t] = std::move(p);
      batch.chunks[2 * b + t] = std::move(n);
      const int anchor_label = idx.label_of(speaker_of_utt(idx, trip.anchor));
      batch.labels[t] = anchor_label;
      batch.labels[b + t] = anchor_label;
      batch.labels[2 * b + t] = idx.label_of(speaker_of_utt(idx, trip.negative));
      break;
    }
  }

  for (size_t t = 0; t < b; ++t) {
    batch.sim_pairs.push_back({t, b + t, 1.0});
    batch.sim_pairs.push_back({b + t, t, 1.0});
    batch.sim_pairs.push_back({t, 2 * b + t, 0.0});
    batch.sim_pairs.push_back({2 * b + t, t, 0.0});
  }
  return batch;
}

SgdOptimizer::SgdOptimizer(ParamSet params, double lr, double momentum, double weight_decay)
    : params_(std::move(params)), lr_(lr), momentum_(momentum), weight_decay_(weight_decay) {
  velocity_.reserve(params_.params.size());
  for (const auto& p : params_.params) velocity_.emplace_back(p.tensor.size(), 0.0);
}

void SgdOptimizer::step() {
  for (const auto& p : params_.params) {
    for (double g : p.tensor.grad())
      if (!std::isfinite(g))
        throw Error(ErrorCategory::kNumeric,
                    "non-finite gradient in parameter '" + p.name + "', step aborted");
  }
  for (size_t i = 0; i < params_.params.size(); ++i) {
    const auto& p = params_.params[i];
    auto& w = p.tensor.mutable_value();
    const auto& g = p.tensor.grad();
    auto& v = velocity_[i];
    for (size_t k = 0; k < w.size(); ++k) {
      v[k] = momentum_ * v[k] + g[k] + weight_decay_ * w[k];
      w[k] -= lr_ * v[k];
    }
    p.tensor.zero_grad();
  }
}

std::string to_string(SystemKind kind) {
  switch (kind) {
    case SystemKind::kBaseline: return "baseline";
    case SystemKind::kTriplet: return "triplet";
    case SystemKind::kSimnet: return "simnet";
    case SystemKind::kJoint: return "joint";
  }
  throw Error(ErrorCategory::kUsage, "unknown system kind");
}

SystemKind system_from_string(const std::string& name) {
  if (name == "baseline") return SystemKind::kBaseline;
  if (name == "triplet") return SystemKind::kTriplet;
  if (name == "simnet") return SystemKind::kSimnet;
  if (name == "joint") return SystemKind::kJoint;
  throw Error(ErrorCategory::kUsage,
              "unknown system '" + name + "' (baseline, triplet, simnet, joint)");
}

LossWeights system_weights(SystemKind kind, const LossWeights& configured) {
  LossWeights w = configured;
  switch (kind) {
    case SystemKind::kBaseline:
      w.beta = 0.0;
      w.gamma = 0.0;
      break;
    case SystemKind::kTriplet:
      w.gamma = 0.0;
      break;
    case SystemKind::kSimnet:
      w.beta = 0.0;
      break;
    case SystemKind::kJoint:
      break;
  }
  return w;
}

std::string format_training_log(const std::vector<StepLog>& log) {
  std::string out = "step,ce,triplet,sim,total,wall_ms\n";
  char buf[256];
  for (const auto& row : log) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g,%.3f\n", row.step, row.ce,
                  row.triplet, row.sim, row.total, row.wall_ms);
    out += buf;
  }
  return out;
}

void write_training_log(const std::string& path, const std::vector<StepLog>& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCategory::kIo, "cannot write training log '" + path + "'");
  out << format_training_log(log);
}

std::string strip_wall_column(const std::string& csv) {
  std::string out;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    const size_t comma = line.rfind(',');
    out += (comma == std::string::npos) ? line : line.substr(0, comma);
    out += '\n';
  }
  return out;
}

ParamSet training_params(XVectorNet& net, SimilarityNet* sim) {
  ParamSet set;
  set.absorb("xvector.", net.params());
  if (sim != nullptr) set.absorb("simnet.", sim->params());
  return set;
}

TrainResult train_system(SystemKind system, const std::vector<ManifestEntry>& manifest,
                         const FeatureStore& features, XVectorConfig xcfg,
                         SimNetConfig scfg, const TrainConfig& cfg,
                         const std::string& out_dir) {
  const CorpusIndex idx = CorpusIndex::build(manifest);
  if (xcfg.num_speakers == 0) xcfg.num_speakers = idx.speakers.size();
  if (xcfg.num_speakers != idx.speakers.size())
    throw Error(ErrorCategory::kConfig,
                "configured num_speakers " + std::to_string(xcfg.num_speakers) +
                    " does not match the corpus (" + std::to_string(idx.speakers.size()) + ")");
  xcfg.validate();
  cfg.validate(xcfg.min_frames());

  const LossWeights weights = system_weights(system, cfg.loss_weights);
  const bool use_triplet = weights.beta != 0.0;
  const bool use_sim = weights.gamma != 0.0;

  // Forked streams keep initialization and sampling independent, so systems
  // that skip the similarity net still draw identical batches.
  Rng root(cfg.seed);
  Rng xrng = root.fork(1);
  Rng srng = root.fork(2);
  Rng sample_rng = root.fork(3);

  XVectorNet net(xcfg, xrng);
  std::optional<SimilarityNet> sim;
  if (use_sim) {
    scfg.input_dim = xcfg.scaled(xcfg.embed_dim);  // follows the embedding width
    scfg.validate();
    sim.emplace(scfg, srng);
  }

  SgdOptimizer opt(training_params(net, sim ? &*sim : nullptr), cfg.lr, cfg.momentum,
                   cfg.weight_decay);

  const size_t per_step = 3 * cfg.batch_triplets;
  const size_t steps_per_epoch = (idx.total_utterances + per_step - 1) / per_step;
  const size_t total_steps = cfg.epochs * steps_per_epoch;

  if (!out_dir.empty()) fs::create_directories(out_dir);
  std::vector<std::string> kept_ckpts;
  std::string last_ckpt;

  TrainResult result{std::move(net), std::move(sim), {}, 0, 0};
  result.log.reserve(total_steps);

  for (size_t step = 1; step <= total_steps; ++step) {
    const auto t0 = std::chrono::steady_clock::now();
    Tape tape;
    const TrainingBatch batch = make_batch(idx, features, cfg, sample_rng);
    result.resampled += batch.resampled;

    std::vector<Tensor> pooled;
    pooled.reserve(batch.chunks.size());
    for (const auto& chunk : batch.chunks) {
      const Tensor frames =
          result.net.forward_frames(tape, chunk_tensor(chunk), Mode::kTrain);
      pooled.push_back(result.net.stats_pool(tape, frames));
    }
    const Tensor stacked = tape.concat(pooled, 0);
    const auto seg =
        result.net.forward_pooled(tape, stacked, Mode::kTrain, weights.l2_normalize);

    const Tensor ce = cross_entropy_loss(tape, seg.logits, batch.labels);

    Tensor trip;
    if (use_triplet) {
      const Tensor& source = weights.triplet_source == 'B' ? seg.emb_b : seg.emb_a;
      const size_t b = cfg.batch_triplets;
      TripletBatch tb{tape.slice(source, 0, 0, b), tape.slice(source, 0, b, 2 * b),
                      tape.slice(source, 0, 2 * b, 3 * b)};
      trip = triplet_loss(tape, tb, weights.margin);
    }

    Tensor simloss;
    if (use_sim) {
      std::vector<size_t> firsts, seconds;
      std::vector<double> pair_labels;
      for (const auto& pair : batch.sim_pairs) {
        firsts.push_back(pair.first);
        seconds.push_back(pair.second);
        pair_labels.push_back(pair.label);
      }
      const Tensor x1 = tape.gather_rows(seg.emb_a, firsts);
      const Tensor x2 = tape.gather_rows(seg.emb_a, seconds);
      const Tensor logits = result.sim->pair_logits(tape, x1, x2, Mode::kTrain);
      simloss = similarity_loss(tape, logits, pair_labels);
    }

    const Tensor total = joint_loss(tape, ce, trip, simloss, weights);
    if (!std::isfinite(total.item()))
      throw Error(ErrorCategory::kDivergence,
                  "loss is not finite at step " + std::to_string(step) +
                      (last_ckpt.empty() ? "; no checkpoint written"
                                         : "; last checkpoint " + last_ckpt));
    tape.backward(total);
    opt.step();

    StepLog row;
    row.step = step;
    row.ce = ce.item();
    row.triplet = use_triplet ? trip.item() : 0.0;
    row.sim = use_sim ? simloss.item() : 0.0;
    row.total = total.item();
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                      .count();
    result.log.push_back(row);

    if (!out_dir.empty() && cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0) {
      char name[64];
      std::snprintf(name, sizeof(name), "ckpt_%06zu.svkp", step);
      const std::string path = (fs::path(out_dir) / name).string();
      training_params(result.net, result.sim ? &*result.sim : nullptr).save(path);
      kept_ckpts.push_back(path);
      last_ckpt = path;
      while (kept_ckpts.size() > cfg.checkpoint_retain) {
        fs::remove(kept_ckpts.front());
        kept_ckpts.erase(kept_ckpts.begin());
      }
    }
  }

  result.steps = total_steps;
  if (result.resampled > 0)
    std::fprintf(stderr, "warning: %zu triplets resampled (utterance shorter than %zu frames)\n",
                 result.resampled, cfg.chunk_min);
  if (!out_dir.empty()) {
    training_params(result.net, result.sim ? &*result.sim : nullptr)
        .save((fs::path(out_dir) / "final.svkp").string());
    write_training_log((fs::path(out_dir) / "training_log.csv").string(), result.log);
  }
  return result;
}

}  // namespace svkit
