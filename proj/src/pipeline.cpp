#include "svkit/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>

#include "svkit/embedding.hpp"
#include "svkit/errors.hpp"
#include "svkit/features.hpp"
#include "svkit/simnet.hpp"
#include "svkit/synth.hpp"
#include "svkit/wav.hpp"
#include "svkit/xvector.hpp"

namespace fs = std::filesystem;

namespace svkit {

namespace {

using E = ErrorCategory;

void require_file(const std::string& path, const std::string& producer) {
  if (!fs::exists(path))
    throw Error(E::kUsage, "missing " + path + "; run '" + producer + "' first");
}

void ensure_dir(const std::string& path) {
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec) throw Error(E::kIo, "cannot create directory " + path + ": " + ec.message());
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

FeatureConfig feature_config(const ExperimentConfig& cfg) {
  FeatureConfig fc;
  fc.sample_rate = cfg.corpus.sample_rate;
  return fc;
}

SynthSpec eval_spec(const ExperimentConfig& cfg) {
  SynthSpec spec = cfg.corpus;
  spec.num_speakers = cfg.eval_speakers;
  spec.utts_per_speaker = cfg.eval_utterances;
  spec.seed = cfg.seed + 1;
  return spec;
}

size_t count_speakers(const std::vector<ManifestEntry>& manifest) {
  std::set<std::string> speakers;
  for (const auto& e : manifest) speakers.insert(e.speaker_id);
  return speakers.size();
}

XVectorConfig xvector_config(const ExperimentConfig& cfg, size_t num_speakers) {
  XVectorConfig xcfg = cfg.model;
  xcfg.num_speakers = num_speakers;
  xcfg.validate();
  return xcfg;
}

SimNetConfig simnet_config(const ExperimentConfig& cfg, const XVectorConfig& xcfg) {
  SimNetConfig scfg;
  scfg.scale_factor = cfg.model.scale_factor;
  scfg.input_dim = xcfg.scaled(xcfg.embed_dim);
  return scfg;
}

bool has_simnet(SystemKind kind) {
  return kind == SystemKind::kSimnet || kind == SystemKind::kJoint;
}

/// Rebuilds the trained nets from a system's checkpoint. The RNG seed is
/// irrelevant: every parameter and buffer is overwritten by the load.
struct LoadedSystem {
  XVectorNet net;
  std::optional<SimilarityNet> sim;
};
LoadedSystem load_system(const ExperimentConfig& cfg, const SystemSpec& sys,
                         const PipelinePaths& paths, size_t num_speakers) {
  const std::string ckpt = paths.checkpoint(sys.name);
  require_file(ckpt, "train");
  const XVectorConfig xcfg = xvector_config(cfg, num_speakers);
  Rng rng(1);
  LoadedSystem loaded{XVectorNet(xcfg, rng), std::nullopt};
  if (has_simnet(sys.kind)) {
    Rng sim_rng(2);
    loaded.sim.emplace(simnet_config(cfg, xcfg), sim_rng);
  }
  ParamSet set = training_params(loaded.net, loaded.sim ? &*loaded.sim : nullptr);
  set.load(ckpt);
  return loaded;
}

std::vector<Embedding> extract_split(XVectorNet& net,
                                     const std::vector<ManifestEntry>& manifest,
                                     const std::string& feature_dir) {
  const FeatureStore features = load_features(manifest, feature_dir);
  std::vector<Embedding> out;
  out.reserve(manifest.size());
  for (const auto& entry : manifest) {
    Embedding e;
    e.utterance_id = entry.utterance_id;
    e.speaker_id = entry.speaker_id;
    e.vec = net.extract(features.at(entry.utterance_id), 'A');
    out.push_back(std::move(e));
  }
  return out;
}

void featurize_split(const ExperimentConfig& cfg, const std::string& manifest_path,
                     const std::string& out_dir) {
  require_file(manifest_path, "gen-data");
  const auto manifest = read_manifest(manifest_path);
  ensure_dir(out_dir);
  const FeatureConfig fc = feature_config(cfg);
  for (const auto& entry : manifest) {
    const WavData wav = read_wav(entry.path);
    if (wav.sample_rate != fc.sample_rate)
      throw Error(E::kFeature, entry.utterance_id + ": wav sample rate " +
                                   std::to_string(wav.sample_rate) +
                                   " does not match the configured " +
                                   std::to_string(fc.sample_rate));
    const FeatureMatrix feats = featurize(wav.samples, fc, entry.utterance_id);
    save_feature_cache(out_dir + "/" + entry.utterance_id + ".bin", feats);
  }
}

}  // namespace

PipelinePaths PipelinePaths::under(const std::string& out_dir) {
  PipelinePaths p;
  p.root = out_dir;
  p.corpus_train = out_dir + "/corpus/train";
  p.corpus_eval = out_dir + "/corpus/eval";
  p.trials = out_dir + "/corpus/trials.txt";
  p.features_train = out_dir + "/features/train";
  p.features_eval = out_dir + "/features/eval";
  p.systems = out_dir + "/systems";
  p.embeddings = out_dir + "/embeddings";
  p.backends = out_dir + "/backends";
  p.scores = out_dir + "/scores";
  p.reports = out_dir + "/reports";
  return p;
}

std::vector<SystemSpec> system_grid(const ExperimentConfig& cfg) {
  const LossWeights base = cfg.train.loss_weights;
  LossWeights swapped = base;
  swapped.beta = 0.3;
  swapped.gamma = 0.1;
  LossWeights swapped_b = swapped;
  swapped_b.triplet_source = 'B';
  return {
      {"baseline", SystemKind::kBaseline, base},
      {"simnet", SystemKind::kSimnet, base},
      {"triplet", SystemKind::kTriplet, base},
      {"joint", SystemKind::kJoint, base},
      {"joint_alt", SystemKind::kJoint, swapped},
      {"joint_embb", SystemKind::kJoint, swapped_b},
  };
}

SystemSpec system_from_config(const ExperimentConfig& cfg) {
  return {cfg.train_system, system_from_string(cfg.train_system), cfg.train.loss_weights};
}

void pipeline_gen_data(const ExperimentConfig& cfg) {
  const auto paths = PipelinePaths::under(cfg.out_dir);
  ensure_dir(paths.corpus_train);
  ensure_dir(paths.corpus_eval);

  const auto train_records = generate_corpus(cfg.corpus);
  write_corpus(paths.corpus_train, train_records);

  const auto eval_records = generate_corpus(eval_spec(cfg));
  const auto eval_entries = write_corpus(paths.corpus_eval, eval_records);

  const auto trials =
      make_trials(eval_entries, cfg.targets_per_speaker, cfg.nontarget_ratio, cfg.seed + 2);
  write_trials(paths.trials, trials);
}

void pipeline_featurize(const ExperimentConfig& cfg) {
  const auto paths = PipelinePaths::under(cfg.out_dir);
  featurize_split(cfg, paths.manifest_train(), paths.features_train);
  featurize_split(cfg, paths.manifest_eval(), paths.features_eval);
}

void pipeline_train(const ExperimentConfig& cfg, const SystemSpec& sys) {
  const auto paths = PipelinePaths::under(cfg.out_dir);
  require_file(paths.manifest_train(), "gen-data");
  const auto manifest = read_manifest(paths.manifest_train());
  if (!fs::exists(paths.features_train))
    throw Error(E::kUsage, "missing " + paths.features_train + "; run 'featurize' first");
  const FeatureStore features = load_features(manifest, paths.features_train);

  const XVectorConfig xcfg = xvector_config(cfg, count_speakers(manifest));
  const SimNetConfig scfg = simnet_config(cfg, xcfg);
  TrainConfig tcfg = cfg.train;
  tcfg.loss_weights = sys.weights;

  ensure_dir(paths.system_dir(sys.name));
  train_system(sys.kind, manifest, features, xcfg, scfg, tcfg, paths.system_dir(sys.name));
}

void pipeline_extract(const ExperimentConfig& cfg, const SystemSpec& sys) {
  const auto paths = PipelinePaths::under(cfg.out_dir);
  require_file(paths.manifest_train(), "gen-data");
  require_file(paths.manifest_eval(), "gen-data");
  const auto train_manifest = read_manifest(paths.manifest_train());
  const auto eval_manifest = read_manifest(paths.manifest_eval());
  if (!fs::exists(paths.features_train) || !fs::exists(paths.features_eval))
    throw Error(E::kUsage, "missing feature caches under " + cfg.out_dir +
                               "/features; run 'featurize' first");
  auto loaded = load_system(cfg, sys, paths, count_speakers(train_manifest));

  ensure_dir(paths.embeddings);
  write_embeddings(paths.embedding_file(sys.name, "train"),
                   extract_split(loaded.net, train_manifest, paths.features_train));
  write_embeddings(paths.embedding_file(sys.name, "eval"),
                   extract_split(loaded.net, eval_manifest, paths.features_eval));
}

void pipeline_score(const ExperimentConfig& cfg, const SystemSpec& sys) {
  const auto paths = PipelinePaths::under(cfg.out_dir);
  require_file(paths.trials, "gen-data");
  const auto trials = read_trials(paths.trials);
  ensure_dir(paths.scores);

  if (cfg.scorer == "simnet") {
    if (!has_simnet(sys.kind))
      throw Error(E::kUsage, "system '" + sys.name +
                                 "' trains no similarity net; simnet scoring needs the "
                                 "simnet or joint system");
    require_file(paths.embedding_file(sys.name, "eval"), "extract");
    const auto eval_embs = read_embeddings(paths.embedding_file(sys.name, "eval"));
    require_file(paths.manifest_train(), "gen-data");
    const auto train_manifest = read_manifest(paths.manifest_train());
    auto loaded = load_system(cfg, sys, paths, count_speakers(train_manifest));
    ScoreSet set;
    set.system = sys.name;
    set.trials = score_trials_simnet(*loaded.sim, trials, eval_embs);
    write_scores(paths.score_file(sys.name), set);
    return;
  }

  require_file(paths.embedding_file(sys.name, "train"), "extract");
  require_file(paths.embedding_file(sys.name, "eval"), "extract");
  const auto train_embs = read_embeddings(paths.embedding_file(sys.name, "train"));
  const auto eval_embs = read_embeddings(paths.embedding_file(sys.name, "eval"));

  const Backend backend = fit_backend(train_embs, cfg.lda_dim, cfg.plda_iterations);
  ensure_dir(paths.backends);
  backend.save(paths.backend_file(sys.name));

  const ScoreMethod method = score_method_from_string(cfg.scorer);
  const ScoreSet set = score_trials_backend(backend, method, trials, eval_embs, sys.name);
  write_scores(paths.score_file(sys.name), set);
}

void pipeline_fuse(const ExperimentConfig& cfg, const std::string& a_path,
                   const std::string& b_path, const std::string& out_path) {
  (void)cfg;
  require_file(a_path, "score");
  require_file(b_path, "score");
  const ScoreSet a = read_scores(a_path, stem_of(a_path));
  const ScoreSet b = read_scores(b_path, stem_of(b_path));
  const ScoreSet fused = fuse_scores({a, b});
  ensure_dir(fs::path(out_path).parent_path().string());
  write_scores(out_path, fused);
}

std::string pipeline_evaluate(const ExperimentConfig& cfg,
                              const std::vector<std::string>& score_paths) {
  const auto paths = PipelinePaths::under(cfg.out_dir);
  require_file(paths.trials, "gen-data");
  const auto trials = read_trials(paths.trials);
  if (score_paths.empty()) throw Error(E::kUsage, "no score files given; run 'score' first");

  std::vector<ScoreSet> systems;
  for (const auto& path : score_paths) {
    require_file(path, "score");
    ScoreSet set = read_scores(path, stem_of(path));
    attach_keys(set, trials);
    systems.push_back(std::move(set));
  }
  const auto rows = compute_report(systems);
  ensure_dir(paths.reports);
  write_report_csv(paths.reports + "/report.csv", rows);
  const std::string table = format_report(rows);
  std::ofstream txt(paths.reports + "/report.txt", std::ios::binary);
  if (!txt) throw Error(E::kIo, "cannot open " + paths.reports + "/report.txt for writing");
  txt << table;
  if (!txt.flush()) throw Error(E::kIo, "failed to write " + paths.reports + "/report.txt");
  return table;
}

std::string pipeline_report(const ExperimentConfig& cfg,
                            const std::vector<std::string>& score_paths) {
  const std::string table = pipeline_evaluate(cfg, score_paths);
  const auto paths = PipelinePaths::under(cfg.out_dir);
  const auto trials = read_trials(paths.trials);
  for (const auto& path : score_paths) {
    ScoreSet set = read_scores(path, stem_of(path));
    attach_keys(set, trials);
    const DetCurve curve = det_curve(set);
    export_det_csv(curve, paths.reports + "/det." + set.system + ".csv");
    export_det_svg(curve, paths.reports + "/det." + set.system + ".svg");

    const ScoreHistogram hist = score_histogram(set, cfg.report_bins);
    const std::string hist_path = paths.reports + "/hist." + set.system + ".csv";
    std::ofstream out(hist_path, std::ios::binary);
    if (!out) throw Error(E::kIo, "cannot open " + hist_path + " for writing");
    out << "bin_lo,bin_hi,target_count,nontarget_count\n";
    const double width =
        (hist.hi - hist.lo) / static_cast<double>(hist.target_counts.size());
    char buf[80];
    for (size_t i = 0; i < hist.target_counts.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.9f,%.9f,", hist.lo + width * static_cast<double>(i),
                    hist.lo + width * static_cast<double>(i + 1));
      out << buf << hist.target_counts[i] << ',' << hist.nontarget_counts[i] << "\n";
    }
    if (!out.flush()) throw Error(E::kIo, "failed to write " + hist_path);
  }
  return table;
}

std::string pipeline_run_all(const ExperimentConfig& cfg, std::ostream& log) {
  if (cfg.scorer == "simnet")
    throw Error(E::kUsage,
                "run-all scores every system with one backend; pick plda, cosine, or "
                "euclidean");
  const auto paths = PipelinePaths::under(cfg.out_dir);
  const auto grid = system_grid(cfg);

  log << "run-all: generating corpora\n" << std::flush;
  pipeline_gen_data(cfg);
  log << "run-all: extracting features\n" << std::flush;
  pipeline_featurize(cfg);

  for (size_t i = 0; i < grid.size(); ++i) {
    log << "run-all: system " << grid[i].name << " (" << i + 1 << "/" << grid.size()
        << "): train\n"
        << std::flush;
    pipeline_train(cfg, grid[i]);
    log << "run-all: system " << grid[i].name << ": extract\n" << std::flush;
    pipeline_extract(cfg, grid[i]);
    log << "run-all: system " << grid[i].name << ": score\n" << std::flush;
    pipeline_score(cfg, grid[i]);
  }

  log << "run-all: fusing baseline+triplet and simnet+triplet\n" << std::flush;
  pipeline_fuse(cfg, paths.score_file("baseline"), paths.score_file("triplet"),
                paths.score_file("fusion_baseline_triplet"));
  pipeline_fuse(cfg, paths.score_file("simnet"), paths.score_file("triplet"),
                paths.score_file("fusion_simnet_triplet"));

  std::vector<std::string> score_paths;
  for (const auto& sys : grid) score_paths.push_back(paths.score_file(sys.name));
  score_paths.push_back(paths.score_file("fusion_baseline_triplet"));
  score_paths.push_back(paths.score_file("fusion_simnet_triplet"));

  log << "run-all: writing reports\n" << std::flush;
  return pipeline_report(cfg, score_paths);
}

}  // namespace svkit
