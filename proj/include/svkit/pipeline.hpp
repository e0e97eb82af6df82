#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "svkit/backend.hpp"
#include "svkit/config.hpp"
#include "svkit/losses.hpp"
#include "svkit/metrics.hpp"
#include "svkit/trainer.hpp"

namespace svkit {

/// Work-directory layout. Every stage reads and writes only through these
/// paths, so `run-all` is exactly the subcommands composed in order.
struct PipelinePaths {
  std::string root;
  std::string corpus_train;    // wavs + manifest.txt
  std::string corpus_eval;
  std::string trials;          // keyed trial list
  std::string features_train;  // one .bin cache per utterance
  std::string features_eval;
  std::string systems;         // <system>/final.svkp + training_log.csv
  std::string embeddings;      // <system>.<split>.txt
  std::string backends;        // <system>.txt
  std::string scores;          // <system>.txt
  std::string reports;

  static PipelinePaths under(const std::string& out_dir);

  std::string manifest_train() const { return corpus_train + "/manifest.txt"; }
  std::string manifest_eval() const { return corpus_eval + "/manifest.txt"; }
  std::string system_dir(const std::string& name) const { return systems + "/" + name; }
  std::string checkpoint(const std::string& name) const {
    return system_dir(name) + "/final.svkp";
  }
  std::string embedding_file(const std::string& name, const std::string& split) const {
    return embeddings + "/" + name + "." + split + ".txt";
  }
  std::string backend_file(const std::string& name) const {
    return backends + "/" + name + ".txt";
  }
  std::string score_file(const std::string& name) const { return scores + "/" + name + ".txt"; }
};

/// One row of the reproduced system grid: a training recipe under a stable
/// name. `kind` controls which loss branches exist; `weights` carries the
/// resolved coefficients and triplet source.
struct SystemSpec {
  std::string name;
  SystemKind kind;
  LossWeights weights;
};

/// The six trained systems of the comparison grid: baseline, simnet,
/// triplet, joint, joint with swapped auxiliary weights, and the swapped
/// variant fed by embedding B.
std::vector<SystemSpec> system_grid(const ExperimentConfig& cfg);

/// Single system named by config (train.system) with configured weights.
SystemSpec system_from_config(const ExperimentConfig& cfg);

void pipeline_gen_data(const ExperimentConfig& cfg);
void pipeline_featurize(const ExperimentConfig& cfg);
void pipeline_train(const ExperimentConfig& cfg, const SystemSpec& sys);
void pipeline_extract(const ExperimentConfig& cfg, const SystemSpec& sys);
void pipeline_score(const ExperimentConfig& cfg, const SystemSpec& sys);

/// Fuses two score files with equal weights; the fused system is named
/// after the output file's stem.
void pipeline_fuse(const ExperimentConfig& cfg, const std::string& a_path,
                   const std::string& b_path, const std::string& out_path);

/// Joins the listed score files with the trial key, writes report.csv and
/// report.txt under reports/, and returns the text table.
std::string pipeline_evaluate(const ExperimentConfig& cfg,
                              const std::vector<std::string>& score_paths);

/// Evaluate plus per-system DET CSV/SVG and score histogram artifacts.
std::string pipeline_report(const ExperimentConfig& cfg,
                            const std::vector<std::string>& score_paths);

/// End-to-end grid: gen-data, featurize, per-system train/extract/score,
/// the two fusions, and the full report. Progress lines go to `log`.
std::string pipeline_run_all(const ExperimentConfig& cfg, std::ostream& log);

}  // namespace svkit
