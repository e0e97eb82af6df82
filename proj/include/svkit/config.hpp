#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "svkit/synth.hpp"
#include "svkit/trainer.hpp"
#include "svkit/xvector.hpp"

namespace svkit {

/// One configuration value plus where it came from ("file:line", "env VAR",
/// or "flag --name"), so validation errors can point at the source.
struct ConfigEntry {
  std::string value;
  std::string origin;
};

struct ConfigMap {
  std::map<std::string, ConfigEntry> entries;

  void set(const std::string& key, const std::string& value, const std::string& origin) {
    entries[key] = {value, origin};
  }
  bool has(const std::string& key) const { return entries.count(key) != 0; }
};

/// "key = value" lines with full-line '#' comments. Keys are dotted
/// lowercase identifiers; duplicates within one file are rejected.
ConfigMap parse_config_file(const std::string& path);

/// Environment overrides: SVKIT_SECTION__KEY=value maps to section.key
/// (lowercased, double underscore to dot). Later layers win.
void apply_env(ConfigMap& map, const std::vector<std::pair<std::string, std::string>>& env);

/// All SVKIT_-prefixed variables of the process environment.
std::vector<std::pair<std::string, std::string>> svkit_env();

/// Fully validated experiment settings. Every key has a default, so an
/// empty map is a runnable desk-scale experiment.
struct ExperimentConfig {
  SynthSpec corpus;  // training corpus; seed fields are filled from `seed`
  size_t eval_speakers = 20;
  size_t eval_utterances = 10;
  size_t targets_per_speaker = 10;
  double nontarget_ratio = 25.0;

  XVectorConfig model;  // num_speakers is filled by the pipeline
  TrainConfig train;
  std::string train_system = "joint";

  size_t lda_dim = 24;
  size_t plda_iterations = 10;
  std::string scorer = "plda";
  size_t report_bins = 30;

  uint64_t seed = 7;
  size_t jobs = 1;
  std::string out_dir = "out";
};

/// Builds the typed config, consuming every entry; unknown keys raise a
/// config error naming the key and its origin.
ExperimentConfig experiment_from(const ConfigMap& map);

}  // namespace svkit
