#include "svkit/config.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <set>

#include "svkit/errors.hpp"

extern "C" char** environ;

namespace svkit {

namespace {

using E = ErrorCategory;

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

bool valid_key(const std::string& key) {
  if (key.empty() || key.front() == '.' || key.back() == '.') return false;
  for (char c : key)
    if (!(std::islower(static_cast<unsigned char>(c)) ||
          std::isdigit(static_cast<unsigned char>(c)) || c == '_' || c == '.'))
      return false;
  return true;
}

/// Pulls typed values out of a ConfigMap and remembers which keys were
/// touched so leftovers can be reported.
class Reader {
 public:
  explicit Reader(const ConfigMap& map) : map_(map) {}

  std::string get_string(const std::string& key, std::string fallback) {
    const auto* e = take(key);
    return e ? e->value : fallback;
  }

  double get_double(const std::string& key, double fallback) {
    const auto* e = take(key);
    if (!e) return fallback;
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(e->value.c_str(), &end);
    if (errno != 0 || end == e->value.c_str() || *end != '\0')
      throw Error(E::kConfig,
                  "key '" + key + "' (" + e->origin + "): expected a number, got '" + e->value +
                      "'");
    return v;
  }

  size_t get_size(const std::string& key, size_t fallback) {
    const auto* e = take(key);
    if (!e) return fallback;
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(e->value.c_str(), &end, 10);
    if (errno != 0 || end == e->value.c_str() || *end != '\0' ||
        e->value.find('-') != std::string::npos)
      throw Error(E::kConfig, "key '" + key + "' (" + e->origin +
                                  "): expected a non-negative integer, got '" + e->value + "'");
    return static_cast<size_t>(v);
  }

  uint64_t get_u64(const std::string& key, uint64_t fallback) {
    return static_cast<uint64_t>(get_size(key, static_cast<size_t>(fallback)));
  }

  bool get_bool(const std::string& key, bool fallback) {
    const auto* e = take(key);
    if (!e) return fallback;
    std::string v = e->value;
    std::transform(v.begin(), v.end(), v.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw Error(E::kConfig,
                "key '" + key + "' (" + e->origin + "): expected a boolean, got '" + e->value +
                    "'");
  }

  std::vector<std::string> get_list(const std::string& key, std::vector<std::string> fallback) {
    const auto* e = take(key);
    if (!e) return fallback;
    std::vector<std::string> out;
    std::string item;
    for (char c : e->value + ",") {
      if (c == ',') {
        const std::string t = trim(item);
        if (!t.empty()) out.push_back(t);
        item.clear();
      } else {
        item.push_back(c);
      }
    }
    if (out.empty())
      throw Error(E::kConfig, "key '" + key + "' (" + e->origin + "): empty list");
    return out;
  }

  std::string get_choice(const std::string& key, const std::string& fallback,
                         const std::set<std::string>& allowed) {
    const auto* e = take(key);
    const std::string v = e ? e->value : fallback;
    if (!allowed.count(v)) {
      std::string options;
      for (const auto& a : allowed) options += (options.empty() ? "" : ", ") + a;
      throw Error(E::kConfig, "key '" + key + "' (" + (e ? e->origin : "default") +
                                  "): '" + v + "' is not one of " + options);
    }
    return v;
  }

  void finish() const {
    for (const auto& [key, entry] : map_.entries)
      if (!consumed_.count(key))
        throw Error(E::kConfig, "unknown key '" + key + "' (" + entry.origin + ")");
  }

 private:
  const ConfigEntry* take(const std::string& key) {
    consumed_.insert(key);
    const auto it = map_.entries.find(key);
    return it == map_.entries.end() ? nullptr : &it->second;
  }

  const ConfigMap& map_;
  std::set<std::string> consumed_;
};

}  // namespace

ConfigMap parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(E::kConfig, "cannot open config file " + path);
  ConfigMap map;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const std::string origin = path + ":" + std::to_string(lineno);
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw Error(E::kConfig, origin + ": expected 'key = value'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (!valid_key(key))
      throw Error(E::kConfig, origin + ": malformed key '" + key + "'");
    if (map.has(key))
      throw Error(E::kConfig, origin + ": duplicate key '" + key + "' (first set at " +
                                  map.entries[key].origin + ")");
    map.set(key, value, origin);
  }
  return map;
}

void apply_env(ConfigMap& map, const std::vector<std::pair<std::string, std::string>>& env) {
  for (const auto& [name, value] : env) {
    if (name.rfind("SVKIT_", 0) != 0) continue;
    std::string key = name.substr(6);
    std::transform(key.begin(), key.end(), key.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    size_t pos;
    while ((pos = key.find("__")) != std::string::npos) key.replace(pos, 2, ".");
    if (!valid_key(key))
      throw Error(E::kConfig, "env " + name + ": maps to malformed key '" + key + "'");
    map.set(key, value, "env " + name);
  }
}

std::vector<std::pair<std::string, std::string>> svkit_env() {
  std::vector<std::pair<std::string, std::string>> out;
  for (char** e = environ; e && *e; ++e) {
    const std::string entry(*e);
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    const std::string name = entry.substr(0, eq);
    if (name.rfind("SVKIT_", 0) == 0) out.emplace_back(name, entry.substr(eq + 1));
  }
  std::sort(out.begin(), out.end());
  return out;
}

ExperimentConfig experiment_from(const ConfigMap& map) {
  Reader r(map);
  ExperimentConfig c;

  c.corpus.num_speakers = r.get_size("corpus.train_speakers", 50);
  c.corpus.utts_per_speaker = r.get_size("corpus.utterances", 40);
  c.corpus.duration_min_s = r.get_double("corpus.duration_min", 2.0);
  c.corpus.duration_max_s = r.get_double("corpus.duration_max", 3.0);
  c.corpus.speaker_separation = r.get_double("corpus.speaker_separation", 0.25);
  c.corpus.noise_snr_db = r.get_double("corpus.noise_snr", 20.0);
  c.corpus.languages = r.get_list("corpus.languages", {"tgl", "yue"});
  c.corpus.sample_rate = static_cast<int>(r.get_size("corpus.sample_rate", 8000));
  c.eval_speakers = r.get_size("corpus.eval_speakers", 20);
  c.eval_utterances = r.get_size("corpus.eval_utterances", 10);
  c.targets_per_speaker = r.get_size("corpus.targets_per_speaker", 10);
  c.nontarget_ratio = r.get_double("corpus.nontarget_ratio", 25.0);

  c.model.scale_factor = r.get_double("model.scale", 0.125);

  c.train.lr = r.get_double("train.lr", 0.01);
  c.train.momentum = r.get_double("train.momentum", 0.9);
  c.train.weight_decay = r.get_double("train.weight_decay", 1e-8);
  c.train.batch_triplets = r.get_size("train.batch_triplets", 12);
  c.train.epochs = r.get_size("train.epochs", 20);
  c.train.chunk_min = r.get_size("train.chunk_min", 100);
  c.train.chunk_max = r.get_size("train.chunk_max", 180);
  c.train.checkpoint_every = r.get_size("train.checkpoint_every", 0);
  c.train.checkpoint_retain = r.get_size("train.checkpoint_retain", 2);
  c.train_system = r.get_choice("train.system", "joint",
                                {"baseline", "triplet", "simnet", "joint"});

  c.train.loss_weights.alpha = r.get_double("loss.alpha", 1.0);
  c.train.loss_weights.beta = r.get_double("loss.beta", 0.1);
  c.train.loss_weights.gamma = r.get_double("loss.gamma", 0.3);
  c.train.loss_weights.margin = r.get_double("loss.margin", 0.8);
  c.train.loss_weights.l2_normalize = r.get_bool("loss.l2_normalize", false);
  const std::string layer = r.get_choice("loss.triplet_layer", "a", {"a", "b"});
  c.train.loss_weights.triplet_source = layer == "a" ? 'A' : 'B';

  c.lda_dim = r.get_size("backend.lda_dim", 24);
  c.plda_iterations = r.get_size("backend.plda_iterations", 10);
  c.scorer = r.get_choice("backend.scorer", "plda",
                          {"plda", "cosine", "euclidean", "simnet"});
  c.report_bins = r.get_size("report.bins", 30);

  c.seed = r.get_u64("run.seed", 7);
  c.jobs = r.get_size("run.jobs", 1);
  c.out_dir = r.get_string("run.out", "out");
  if (c.jobs == 0) throw Error(E::kConfig, "key 'run.jobs': must be at least 1");
  if (c.out_dir.empty()) throw Error(E::kConfig, "key 'run.out': must not be empty");

  r.finish();

  // cross-field validation up front, before any side effect
  c.corpus.seed = c.seed;
  c.train.seed = c.seed;
  c.corpus.validate();
  if (!(c.model.scale_factor > 0.0) || c.model.scale_factor > 1.0)
    throw Error(E::kConfig, "key 'model.scale': must lie in (0, 1]");
  c.train.validate(c.model.min_frames());
  return c;
}

}  // namespace svkit
