#pragma once

#include <map>
#include <string>
#include <vector>

namespace svkit {

// One line of a corpus manifest: "utterance_id speaker_id path".
struct ManifestEntry {
  std::string utterance_id;
  std::string speaker_id;
  std::string path;
};

/// Relative wav paths are resolved against the manifest's directory.
std::vector<ManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);

// A verification trial. `target` is meaningful only when `keyed`.
struct Trial {
  std::string enroll;
  std::string test;
  bool target = false;
  bool keyed = false;
};

/// Two columns (unkeyed) or three with "target"/"nontarget".
std::vector<Trial> read_trials(const std::string& path);
void write_trials(const std::string& path, const std::vector<Trial>& trials);

// A trial with its system score attached.
struct ScoredTrial {
  std::string enroll;
  std::string test;
  double score = 0.0;
  bool target = false;
  bool keyed = false;
};

/// Language tag encoded as the id prefix up to the first '_', e.g.
/// "yue_s0003_u007" -> "yue". Ids without a tag map to "pool".
std::string language_of(const std::string& id);

}  // namespace svkit
