#include "svkit/corpus.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "svkit/errors.hpp"

namespace svkit {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

}  // namespace

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCategory::kIo, "cannot open manifest " + path);
  const auto base = std::filesystem::path(path).parent_path();
  std::vector<ManifestEntry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok.size() != 3)
      throw Error(ErrorCategory::kIo, "manifest " + path + ":" + std::to_string(lineno) +
                                          ": expected 3 columns, got " +
                                          std::to_string(tok.size()));
    ManifestEntry e{tok[0], tok[1], tok[2]};
    if (!e.path.empty() && e.path[0] != '/') e.path = (base / e.path).string();
    entries.push_back(std::move(e));
  }
  if (entries.empty()) throw Error(ErrorCategory::kCorpus, "manifest " + path + " is empty");
  return entries;
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error(ErrorCategory::kIo, "cannot open " + path + " for writing");
  const auto base = std::filesystem::path(path).parent_path();
  for (const auto& e : entries) {
    // store paths relative to the manifest when possible
    std::string p = e.path;
    std::error_code ec;
    const auto rel = std::filesystem::relative(p, base, ec);
    if (!ec && !rel.empty() && rel.native().rfind("..", 0) != 0) p = rel.string();
    os << e.utterance_id << " " << e.speaker_id << " " << p << "\n";
  }
  if (!os) throw Error(ErrorCategory::kIo, "write failed for " + path);
}

std::vector<Trial> read_trials(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCategory::kIo, "cannot open trial list " + path);
  std::vector<Trial> trials;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok.size() != 2 && tok.size() != 3)
      throw Error(ErrorCategory::kIo, "trial list " + path + ":" + std::to_string(lineno) +
                                          ": expected 2 or 3 columns");
    Trial t;
    t.enroll = tok[0];
    t.test = tok[1];
    if (tok.size() == 3) {
      if (tok[2] == "target")
        t.target = true;
      else if (tok[2] == "nontarget")
        t.target = false;
      else
        throw Error(ErrorCategory::kIo, "trial list " + path + ":" + std::to_string(lineno) +
                                            ": label must be target or nontarget, got '" +
                                            tok[2] + "'");
      t.keyed = true;
    }
    trials.push_back(std::move(t));
  }
  if (trials.empty()) throw Error(ErrorCategory::kIo, "trial list " + path + " is empty");
  return trials;
}

void write_trials(const std::string& path, const std::vector<Trial>& trials) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error(ErrorCategory::kIo, "cannot open " + path + " for writing");
  for (const auto& t : trials) {
    os << t.enroll << " " << t.test;
    if (t.keyed) os << " " << (t.target ? "target" : "nontarget");
    os << "\n";
  }
  if (!os) throw Error(ErrorCategory::kIo, "write failed for " + path);
}

std::string language_of(const std::string& id) {
  const auto pos = id.find('_');
  if (pos == std::string::npos || pos < 2 || pos > 4) return "pool";
  for (size_t i = 0; i < pos; ++i)
    if (id[i] < 'a' || id[i] > 'z') return "pool";
  return id.substr(0, pos);
}

}  // namespace svkit
