#include "svkit/embedding.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "svkit/errors.hpp"

namespace svkit {

void write_embeddings(const std::string& path, const std::vector<Embedding>& embs) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error(ErrorCategory::kIo, "cannot open " + path + " for writing");
  char buf[32];
  for (const auto& e : embs) {
    os << e.utterance_id << " " << e.speaker_id << " " << e.vec.size();
    for (double v : e.vec) {
      std::snprintf(buf, sizeof buf, " %.17g", v);
      os << buf;
    }
    os << "\n";
  }
  if (!os) throw Error(ErrorCategory::kIo, "write failed for " + path);
}

std::vector<Embedding> read_embeddings(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCategory::kIo, "cannot open embeddings file " + path);
  std::vector<Embedding> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    Embedding e;
    size_t dim = 0;
    if (!(ss >> e.utterance_id >> e.speaker_id >> dim))
      throw Error(ErrorCategory::kIo,
                  "embeddings " + path + ":" + std::to_string(lineno) + ": malformed header");
    e.vec.resize(dim);
    for (auto& v : e.vec)
      if (!(ss >> v))
        throw Error(ErrorCategory::kIo, "embeddings " + path + ":" + std::to_string(lineno) +
                                            ": expected " + std::to_string(dim) + " values");
    out.push_back(std::move(e));
  }
  if (out.empty()) throw Error(ErrorCategory::kIo, "embeddings file " + path + " is empty");
  return out;
}

std::map<std::string, const Embedding*> index_by_utterance(const std::vector<Embedding>& embs) {
  std::map<std::string, const Embedding*> idx;
  for (const auto& e : embs) {
    if (!idx.emplace(e.utterance_id, &e).second)
      throw Error(ErrorCategory::kCorpus, "duplicate embedding for utterance " + e.utterance_id);
  }
  return idx;
}

}  // namespace svkit
