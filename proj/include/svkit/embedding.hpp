#pragma once

#include <map>
#include <string>
#include <vector>

namespace svkit {

struct Embedding {
  std::string utterance_id;
  std::string speaker_id;
  std::vector<double> vec;
};

/// Text rows "utt speaker dim v1 .. vD" with 17 significant digits.
void write_embeddings(const std::string& path, const std::vector<Embedding>& embs);
std::vector<Embedding> read_embeddings(const std::string& path);

std::map<std::string, const Embedding*> index_by_utterance(const std::vector<Embedding>& embs);

}  // namespace svkit
