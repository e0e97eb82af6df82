#pragma once

#include <string>
#include <vector>

namespace svkit {

struct WavData {
  std::vector<double> samples;  // in [-1, 1), 16-bit grid
  int sample_rate = 0;
};

/// Reads mono 16-bit PCM RIFF files. Anything else is an io error.
WavData read_wav(const std::string& path);

/// Writes mono 16-bit PCM. Samples are clamped to [-1, 1] first.
void write_wav(const std::string& path, const std::vector<double>& samples, int sample_rate);

}  // namespace svkit
