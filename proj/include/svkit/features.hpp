#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace svkit {

struct FeatureConfig {
  int sample_rate = 8000;
  double frame_ms = 25.0;
  double shift_ms = 10.0;
  int num_mel = 23;
  int num_ceps = 23;
  double preemphasis = 0.97;
  double low_freq = 20.0;
  double high_freq = 0.0;  // 0 means Nyquist
  double log_floor = 1e-10;
  double vad_offset = -1.0;
  double cmn_window_s = 3.0;

  int frame_length() const;
  int frame_shift() const;
  int cmn_window_frames() const;
  void validate() const;
};

// Row-major frames-by-coefficients matrix.
struct FeatureMatrix {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<double> data;

  FeatureMatrix() = default;
  FeatureMatrix(size_t r, size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(size_t r, size_t c) { return data[r * cols + c]; }
  double at(size_t r, size_t c) const { return data[r * cols + c]; }
  const double* row(size_t r) const { return data.data() + r * cols; }
};

/// MFCCs for one signal. Column 0 is the log-energy proxy used by the VAD.
FeatureMatrix mfcc(const std::vector<double>& samples, const FeatureConfig& cfg);

/// Frame-keep mask: c0 greater than the utterance c0 mean plus offset.
std::vector<uint8_t> vad_mask(const FeatureMatrix& feats, double offset);

/// Drops masked-out frames; empty survivors are a vad error naming `utt`.
FeatureMatrix select_frames(const FeatureMatrix& feats, const std::vector<uint8_t>& keep,
                            const std::string& utt);

/// Sliding-window cepstral mean subtraction, window centered and truncated
/// at the edges.
FeatureMatrix sliding_cmn(const FeatureMatrix& feats, int window_frames);

/// MFCC -> VAD -> frame selection -> CMN.
FeatureMatrix featurize(const std::vector<double>& samples, const FeatureConfig& cfg,
                        const std::string& utt);

/// Binary feature cache, magic "SVKF", little-endian f64.
void save_feature_cache(const std::string& path, const FeatureMatrix& feats);
FeatureMatrix load_feature_cache(const std::string& path);

}  // namespace svkit
