#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svkit/corpus.hpp"

namespace svkit {

struct SynthSpec {
  size_t num_speakers = 10;
  size_t utts_per_speaker = 4;
  double duration_min_s = 2.0;
  double duration_max_s = 4.0;
  /// Relative spread of per-speaker formant frequencies; larger separates
  /// speakers more and makes the task easier.
  double speaker_separation = 0.25;
  /// SNR of the additive white channel noise, in dB against the clean
  /// voiced signal.
  double noise_snr_db = 20.0;
  std::vector<std::string> languages = {"tgl", "yue"};
  int sample_rate = 8000;
  uint64_t seed = 1;

  void validate() const;
};

struct UtteranceRecord {
  std::string utterance_id;
  std::string speaker_id;
  std::vector<double> samples;  // on the 16-bit grid
  int sample_rate = 8000;
};

/// Deterministic synthetic speakers: per-speaker formant resonators and
/// pitch excited by a jittered pulse train, plus channel noise. Speakers
/// are assigned round-robin to the language tags.
std::vector<UtteranceRecord> generate_corpus(const SynthSpec& spec);

/// Writes one wav per utterance plus manifest.txt under `dir`.
std::vector<ManifestEntry> write_corpus(const std::string& dir,
                                        const std::vector<UtteranceRecord>& records);

/// The originals followed by `copies` additive-noise copies of each, at
/// SNRs drawn uniformly from [snr_lo_db, snr_hi_db]; copy ids gain an
/// "-augN" suffix. Zero copies returns the input unchanged.
std::vector<UtteranceRecord> augment_noise(const std::vector<UtteranceRecord>& records,
                                           double snr_lo_db, double snr_hi_db, size_t copies,
                                           uint64_t seed);

/// Same-language verification trials: `targets_per_speaker` same-speaker
/// pairs each, and round(nontarget_ratio * targets) cross-speaker pairs.
std::vector<Trial> make_trials(const std::vector<ManifestEntry>& entries,
                               size_t targets_per_speaker, double nontarget_ratio,
                               uint64_t seed);

}  // namespace svkit
