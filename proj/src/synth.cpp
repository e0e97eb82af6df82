#include "svkit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>

#include "svkit/errors.hpp"
#include "svkit/rng.hpp"
#include "svkit/wav.hpp"

namespace svkit {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

struct SpeakerVoice {
  double f0 = 0.0;
  std::vector<double> formants;
  std::vector<double> bandwidths;
};

SpeakerVoice make_voice(Rng& rng, double separation) {
  static const double kBase[5] = {430.0, 1020.0, 1850.0, 2600.0, 3300.0};
  SpeakerVoice v;
  v.f0 = 85.0 + rng.uniform() * 170.0;
  const size_t count = 3 + rng.uniform_int(3);
  for (size_t k = 0; k < count; ++k) {
    const double jitter = 1.0 + separation * (2.0 * rng.uniform() - 1.0);
    const double f = std::clamp(kBase[k] * jitter, 150.0, 3600.0);
    v.formants.push_back(f);
    v.bandwidths.push_back(60.0 + 0.04 * f);
  }
  return v;
}

// Two-pole resonator, in place over the source signal.
void resonate(const std::vector<double>& x, double freq, double bw, int fs, double gain,
              std::vector<double>& acc) {
  const double r = std::exp(-3.14159265358979323846 * bw / fs);
  const double a1 = 2.0 * r * std::cos(kTwoPi * freq / fs);
  const double a2 = -r * r;
  const double scale = gain * (1.0 - r);
  double y1 = 0.0, y2 = 0.0;
  for (size_t n = 0; n < x.size(); ++n) {
    const double y = scale * x[n] + a1 * y1 + a2 * y2;
    acc[n] += y;
    y2 = y1;
    y1 = y;
  }
}

void quantize(std::vector<double>& x) {
  for (auto& v : x) {
    const double clamped = std::max(-0.999, std::min(0.999, v));
    v = std::rint(clamped * 32768.0) / 32768.0;
  }
}

double power(const std::vector<double>& x) {
  double p = 0.0;
  for (double v : x) p += v * v;
  return p / static_cast<double>(x.size());
}

std::string format_id(const char* fmt, size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, fmt, n);
  return buf;
}

std::vector<double> render_utterance(const SpeakerVoice& voice, Rng& rng, const SynthSpec& spec) {
  const double dur = rng.uniform(spec.duration_min_s, spec.duration_max_s);
  const size_t n = static_cast<size_t>(std::lround(dur * spec.sample_rate));

  // glottal pulse train with period jitter and shimmer
  const double f0 = voice.f0 * (1.0 + 0.06 * (rng.uniform() - 0.5));
  const double contour_phase = kTwoPi * rng.uniform();
  std::vector<double> source(n, 0.0);
  double t = 0.0;
  while (t < static_cast<double>(n)) {
    const size_t idx = static_cast<size_t>(t);
    if (idx < n) source[idx] = 1.0 + 0.12 * rng.normal();
    const double period = spec.sample_rate / (f0 * (1.0 + 0.02 * rng.normal()));
    t += std::max(8.0, period);
  }

  std::vector<double> voiced(n, 0.0);
  for (size_t k = 0; k < voice.formants.size(); ++k)
    resonate(source, voice.formants[k], voice.bandwidths[k], spec.sample_rate,
             1.0 / static_cast<double>(k + 1), voiced);

  // slow amplitude contour so frames differ in energy
  for (size_t i = 0; i < n; ++i) {
    const double phase = kTwoPi * 1.3 * static_cast<double>(i) / spec.sample_rate;
    voiced[i] *= 0.75 + 0.25 * std::sin(phase + contour_phase);
  }

  const double rms = std::sqrt(power(voiced));
  if (rms > 0) {
    const double g = 0.08 / rms;
    for (auto& v : voiced) v *= g;
  }

  const double noise_power = power(voiced) * std::pow(10.0, -spec.noise_snr_db / 10.0);
  const double sigma = std::sqrt(noise_power);
  for (auto& v : voiced) v += sigma * rng.normal();

  quantize(voiced);
  return voiced;
}

}  // namespace

void SynthSpec::validate() const {
  if (num_speakers < 2) throw Error(ErrorCategory::kCorpus, "need at least 2 speakers");
  if (utts_per_speaker < 1)
    throw Error(ErrorCategory::kCorpus, "need at least 1 utterance per speaker");
  if (duration_min_s <= 0 || duration_max_s < duration_min_s)
    throw Error(ErrorCategory::kCorpus, "invalid duration range");
  if (speaker_separation < 0 || speaker_separation > 1)
    throw Error(ErrorCategory::kCorpus, "speaker_separation must lie in [0, 1]");
  if (languages.empty()) throw Error(ErrorCategory::kCorpus, "need at least one language tag");
  if (sample_rate < 2000) throw Error(ErrorCategory::kCorpus, "sample rate too low");
}

std::vector<UtteranceRecord> generate_corpus(const SynthSpec& spec) {
  spec.validate();
  const Rng base(spec.seed);
  std::vector<UtteranceRecord> out;
  out.reserve(spec.num_speakers * spec.utts_per_speaker);
  for (size_t s = 0; s < spec.num_speakers; ++s) {
    Rng speaker_rng = base.fork(1000003ULL + s);
    const SpeakerVoice voice = make_voice(speaker_rng, spec.speaker_separation);
    const std::string& lang = spec.languages[s % spec.languages.size()];
    const std::string speaker_id = lang + "_s" + format_id("%04zu", s + 1);
    for (size_t u = 0; u < spec.utts_per_speaker; ++u) {
      Rng utt_rng = base.fork((s + 1) * 1000000ULL + u);
      UtteranceRecord rec;
      rec.speaker_id = speaker_id;
      rec.utterance_id = speaker_id + "_u" + format_id("%03zu", u + 1);
      rec.sample_rate = spec.sample_rate;
      rec.samples = render_utterance(voice, utt_rng, spec);
      out.push_back(std::move(rec));
    }
  }
  return out;
}

std::vector<ManifestEntry> write_corpus(const std::string& dir,
                                        const std::vector<UtteranceRecord>& records) {
  if (records.empty()) throw Error(ErrorCategory::kCorpus, "no utterances to write");
  std::filesystem::create_directories(dir);
  std::vector<ManifestEntry> entries;
  entries.reserve(records.size());
  for (const auto& rec : records) {
    const auto path = (std::filesystem::path(dir) / (rec.utterance_id + ".wav")).string();
    write_wav(path, rec.samples, rec.sample_rate);
    entries.push_back({rec.utterance_id, rec.speaker_id, path});
  }
  const auto manifest = (std::filesystem::path(dir) / "manifest.txt").string();
  write_manifest(manifest, entries);
  return entries;
}

std::vector<UtteranceRecord> augment_noise(const std::vector<UtteranceRecord>& records,
                                           double snr_lo_db, double snr_hi_db, size_t copies,
                                           uint64_t seed) {
  if (snr_lo_db > snr_hi_db)
    throw Error(ErrorCategory::kCorpus, "augment: snr_lo_db must not exceed snr_hi_db");
  const Rng base(seed);
  std::vector<UtteranceRecord> out;
  out.reserve(records.size() * (copies + 1));
  for (size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    out.push_back(rec);
    if (copies == 0) continue;
    const double clean_power = power(rec.samples);
    if (clean_power <= 0)
      throw Error(ErrorCategory::kCorpus, "augment: utterance " + rec.utterance_id + " is silent");
    Rng rng = base.fork(i);
    for (size_t c = 1; c <= copies; ++c) {
      const double snr = rng.uniform(snr_lo_db, snr_hi_db);
      std::vector<double> noise(rec.samples.size());
      for (auto& v : noise) v = rng.normal();
      const double g = std::sqrt(clean_power / (power(noise) * std::pow(10.0, snr / 10.0)));
      UtteranceRecord aug;
      aug.speaker_id = rec.speaker_id;
      aug.utterance_id = rec.utterance_id + "-aug" + std::to_string(c);
      aug.sample_rate = rec.sample_rate;
      aug.samples.resize(rec.samples.size());
      for (size_t n = 0; n < noise.size(); ++n) aug.samples[n] = rec.samples[n] + g * noise[n];
      quantize(aug.samples);
      out.push_back(std::move(aug));
    }
  }
  return out;
}

std::vector<Trial> make_trials(const std::vector<ManifestEntry>& entries,
                               size_t targets_per_speaker, double nontarget_ratio,
                               uint64_t seed) {
  if (targets_per_speaker == 0)
    throw Error(ErrorCategory::kCorpus, "targets_per_speaker must be positive");
  if (nontarget_ratio <= 0)
    throw Error(ErrorCategory::kCorpus, "nontarget_ratio must be positive");

  // language -> speaker -> utterance ids, all in deterministic sorted order
  std::map<std::string, std::map<std::string, std::vector<std::string>>> by_lang;
  for (const auto& e : entries)
    by_lang[language_of(e.speaker_id)][e.speaker_id].push_back(e.utterance_id);

  Rng rng(seed);
  std::vector<Trial> trials;

  size_t num_targets = 0;
  for (auto& [lang, speakers] : by_lang) {
    if (speakers.size() < 2)
      throw Error(ErrorCategory::kCorpus,
                  "language " + lang + " has fewer than 2 speakers, no nontarget trials exist");
    for (auto& [spk, utts] : speakers) {
      if (utts.size() < 2)
        throw Error(ErrorCategory::kCorpus,
                    "speaker " + spk + " has fewer than 2 utterances, no target trials exist");
      std::vector<std::pair<size_t, size_t>> pairs;
      for (size_t i = 0; i < utts.size(); ++i)
        for (size_t j = i + 1; j < utts.size(); ++j) pairs.emplace_back(i, j);
      rng.shuffle(pairs);
      const size_t take = std::min(targets_per_speaker, pairs.size());
      for (size_t k = 0; k < take; ++k) {
        trials.push_back({utts[pairs[k].first], utts[pairs[k].second], true, true});
        ++num_targets;
      }
    }
  }

  const size_t want_nontargets =
      static_cast<size_t>(std::lround(nontarget_ratio * static_cast<double>(num_targets)));
  std::set<std::pair<std::string, std::string>> seen;
  std::vector<std::string> langs;
  for (const auto& [lang, speakers] : by_lang) {
    (void)speakers;
    langs.push_back(lang);
  }

  size_t made = 0, attempts = 0;
  const size_t max_attempts = 200 * want_nontargets + 1000;
  while (made < want_nontargets) {
    if (++attempts > max_attempts)
      throw Error(ErrorCategory::kCorpus,
                  "cannot assemble " + std::to_string(want_nontargets) +
                      " distinct nontarget trials from this corpus");
    const auto& speakers = by_lang[langs[rng.uniform_int(langs.size())]];
    auto it1 = speakers.begin();
    std::advance(it1, rng.uniform_int(speakers.size()));
    auto it2 = speakers.begin();
    std::advance(it2, rng.uniform_int(speakers.size()));
    if (it1->first == it2->first) continue;
    const auto& u1 = it1->second[rng.uniform_int(it1->second.size())];
    const auto& u2 = it2->second[rng.uniform_int(it2->second.size())];
    if (!seen.emplace(u1, u2).second) continue;
    trials.push_back({u1, u2, false, true});
    ++made;
  }
  return trials;
}

}  // namespace svkit
