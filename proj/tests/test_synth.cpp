#include <cmath>
#include <filesystem>
#include <map>
#include <set>

#include "doctest.h"
#include "svkit/features.hpp"
#include "svkit/synth.hpp"
#include "svkit/wav.hpp"
#include "testutil.hpp"

using svkit::Error;
using svkit::SynthSpec;
using svkit::Trial;
using svkit::UtteranceRecord;

namespace {

SynthSpec tiny_spec() {
  SynthSpec spec;
  spec.num_speakers = 4;
  spec.utts_per_speaker = 3;
  spec.duration_min_s = 0.4;
  spec.duration_max_s = 0.7;
  spec.seed = 42;
  return spec;
}

double power(const std::vector<double>& x) {
  double p = 0.0;
  for (double v : x) p += v * v;
  return p / static_cast<double>(x.size());
}

}  // namespace

TEST_SUITE_BEGIN("synth");

TEST_CASE("generation is deterministic in the seed") {
  const auto a = svkit::generate_corpus(tiny_spec());
  const auto b = svkit::generate_corpus(tiny_spec());
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].utterance_id == b[i].utterance_id);
    CHECK(a[i].samples == b[i].samples);
  }

  SynthSpec other = tiny_spec();
  other.seed = 43;
  const auto c = svkit::generate_corpus(other);
  CHECK(a[0].samples != c[0].samples);
}

TEST_CASE("corpus shape, ids, and language round-robin") {
  const auto recs = svkit::generate_corpus(tiny_spec());
  REQUIRE(recs.size() == 12);
  CHECK(recs[0].speaker_id == "tgl_s0001");
  CHECK(recs[0].utterance_id == "tgl_s0001_u001");
  CHECK(recs[3].speaker_id == "yue_s0002");
  CHECK(recs[6].speaker_id == "tgl_s0003");
  CHECK(svkit::language_of(recs[3].utterance_id) == "yue");

  for (const auto& r : recs) {
    const double dur = static_cast<double>(r.samples.size()) / r.sample_rate;
    CHECK(dur >= 0.4);
    CHECK(dur <= 0.7);
    // samples sit on the 16-bit grid
    for (size_t i = 0; i < 50 && i < r.samples.size(); ++i) {
      const double scaled = r.samples[i] * 32768.0;
      CHECK(scaled == std::rint(scaled));
    }
    CHECK(power(r.samples) > 1e-6);
  }
}

TEST_CASE("same speaker sounds more alike than different speakers") {
  SynthSpec spec = tiny_spec();
  spec.num_speakers = 6;
  spec.utts_per_speaker = 2;
  spec.duration_min_s = 1.0;
  spec.duration_max_s = 1.2;
  const auto recs = svkit::generate_corpus(spec);

  // mean MFCC vector per utterance
  std::vector<std::vector<double>> means;
  std::vector<std::string> speakers;
  svkit::FeatureConfig fcfg;
  for (const auto& r : recs) {
    const auto f = svkit::mfcc(r.samples, fcfg);
    std::vector<double> m(f.cols, 0.0);
    for (size_t t = 0; t < f.rows; ++t)
      for (size_t c = 0; c < f.cols; ++c) m[c] += f.at(t, c);
    for (auto& v : m) v /= static_cast<double>(f.rows);
    means.push_back(std::move(m));
    speakers.push_back(r.speaker_id);
  }

  double same = 0.0, diff = 0.0;
  size_t n_same = 0, n_diff = 0;
  for (size_t i = 0; i < means.size(); ++i)
    for (size_t j = i + 1; j < means.size(); ++j) {
      double d = 0.0;
      for (size_t c = 1; c < means[i].size(); ++c)  // skip the energy term
        d += (means[i][c] - means[j][c]) * (means[i][c] - means[j][c]);
      if (speakers[i] == speakers[j]) {
        same += std::sqrt(d);
        ++n_same;
      } else {
        diff += std::sqrt(d);
        ++n_diff;
      }
    }
  CHECK(same / static_cast<double>(n_same) < diff / static_cast<double>(n_diff));
}

TEST_CASE("write_corpus produces loadable wavs and a manifest") {
  testutil::TempDir dir("synthw");
  const auto recs = svkit::generate_corpus(tiny_spec());
  const auto entries = svkit::write_corpus(dir.path(), recs);
  REQUIRE(entries.size() == recs.size());

  const auto manifest = svkit::read_manifest(dir.file("manifest.txt"));
  REQUIRE(manifest.size() == recs.size());
  CHECK(manifest[0].utterance_id == recs[0].utterance_id);

  const auto wav = svkit::read_wav(manifest[0].path);
  CHECK(wav.sample_rate == 8000);
  CHECK(wav.samples == recs[0].samples);  // grid samples survive the file
}

TEST_CASE("augmentation hits the requested snr within a dB") {
  SynthSpec spec = tiny_spec();
  spec.num_speakers = 2;
  spec.utts_per_speaker = 1;
  spec.noise_snr_db = 60.0;  // nearly clean source
  const auto recs = svkit::generate_corpus(spec);

  // originals stay in place, copies follow each source
  const auto augs = svkit::augment_noise(recs, 10.0, 10.0, 2, 7);
  REQUIRE(augs.size() == 6);
  CHECK(augs[0].utterance_id == recs[0].utterance_id);
  CHECK(augs[0].samples == recs[0].samples);
  CHECK(augs[1].utterance_id == recs[0].utterance_id + "-aug1");
  CHECK(augs[2].utterance_id == recs[0].utterance_id + "-aug2");
  CHECK(augs[3].utterance_id == recs[1].utterance_id);
  CHECK(augs[1].speaker_id == recs[0].speaker_id);

  for (size_t k : {1u, 2u, 4u, 5u}) {
    const auto& clean = recs[k / 3].samples;
    const auto& noisy = augs[k].samples;
    REQUIRE(noisy.size() == clean.size());
    std::vector<double> noise(clean.size());
    for (size_t i = 0; i < clean.size(); ++i) noise[i] = noisy[i] - clean[i];
    const double snr = 10.0 * std::log10(power(clean) / power(noise));
    CHECK(std::abs(snr - 10.0) < 1.0);
  }

  CHECK(svkit::augment_noise(recs, 10, 10, 2, 7)[1].samples == augs[1].samples);

  const auto untouched = svkit::augment_noise(recs, 10, 20, 0, 7);
  REQUIRE(untouched.size() == recs.size());
  CHECK(untouched[0].utterance_id == recs[0].utterance_id);
  CHECK(untouched[1].samples == recs[1].samples);

  CHECK_THROWS_AS(svkit::augment_noise(recs, 20, 10, 1, 7), Error);
}

TEST_CASE("trials stay within language and honor counts") {
  SynthSpec spec = tiny_spec();
  spec.num_speakers = 8;
  spec.utts_per_speaker = 4;
  spec.duration_min_s = 0.1;
  spec.duration_max_s = 0.12;
  const auto recs = svkit::generate_corpus(spec);
  std::vector<svkit::ManifestEntry> entries;
  for (const auto& r : recs) entries.push_back({r.utterance_id, r.speaker_id, ""});

  const auto trials = svkit::make_trials(entries, 3, 5.0, 11);
  size_t targets = 0, nontargets = 0;
  std::map<std::string, size_t> per_speaker;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& t : trials) {
    CHECK(t.keyed);
    CHECK(svkit::language_of(t.enroll) == svkit::language_of(t.test));
    if (t.target) {
      ++targets;
      ++per_speaker[t.enroll.substr(0, 9)];
      CHECK(t.enroll.substr(0, 9) == t.test.substr(0, 9));
    } else {
      ++nontargets;
      CHECK(t.enroll.substr(0, 9) != t.test.substr(0, 9));
      CHECK(seen.emplace(t.enroll, t.test).second);  // no duplicates
    }
  }
  CHECK(targets == 8 * 3);
  CHECK(nontargets == targets * 5);
  for (const auto& [spk, n] : per_speaker) {
    (void)spk;
    CHECK(n == 3);
  }

  // deterministic
  const auto again = svkit::make_trials(entries, 3, 5.0, 11);
  REQUIRE(again.size() == trials.size());
  CHECK(again[5].enroll == trials[5].enroll);

  // capped by available pairs: 4 utterances only have 6 distinct pairs
  const auto many = svkit::make_trials(entries, 100, 1.0, 11);
  size_t t2 = 0;
  for (const auto& t : many) t2 += t.target;
  CHECK(t2 == 8 * 6);
}

TEST_CASE("degenerate corpora are rejected") {
  std::vector<svkit::ManifestEntry> lonely = {
      {"tgl_s0001_u001", "tgl_s0001", ""},
      {"tgl_s0001_u002", "tgl_s0001", ""},
      {"tgl_s0002_u001", "tgl_s0002", ""},
  };
  // s0002 has a single utterance: target trials impossible for it
  CHECK_THROWS_AS(svkit::make_trials(lonely, 1, 1.0, 1), Error);

  std::vector<svkit::ManifestEntry> one_speaker = {
      {"tgl_s0001_u001", "tgl_s0001", ""},
      {"tgl_s0001_u002", "tgl_s0001", ""},
  };
  CHECK_THROWS_AS(svkit::make_trials(one_speaker, 1, 1.0, 1), Error);

  // 2 speakers x 2 utts: only 8 distinct cross-speaker ordered pairs exist
  std::vector<svkit::ManifestEntry> small;
  for (int s = 1; s <= 2; ++s)
    for (int u = 1; u <= 2; ++u)
      small.push_back({"tgl_s000" + std::to_string(s) + "_u00" + std::to_string(u),
                       "tgl_s000" + std::to_string(s), ""});
  CHECK_THROWS_AS(svkit::make_trials(small, 1, 100.0, 1), Error);

  SynthSpec bad = tiny_spec();
  bad.num_speakers = 1;
  CHECK_THROWS_AS(svkit::generate_corpus(bad), Error);
  bad = tiny_spec();
  bad.duration_max_s = 0.1;
  CHECK_THROWS_AS(svkit::generate_corpus(bad), Error);
}

TEST_SUITE_END();
