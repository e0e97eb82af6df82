#include "svkit/features.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "svkit/errors.hpp"

namespace svkit {

namespace {

constexpr double kPi = 3.14159265358979323846;

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }

// In-place iterative radix-2 FFT on interleaved complex data.
void fft(std::vector<double>& re, std::vector<double>& im) {
  const size_t n = re.size();
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      std::swap(re[i], re[j]);
      std::swap(im[i], im[j]);
    }
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * kPi / static_cast<double>(len);
    const double wr = std::cos(ang), wi = std::sin(ang);
    for (size_t i = 0; i < n; i += len) {
      double cr = 1.0, ci = 0.0;
      for (size_t k = 0; k < len / 2; ++k) {
        const size_t a = i + k, b = i + k + len / 2;
        const double tr = re[b] * cr - im[b] * ci;
        const double ti = re[b] * ci + im[b] * cr;
        re[b] = re[a] - tr;
        im[b] = im[a] - ti;
        re[a] += tr;
        im[a] += ti;
        const double ncr = cr * wr - ci * wi;
        ci = cr * wi + ci * wr;
        cr = ncr;
      }
    }
  }
}

size_t next_pow2(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

int FeatureConfig::frame_length() const {
  return static_cast<int>(std::lround(sample_rate * frame_ms / 1000.0));
}

int FeatureConfig::frame_shift() const {
  return static_cast<int>(std::lround(sample_rate * shift_ms / 1000.0));
}

int FeatureConfig::cmn_window_frames() const {
  return static_cast<int>(std::lround(cmn_window_s * 1000.0 / shift_ms));
}

void FeatureConfig::validate() const {
  if (sample_rate <= 0) throw Error(ErrorCategory::kFeature, "sample rate must be positive");
  if (frame_ms <= 0 || shift_ms <= 0 || shift_ms > frame_ms)
    throw Error(ErrorCategory::kFeature, "frame/shift lengths are inconsistent");
  if (num_mel < 2) throw Error(ErrorCategory::kFeature, "need at least 2 mel filters");
  if (num_ceps < 1 || num_ceps > num_mel)
    throw Error(ErrorCategory::kFeature, "num_ceps must lie in [1, num_mel]");
  const double nyquist = sample_rate / 2.0;
  const double hi = high_freq > 0 ? high_freq : nyquist;
  if (low_freq < 0 || low_freq >= hi || hi > nyquist)
    throw Error(ErrorCategory::kFeature, "mel band edges are out of range");
  if (log_floor <= 0) throw Error(ErrorCategory::kFeature, "log floor must be positive");
  if (cmn_window_s <= 0) throw Error(ErrorCategory::kFeature, "cmn window must be positive");
}

FeatureMatrix mfcc(const std::vector<double>& samples, const FeatureConfig& cfg) {
  cfg.validate();
  const size_t frame_len = static_cast<size_t>(cfg.frame_length());
  const size_t shift = static_cast<size_t>(cfg.frame_shift());
  if (samples.size() < frame_len)
    throw Error(ErrorCategory::kFeature,
                "signal of " + std::to_string(samples.size()) +
                    " samples is shorter than one frame (" + std::to_string(frame_len) + ")");

  std::vector<double> emph(samples.size());
  emph[0] = samples[0] - cfg.preemphasis * samples[0];
  for (size_t i = 1; i < samples.size(); ++i)
    emph[i] = samples[i] - cfg.preemphasis * samples[i - 1];

  std::vector<double> window(frame_len);
  for (size_t i = 0; i < frame_len; ++i)
    window[i] = 0.54 - 0.46 * std::cos(2.0 * kPi * static_cast<double>(i) /
                                       static_cast<double>(frame_len - 1));

  const size_t nfft = next_pow2(frame_len);
  const size_t nbins = nfft / 2 + 1;

  // filter weights interpolated in the mel domain
  const double hi = cfg.high_freq > 0 ? cfg.high_freq : cfg.sample_rate / 2.0;
  const double mel_lo = hz_to_mel(cfg.low_freq), mel_hi = hz_to_mel(hi);
  const size_t nmel = static_cast<size_t>(cfg.num_mel);
  std::vector<double> centers(nmel + 2);
  for (size_t k = 0; k < nmel + 2; ++k)
    centers[k] = mel_lo + (mel_hi - mel_lo) * static_cast<double>(k) /
                              static_cast<double>(nmel + 1);
  std::vector<double> fbank(nmel * nbins, 0.0);
  for (size_t b = 0; b < nbins; ++b) {
    const double m = hz_to_mel(static_cast<double>(b) * cfg.sample_rate /
                               static_cast<double>(nfft));
    for (size_t k = 0; k < nmel; ++k) {
      const double rising = (m - centers[k]) / (centers[k + 1] - centers[k]);
      const double falling = (centers[k + 2] - m) / (centers[k + 2] - centers[k + 1]);
      fbank[k * nbins + b] = std::max(0.0, std::min(rising, falling));
    }
  }

  const size_t nceps = static_cast<size_t>(cfg.num_ceps);
  std::vector<double> dct(nceps * nmel);
  const double norm0 = std::sqrt(1.0 / static_cast<double>(nmel));
  const double norm = std::sqrt(2.0 / static_cast<double>(nmel));
  for (size_t i = 0; i < nceps; ++i)
    for (size_t j = 0; j < nmel; ++j)
      dct[i * nmel + j] = (i == 0 ? norm0 : norm) *
                          std::cos(kPi * static_cast<double>(i) *
                                   (static_cast<double>(j) + 0.5) / static_cast<double>(nmel));

  const size_t num_frames = 1 + (samples.size() - frame_len) / shift;
  FeatureMatrix out(num_frames, nceps);
  std::vector<double> re(nfft), im(nfft), power(nbins), logmel(nmel);
  for (size_t t = 0; t < num_frames; ++t) {
    std::fill(re.begin(), re.end(), 0.0);
    std::fill(im.begin(), im.end(), 0.0);
    for (size_t i = 0; i < frame_len; ++i) re[i] = emph[t * shift + i] * window[i];
    fft(re, im);
    for (size_t b = 0; b < nbins; ++b) power[b] = re[b] * re[b] + im[b] * im[b];
    for (size_t k = 0; k < nmel; ++k) {
      double acc = 0.0;
      const double* w = fbank.data() + k * nbins;
      for (size_t b = 0; b < nbins; ++b) acc += w[b] * power[b];
      logmel[k] = std::log(std::max(acc, cfg.log_floor));
    }
    for (size_t i = 0; i < nceps; ++i) {
      double acc = 0.0;
      const double* w = dct.data() + i * nmel;
      for (size_t k = 0; k < nmel; ++k) acc += w[k] * logmel[k];
      out.at(t, i) = acc;
    }
  }
  return out;
}

std::vector<uint8_t> vad_mask(const FeatureMatrix& feats, double offset) {
  if (feats.rows == 0) throw Error(ErrorCategory::kVad, "vad on an empty feature matrix");
  double mean = 0.0;
  for (size_t t = 0; t < feats.rows; ++t) mean += feats.at(t, 0);
  mean /= static_cast<double>(feats.rows);
  std::vector<uint8_t> keep(feats.rows);
  for (size_t t = 0; t < feats.rows; ++t)
    keep[t] = feats.at(t, 0) > mean + offset ? 1 : 0;
  return keep;
}

FeatureMatrix select_frames(const FeatureMatrix& feats, const std::vector<uint8_t>& keep,
                            const std::string& utt) {
  if (keep.size() != feats.rows)
    throw Error(ErrorCategory::kDimension, "vad mask length does not match frame count");
  size_t kept = 0;
  for (uint8_t k : keep) kept += k;
  if (kept == 0)
    throw Error(ErrorCategory::kVad, "vad removed every frame of utterance " + utt);
  FeatureMatrix out(kept, feats.cols);
  size_t r = 0;
  for (size_t t = 0; t < feats.rows; ++t) {
    if (!keep[t]) continue;
    std::copy(feats.row(t), feats.row(t) + feats.cols, out.data.begin() + r * feats.cols);
    ++r;
  }
  return out;
}

FeatureMatrix sliding_cmn(const FeatureMatrix& feats, int window_frames) {
  if (window_frames < 1)
    throw Error(ErrorCategory::kFeature, "cmn window must span at least one frame");
  const long rows = static_cast<long>(feats.rows);
  const long half_left = (window_frames - 1) / 2;
  const long half_right = window_frames / 2;
  FeatureMatrix out(feats.rows, feats.cols);
  std::vector<double> mean(feats.cols);
  for (long t = 0; t < rows; ++t) {
    const long lo = std::max(0L, t - half_left);
    const long hi = std::min(rows - 1, t + half_right);
    std::fill(mean.begin(), mean.end(), 0.0);
    for (long u = lo; u <= hi; ++u)
      for (size_t c = 0; c < feats.cols; ++c) mean[c] += feats.at(static_cast<size_t>(u), c);
    const double inv = 1.0 / static_cast<double>(hi - lo + 1);
    for (size_t c = 0; c < feats.cols; ++c)
      out.at(static_cast<size_t>(t), c) = feats.at(static_cast<size_t>(t), c) - mean[c] * inv;
  }
  return out;
}

FeatureMatrix featurize(const std::vector<double>& samples, const FeatureConfig& cfg,
                        const std::string& utt) {
  const FeatureMatrix raw = mfcc(samples, cfg);
  const auto keep = vad_mask(raw, cfg.vad_offset);
  const FeatureMatrix kept = select_frames(raw, keep, utt);
  return sliding_cmn(kept, cfg.cmn_window_frames());
}

void save_feature_cache(const std::string& path, const FeatureMatrix& feats) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCategory::kIo, "cannot open " + path + " for writing");
  os.write("SVKF", 4);
  auto put_u32 = [&os](uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 4);
  };
  put_u32(1);
  put_u32(static_cast<uint32_t>(feats.rows));
  put_u32(static_cast<uint32_t>(feats.cols));
  for (double v : feats.data) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
  }
  if (!os) throw Error(ErrorCategory::kIo, "write failed for " + path);
}

FeatureMatrix load_feature_cache(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCategory::kIo, "cannot open feature cache " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "SVKF", 4) != 0)
    throw Error(ErrorCategory::kIo, path + " is not a feature cache");
  auto get_u32 = [&is]() {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
  };
  const uint32_t version = get_u32();
  if (version != 1)
    throw Error(ErrorCategory::kIo, "unsupported feature cache version in " + path);
  const uint32_t rows = get_u32(), cols = get_u32();
  FeatureMatrix out(rows, cols);
  for (auto& v : out.data) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(b[i]) << (8 * i);
    std::memcpy(&v, &bits, 8);
  }
  if (!is) throw Error(ErrorCategory::kIo, "truncated feature cache " + path);
  return out;
}

}  // namespace svkit
