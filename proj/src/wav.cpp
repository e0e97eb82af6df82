#include "svkit/wav.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "svkit/errors.hpp"

namespace svkit {

namespace {

uint32_t get_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t get_u16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u16(std::ostream& os, uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

}  // namespace

WavData read_wav(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCategory::kIo, "cannot open wav file " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw Error(ErrorCategory::kIo, path + " is not a RIFF wav file");

  WavData out;
  bool have_fmt = false;
  size_t pos = 12;
  uint16_t channels = 0, bits = 0;
  while (pos + 8 <= bytes.size()) {
    const uint32_t chunk_size = get_u32(bytes.data() + pos + 4);
    const unsigned char* body = bytes.data() + pos + 8;
    if (pos + 8 + chunk_size > bytes.size())
      throw Error(ErrorCategory::kIo, "truncated wav chunk in " + path);
    if (std::memcmp(bytes.data() + pos, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw Error(ErrorCategory::kIo, "malformed fmt chunk in " + path);
      const uint16_t format = get_u16(body);
      channels = get_u16(body + 2);
      out.sample_rate = static_cast<int>(get_u32(body + 4));
      bits = get_u16(body + 14);
      if (format != 1)
        throw Error(ErrorCategory::kIo, path + ": only PCM wav is supported");
      if (channels != 1)
        throw Error(ErrorCategory::kIo, path + ": only mono wav is supported");
      if (bits != 16)
        throw Error(ErrorCategory::kIo, path + ": only 16-bit wav is supported");
      have_fmt = true;
    } else if (std::memcmp(bytes.data() + pos, "data", 4) == 0) {
      if (!have_fmt) throw Error(ErrorCategory::kIo, path + ": data chunk before fmt");
      const size_t n = chunk_size / 2;
      out.samples.resize(n);
      for (size_t i = 0; i < n; ++i) {
        const int16_t s = static_cast<int16_t>(get_u16(body + 2 * i));
        out.samples[i] = static_cast<double>(s) / 32768.0;
      }
      return out;
    }
    pos += 8 + chunk_size + (chunk_size & 1);
  }
  throw Error(ErrorCategory::kIo, path + " has no data chunk");
}

void write_wav(const std::string& path, const std::vector<double>& samples, int sample_rate) {
  if (sample_rate <= 0)
    throw Error(ErrorCategory::kContract, "write_wav: sample rate must be positive");
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCategory::kIo, "cannot open " + path + " for writing");

  const uint32_t data_bytes = static_cast<uint32_t>(samples.size() * 2);
  os.write("RIFF", 4);
  put_u32(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  put_u32(os, 16);
  put_u16(os, 1);  // PCM
  put_u16(os, 1);  // mono
  put_u32(os, static_cast<uint32_t>(sample_rate));
  put_u32(os, static_cast<uint32_t>(sample_rate * 2));
  put_u16(os, 2);
  put_u16(os, 16);
  os.write("data", 4);
  put_u32(os, data_bytes);
  for (double v : samples) {
    // scale by 32768 so values already on the 16-bit grid round-trip exactly
    long s = std::lrint(std::max(-1.0, std::min(1.0, v)) * 32768.0);
    s = std::max(-32768L, std::min(32767L, s));
    put_u16(os, static_cast<uint16_t>(static_cast<int16_t>(s)));
  }
  if (!os) throw Error(ErrorCategory::kIo, "write failed for " + path);
}

}  // namespace svkit
