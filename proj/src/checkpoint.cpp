#include "svkit/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "svkit/errors.hpp"

namespace svkit {

namespace {

constexpr char kMagic[4] = {'S', 'V', 'K', 'P'};
constexpr uint32_t kVersion = 1;

void put_u16(std::ostream& os, uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& os, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

uint16_t get_u16(std::istream& is) {
  unsigned char b[2];
  is.read(reinterpret_cast<char*>(b), 2);
  return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

void write_entry(std::ostream& os, const std::string& name, const std::vector<size_t>& shape,
                 const std::vector<double>& data) {
  if (name.size() > 0xffff)
    throw Error(ErrorCategory::kContract, "checkpoint entry name too long");
  put_u16(os, static_cast<uint16_t>(name.size()));
  os.write(name.data(), static_cast<std::streamsize>(name.size()));
  os.put(static_cast<char>(shape.size()));
  for (size_t d : shape) put_u32(os, static_cast<uint32_t>(d));
  for (double v : data) put_f64(os, v);
}

struct EntryHeader {
  std::string name;
  std::vector<size_t> shape;
  size_t numel;
};

EntryHeader read_entry_header(std::istream& is, const std::string& path) {
  EntryHeader h;
  const uint16_t name_len = get_u16(is);
  h.name.resize(name_len);
  is.read(h.name.data(), name_len);
  const int ndim = is.get();
  if (!is || ndim < 1 || ndim > 2)
    throw Error(ErrorCategory::kIo, "corrupt checkpoint entry in " + path);
  h.numel = 1;
  for (int i = 0; i < ndim; ++i) {
    const uint32_t d = get_u32(is);
    h.shape.push_back(d);
    h.numel *= d;
  }
  if (!is) throw Error(ErrorCategory::kIo, "truncated checkpoint " + path);
  return h;
}

}  // namespace

void ParamSet::absorb(const std::string& prefix, const ParamSet& other) {
  for (const auto& p : other.params) params.push_back({prefix + p.name, p.tensor});
  for (const auto& b : other.buffers) buffers.push_back({prefix + b.name, b.data});
}

size_t ParamSet::num_values() const {
  size_t n = 0;
  for (const auto& p : params) n += p.tensor.size();
  for (const auto& b : buffers) n += b.data->size();
  return n;
}

void ParamSet::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCategory::kIo, "cannot open " + path + " for writing");
  os.write(kMagic, 4);
  put_u32(os, kVersion);
  put_u32(os, static_cast<uint32_t>(params.size() + buffers.size()));
  for (const auto& p : params) write_entry(os, p.name, p.tensor.shape(), p.tensor.value());
  for (const auto& b : buffers) write_entry(os, b.name, {b.data->size()}, *b.data);
  if (!os) throw Error(ErrorCategory::kIo, "write failed for " + path);
}

void ParamSet::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCategory::kIo, "cannot open checkpoint " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw Error(ErrorCategory::kIo, path + " is not a checkpoint file");
  const uint32_t version = get_u32(is);
  if (version != kVersion)
    throw Error(ErrorCategory::kIo,
                "unsupported checkpoint version " + std::to_string(version) + " in " + path);
  const uint32_t count = get_u32(is);
  if (count != params.size() + buffers.size())
    throw Error(ErrorCategory::kIo, "checkpoint " + path + " holds " + std::to_string(count) +
                                        " entries, model expects " +
                                        std::to_string(params.size() + buffers.size()));
  for (auto& p : params) {
    const EntryHeader h = read_entry_header(is, path);
    if (h.name != p.name)
      throw Error(ErrorCategory::kIo,
                  "checkpoint entry '" + h.name + "' where '" + p.name + "' was expected");
    if (h.shape != p.tensor.shape())
      throw Error(ErrorCategory::kIo, "shape mismatch for checkpoint entry '" + h.name + "'");
    for (auto& v : p.tensor.value()) v = get_f64(is);
  }
  for (auto& b : buffers) {
    const EntryHeader h = read_entry_header(is, path);
    if (h.name != b.name)
      throw Error(ErrorCategory::kIo,
                  "checkpoint entry '" + h.name + "' where '" + b.name + "' was expected");
    if (h.numel != b.data->size())
      throw Error(ErrorCategory::kIo, "size mismatch for checkpoint entry '" + h.name + "'");
    for (auto& v : *b.data) v = get_f64(is);
  }
  if (!is) throw Error(ErrorCategory::kIo, "truncated checkpoint " + path);
}

}  // namespace svkit
