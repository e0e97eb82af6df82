#pragma once

#include <string>
#include <vector>

#include "svkit/tensor.hpp"

namespace svkit {

// Named view of a model's state for serialization. Trainable tensors and
// non-trainable buffers (batchnorm running stats) share one namespace.
struct ParamRef {
  std::string name;
  Tensor tensor;
};

struct BufferRef {
  std::string name;
  std::vector<double>* data = nullptr;
};

struct ParamSet {
  std::vector<ParamRef> params;
  std::vector<BufferRef> buffers;

  void add(const std::string& name, const Tensor& t) { params.push_back({name, t}); }
  void add(const std::string& name, std::vector<double>* b) { buffers.push_back({name, b}); }

  /// Merge another set under a name prefix.
  void absorb(const std::string& prefix, const ParamSet& other);

  size_t num_values() const;

  /// Binary checkpoint, little-endian, magic "SVKP". Overwrites.
  void save(const std::string& path) const;

  /// Loads values in place. Names, shapes, and entry count must match.
  void load(const std::string& path);
};

}  // namespace svkit
