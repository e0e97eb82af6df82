#pragma once

#include <string>

#include "svkit/checkpoint.hpp"
#include "svkit/rng.hpp"
#include "svkit/tensor.hpp"

namespace svkit {

// Affine layer, weights N(0, 1/sqrt(fan_in)), zero biases.
struct AffineLayer {
  Tensor w;  // [in x out]
  Tensor b;  // [out]

  void init(size_t in, size_t out, Rng& rng) {
    const double stddev = 1.0 / std::sqrt(static_cast<double>(in));
    w = Tensor::from({in, out}, rng.normal_vector(in * out, 0.0, stddev), true);
    b = Tensor::zeros({out}, true);
  }

  Tensor apply(Tape& tape, const Tensor& x) const { return tape.linear(x, w, b); }

  void collect(ParamSet& set, const std::string& prefix) {
    set.add(prefix + ".w", w);
    set.add(prefix + ".b", b);
  }
};

struct BatchNormLayer {
  Tensor gamma;
  Tensor beta;
  BatchNormState state;

  void init(size_t dim) {
    gamma = Tensor::full({dim}, 1.0, true);
    beta = Tensor::zeros({dim}, true);
    state = BatchNormState(dim);
  }

  Tensor apply(Tape& tape, const Tensor& x, Mode mode) {
    return tape.batchnorm(x, gamma, beta, state, mode);
  }

  void collect(ParamSet& set, const std::string& prefix) {
    set.add(prefix + ".gamma", gamma);
    set.add(prefix + ".beta", beta);
    set.add(prefix + ".running_mean", &state.running_mean);
    set.add(prefix + ".running_var", &state.running_var);
  }
};

}  // namespace svkit
