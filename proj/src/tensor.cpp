#include "svkit/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace svkit {

namespace {

size_t shape_numel(const std::vector<size_t>& shape) {
  size_t n = 1;
  for (size_t d : shape) n *= d;
  return n;
}

void require(bool ok, ErrorCategory cat, const std::string& msg) {
  if (!ok) throw Error(cat, msg);
}

std::string shape_str(const std::vector<size_t>& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

// c [m x n] += a [m x k] * b [k x n], row-major.
void matmul_acc(const double* a, const double* b, double* c, size_t m, size_t k, size_t n) {
  for (size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b + p * n;
      for (size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// c [m x n] += a [m x k] * b^T where b is [n x k].
void matmul_bt_acc(const double* a, const double* b, double* c, size_t m, size_t k, size_t n) {
  for (size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (size_t j = 0; j < n; ++j) {
      const double* brow = b + j * k;
      double acc = 0.0;
      for (size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] += acc;
    }
  }
}

// c [k x n] += a^T * b where a is [m x k], b is [m x n].
void matmul_at_acc(const double* a, const double* b, double* c, size_t m, size_t k, size_t n) {
  for (size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    const double* brow = b + i * n;
    for (size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      double* crow = c + p * n;
      for (size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace

// ----- Tensor -----

Tensor Tensor::zeros(std::vector<size_t> shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(std::vector<size_t> shape, double value, bool requires_grad) {
  require(!shape.empty() && shape.size() <= 2, ErrorCategory::kDimension,
          "tensor rank must be 1 or 2");
  auto impl = std::make_shared<Impl>();
  impl->value.assign(shape_numel(shape), value);
  impl->shape = std::move(shape);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::from(std::vector<size_t> shape, std::vector<double> data, bool requires_grad) {
  require(!shape.empty() && shape.size() <= 2, ErrorCategory::kDimension,
          "tensor rank must be 1 or 2");
  require(shape_numel(shape) == data.size(), ErrorCategory::kDimension,
          "tensor data length " + std::to_string(data.size()) + " does not match shape " +
              shape_str(shape));
  auto impl = std::make_shared<Impl>();
  impl->shape = std::move(shape);
  impl->value = std::move(data);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

size_t Tensor::rows() const {
  const auto& s = shape();
  return s.size() == 2 ? s[0] : 1;
}

size_t Tensor::cols() const {
  const auto& s = shape();
  return s.size() == 2 ? s[1] : s[0];
}

std::vector<double>& Tensor::grad() const {
  Impl& im = mut();
  if (im.grad.empty()) im.grad.assign(im.value.size(), 0.0);
  return im.grad;
}

void Tensor::zero_grad() const {
  if (impl_ && !impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

double Tensor::item() const {
  require(size() == 1, ErrorCategory::kDimension, "item() requires a single-element tensor");
  return impl().value[0];
}

// ----- Tape plumbing -----

Tensor Tape::make(std::vector<size_t> shape) {
  Tensor t = Tensor::zeros(std::move(shape));
  t.impl_->node_id = static_cast<long>(outputs_.size());
  outputs_.push_back(t.impl_);
  return t;
}

void Tape::record(std::function<void()> backward) {
  ops_.push_back(std::move(backward));
}

void Tape::check_values(const Tensor& t, const char* op) {
  if (!check_finite_) return;
  for (double v : t.value()) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCategory::kNumeric,
                  std::string("non-finite value produced by op '") + op + "'");
    }
  }
}

Tensor Tape::custom(std::vector<size_t> shape, std::vector<double> value,
                    const std::function<void(Tensor&)>& backward) {
  Tensor out = make(std::move(shape));
  require(out.size() == value.size(), ErrorCategory::kDimension,
          "custom op value length does not match shape");
  out.value() = std::move(value);
  if (backward) record([backward, out]() mutable { backward(out); });
  check_values(out, "custom");
  return out;
}

void Tape::backward(const Tensor& loss) {
  require(loss.size() == 1, ErrorCategory::kContract, "backward target must be scalar");
  require(loss.impl_ && loss.impl_->node_id >= 0, ErrorCategory::kContract,
          "backward target must be an op output of this tape");
  for (auto& impl : outputs_) impl->grad.assign(impl->value.size(), 0.0);
  loss.impl_->grad[0] = 1.0;
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
}

// ----- elementwise -----

Tensor Tape::add(const Tensor& a, const Tensor& b) {
  require(a.same_shape(b), ErrorCategory::kDimension,
          "add: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  Tensor out = make(a.shape());
  const size_t n = out.size();
  for (size_t i = 0; i < n; ++i) out.value()[i] = a.value()[i] + b.value()[i];
  check_values(out, "add");
  record([a, b, out]() mutable {
    const auto& g = out.grad();
    auto& ga = a.grad();
    auto& gb = b.grad();
    for (size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i];
      gb[i] += g[i];
    }
  });
  return out;
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
  require(a.same_shape(b), ErrorCategory::kDimension,
          "sub: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  Tensor out = make(a.shape());
  const size_t n = out.size();
  for (size_t i = 0; i < n; ++i) out.value()[i] = a.value()[i] - b.value()[i];
  check_values(out, "sub");
  record([a, b, out]() mutable {
    const auto& g = out.grad();
    auto& ga = a.grad();
    auto& gb = b.grad();
    for (size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i];
      gb[i] -= g[i];
    }
  });
  return out;
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
  require(a.same_shape(b), ErrorCategory::kDimension,
          "mul: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  Tensor out = make(a.shape());
  const size_t n = out.size();
  for (size_t i = 0; i < n; ++i) out.value()[i] = a.value()[i] * b.value()[i];
  check_values(out, "mul");
  record([a, b, out]() mutable {
    const auto& g = out.grad();
    auto& ga = a.grad();
    auto& gb = b.grad();
    for (size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i] * b.value()[i];
      gb[i] += g[i] * a.value()[i];
    }
  });
  return out;
}

Tensor Tape::add(const Tensor& a, double c) {
  Tensor out = make(a.shape());
  for (size_t i = 0; i < out.size(); ++i) out.value()[i] = a.value()[i] + c;
  check_values(out, "add_scalar");
  record([a, out]() mutable {
    const auto& g = out.grad();
    auto& ga = a.grad();
    for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
  return out;
}

Tensor Tape::scale(const Tensor& a, double c) {
  Tensor out = make(a.shape());
  for (size_t i = 0; i < out.size(); ++i) out.value()[i] = a.value()[i] * c;
  check_values(out, "scale");
  record([a, out, c]() mutable {
    const auto& g = out.grad();
    auto& ga = a.grad();
    for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * c;
  });
  return out;
}

Tensor Tape::unary(const Tensor& a, const char* name, double (*f)(double),
                   double (*df)(double, double)) {
  Tensor out = make(a.shape());
  for (size_t i = 0; i < out.size(); ++i) out.value()[i] = f(a.value()[i]);
  check_values(out, name);
  record([a, out, df]() mutable {
    const auto& g = out.grad();
    auto& ga = a.grad();
    for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * df(a.value()[i], out.value()[i]);
  });
  return out;
}

Tensor Tape::relu(const Tensor& a) {
  // Subgradient at 0 is 0.
  return unary(
      a, "relu", +[](double x) { return x > 0.0 ? x : 0.0; },
      +[](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor Tape::sigmoid(const Tensor& a) {
  return unary(
      a, "sigmoid",
      +[](double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); },
      +[](double, double y) { return y * (1.0 - y); });
}

Tensor Tape::tanh(const Tensor& a) {
  return unary(
      a, "tanh", +[](double x) { return std::tanh(x); },
      +[](double, double y) { return 1.0 - y * y; });
}

Tensor Tape::exp(const Tensor& a) {
  return unary(
      a, "exp", +[](double x) { return std::exp(x); },
      +[](double, double y) { return y; });
}

Tensor Tape::log(const Tensor& a) {
  for (double v : a.value())
    require(v > 0.0, ErrorCategory::kDomain, "log: input must be strictly positive");
  return unary(
      a, "log", +[](double x) { return std::log(x); },
      +[](double x, double) { return 1.0 / x; });
}

Tensor Tape::sqrt(const Tensor& a) {
  for (double v : a.value())
    require(v >= 0.0, ErrorCategory::kDomain, "sqrt: input must be non-negative");
  return unary(
      a, "sqrt", +[](double x) { return std::sqrt(x); },
      +[](double, double y) { return y > 0.0 ? 0.5 / y : 0.0; });
}

Tensor Tape::square(const Tensor& a) {
  return unary(
      a, "square", +[](double x) { return x * x; },
      +[](double x, double) { return 2.0 * x; });
}

// ----- matrix / structural -----

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
  require(a.ndim() == 2 && b.ndim() == 2, ErrorCategory::kDimension,
          "matmul requires rank-2 operands");
  require(a.cols() == b.rows(), ErrorCategory::kDimension,
          "matmul: inner dimensions differ, " + shape_str(a.shape()) + " vs " +
              shape_str(b.shape()));
  const size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out = make({m, n});
  matmul_acc(a.value().data(), b.value().data(), out.value().data(), m, k, n);
  check_values(out, "matmul");
  record([a, b, out, m, k, n]() mutable {
    const double* g = out.grad().data();
    matmul_bt_acc(g, b.value().data(), a.grad().data(), m, n, k);
    matmul_at_acc(a.value().data(), g, b.grad().data(), m, k, n);
  });
  return out;
}

Tensor Tape::linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  require(x.ndim() == 2 && w.ndim() == 2 && b.ndim() == 1, ErrorCategory::kDimension,
          "linear expects x[BxD], w[DxN], b[N]");
  require(x.cols() == w.rows() && w.cols() == b.size(), ErrorCategory::kDimension,
          "linear: incompatible shapes " + shape_str(x.shape()) + ", " + shape_str(w.shape()) +
              ", " + shape_str(b.shape()));
  const size_t m = x.rows(), k = x.cols(), n = w.cols();
  Tensor out = make({m, n});
  for (size_t i = 0; i < m; ++i) {
    double* row = out.value().data() + i * n;
    for (size_t j = 0; j < n; ++j) row[j] = b.value()[j];
  }
  matmul_acc(x.value().data(), w.value().data(), out.value().data(), m, k, n);
  check_values(out, "linear");
  record([x, w, b, out, m, k, n]() mutable {
    const double* g = out.grad().data();
    matmul_bt_acc(g, w.value().data(), x.grad().data(), m, n, k);
    matmul_at_acc(x.value().data(), g, w.grad().data(), m, k, n);
    auto& gb = b.grad();
    for (size_t i = 0; i < m; ++i)
      for (size_t j = 0; j < n; ++j) gb[j] += g[i * n + j];
  });
  return out;
}

Tensor Tape::concat(const std::vector<Tensor>& parts, size_t axis) {
  require(!parts.empty(), ErrorCategory::kDimension, "concat of zero tensors");
  const size_t nd = parts[0].ndim();
  require(axis < nd, ErrorCategory::kDimension, "concat axis out of range");
  for (const auto& p : parts)
    require(p.ndim() == nd, ErrorCategory::kDimension, "concat rank mismatch");

  if (nd == 1 || axis == 0) {
    const size_t cols = nd == 2 ? parts[0].cols() : 0;
    size_t total = 0;
    for (const auto& p : parts) {
      if (nd == 2)
        require(p.cols() == cols, ErrorCategory::kDimension, "concat column mismatch");
      total += nd == 2 ? p.rows() : p.size();
    }
    Tensor out = make(nd == 2 ? std::vector<size_t>{total, cols} : std::vector<size_t>{total});
    size_t offset = 0;
    for (const auto& p : parts) {
      std::copy(p.value().begin(), p.value().end(), out.value().begin() + offset);
      offset += p.size();
    }
    record([parts, out]() mutable {
      const auto& g = out.grad();
      size_t offset = 0;
      for (auto& p : parts) {
        auto& gp = p.grad();
        for (size_t i = 0; i < gp.size(); ++i) gp[i] += g[offset + i];
        offset += gp.size();
      }
    });
    return out;
  }

  // axis == 1, rank 2
  const size_t rows = parts[0].rows();
  size_t total_cols = 0;
  for (const auto& p : parts) {
    require(p.rows() == rows, ErrorCategory::kDimension, "concat row mismatch");
    total_cols += p.cols();
  }
  Tensor out = make({rows, total_cols});
  size_t col_off = 0;
  for (const auto& p : parts) {
    const size_t pc = p.cols();
    for (size_t r = 0; r < rows; ++r)
      std::copy(p.value().begin() + r * pc, p.value().begin() + (r + 1) * pc,
                out.value().begin() + r * total_cols + col_off);
    col_off += pc;
  }
  record([parts, out, rows, total_cols]() mutable {
    const auto& g = out.grad();
    size_t col_off = 0;
    for (auto& p : parts) {
      const size_t pc = p.cols();
      auto& gp = p.grad();
      for (size_t r = 0; r < rows; ++r)
        for (size_t c = 0; c < pc; ++c) gp[r * pc + c] += g[r * total_cols + col_off + c];
      col_off += pc;
    }
  });
  return out;
}

Tensor Tape::slice(const Tensor& a, size_t axis, size_t start, size_t end) {
  require(axis < a.ndim(), ErrorCategory::kDimension, "slice axis out of range");
  const size_t extent = a.shape()[axis];
  require(start < end && end <= extent, ErrorCategory::kDimension,
          "slice range [" + std::to_string(start) + "," + std::to_string(end) +
              ") out of bounds for extent " + std::to_string(extent));
  if (a.ndim() == 1) {
    Tensor out = make({end - start});
    std::copy(a.value().begin() + start, a.value().begin() + end, out.value().begin());
    record([a, out, start]() mutable {
      const auto& g = out.grad();
      auto& ga = a.grad();
      for (size_t i = 0; i < g.size(); ++i) ga[start + i] += g[i];
    });
    return out;
  }
  const size_t rows = a.rows(), cols = a.cols();
  if (axis == 0) {
    Tensor out = make({end - start, cols});
    std::copy(a.value().begin() + start * cols, a.value().begin() + end * cols,
              out.value().begin());
    record([a, out, start, cols]() mutable {
      const auto& g = out.grad();
      auto& ga = a.grad();
      for (size_t i = 0; i < g.size(); ++i) ga[start * cols + i] += g[i];
    });
    return out;
  }
  Tensor out = make({rows, end - start});
  const size_t oc = end - start;
  for (size_t r = 0; r < rows; ++r)
    std::copy(a.value().begin() + r * cols + start, a.value().begin() + r * cols + end,
              out.value().begin() + r * oc);
  record([a, out, start, rows, cols, oc]() mutable {
    const auto& g = out.grad();
    auto& ga = a.grad();
    for (size_t r = 0; r < rows; ++r)
      for (size_t c = 0; c < oc; ++c) ga[r * cols + start + c] += g[r * oc + c];
  });
  return out;
}

Tensor Tape::gather_rows(const Tensor& a, const std::vector<size_t>& rows) {
  require(a.ndim() == 2, ErrorCategory::kDimension, "gather_rows requires rank 2");
  const size_t cols = a.cols();
  for (size_t r : rows)
    require(r < a.rows(), ErrorCategory::kDimension, "gather_rows index out of range");
  Tensor out = make({rows.size(), cols});
  for (size_t i = 0; i < rows.size(); ++i)
    std::copy(a.value().begin() + rows[i] * cols, a.value().begin() + (rows[i] + 1) * cols,
              out.value().begin() + i * cols);
  record([a, out, rows, cols]() mutable {
    const auto& g = out.grad();
    auto& ga = a.grad();
    for (size_t i = 0; i < rows.size(); ++i)
      for (size_t c = 0; c < cols; ++c) ga[rows[i] * cols + c] += g[i * cols + c];
  });
  return out;
}

Tensor Tape::reshape(const Tensor& a, std::vector<size_t> shape) {
  require(shape_numel(shape) == a.size(), ErrorCategory::kDimension,
          "reshape: element count mismatch");
  Tensor out = make(std::move(shape));
  out.value() = a.value();
  record([a, out]() mutable {
    const auto& g = out.grad();
    auto& ga = a.grad();
    for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
  return out;
}

// ----- reductions -----

Tensor Tape::sum(const Tensor& a) {
  Tensor out = make({1});
  out.value()[0] = std::accumulate(a.value().begin(), a.value().end(), 0.0);
  check_values(out, "sum");
  record([a, out]() mutable {
    const double g = out.grad()[0];
    auto& ga = a.grad();
    for (double& v : ga) v += g;
  });
  return out;
}

Tensor Tape::mean(const Tensor& a) {
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor Tape::sum(const Tensor& a, size_t axis) {
  require(axis < a.ndim(), ErrorCategory::kDimension, "sum axis out of range");
  if (a.ndim() == 1) return sum(a);
  const size_t rows = a.rows(), cols = a.cols();
  if (axis == 0) {
    Tensor out = make({1, cols});
    for (size_t r = 0; r < rows; ++r)
      for (size_t c = 0; c < cols; ++c) out.value()[c] += a.value()[r * cols + c];
    record([a, out, rows, cols]() mutable {
      const auto& g = out.grad();
      auto& ga = a.grad();
      for (size_t r = 0; r < rows; ++r)
        for (size_t c = 0; c < cols; ++c) ga[r * cols + c] += g[c];
    });
    return out;
  }
  Tensor out = make({rows, 1});
  for (size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (size_t c = 0; c < cols; ++c) acc += a.value()[r * cols + c];
    out.value()[r] = acc;
  }
  record([a, out, rows, cols]() mutable {
    const auto& g = out.grad();
    auto& ga = a.grad();
    for (size_t r = 0; r < rows; ++r)
      for (size_t c = 0; c < cols; ++c) ga[r * cols + c] += g[r];
  });
  return out;
}

Tensor Tape::mean(const Tensor& a, size_t axis) {
  require(axis < a.ndim(), ErrorCategory::kDimension, "mean axis out of range");
  const size_t extent = a.ndim() == 1 ? a.size() : a.shape()[axis];
  return scale(sum(a, axis), 1.0 / static_cast<double>(extent));
}

Tensor Tape::stddev(const Tensor& a, size_t axis, double eps) {
  require(axis < a.ndim(), ErrorCategory::kDimension, "stddev axis out of range");
  require(a.ndim() == 2, ErrorCategory::kDimension, "stddev requires rank 2");
  const size_t rows = a.rows(), cols = a.cols();
  const size_t n = axis == 0 ? rows : cols;
  require(n >= 2, ErrorCategory::kDimension, "stddev needs at least 2 elements along axis");

  const std::vector<size_t> out_shape =
      axis == 0 ? std::vector<size_t>{1, cols} : std::vector<size_t>{rows, 1};
  Tensor out = make(out_shape);
  const size_t groups = axis == 0 ? cols : rows;
  std::vector<double> means(groups, 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (size_t g = 0; g < groups; ++g) {
    double m = 0.0, sq = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double v = axis == 0 ? a.value()[i * cols + g] : a.value()[g * cols + i];
      m += v;
    }
    m *= inv_n;
    for (size_t i = 0; i < n; ++i) {
      const double v = axis == 0 ? a.value()[i * cols + g] : a.value()[g * cols + i];
      sq += (v - m) * (v - m);
    }
    means[g] = m;
    out.value()[g] = std::sqrt(sq * inv_n + eps);
  }
  check_values(out, "stddev");
  record([a, out, means, axis, rows, cols, n, inv_n]() mutable {
    const auto& g = out.grad();
    auto& ga = a.grad();
    const size_t groups = axis == 0 ? cols : rows;
    for (size_t k = 0; k < groups; ++k) {
      const double s = out.value()[k];
      const double coef = g[k] * inv_n / s;
      for (size_t i = 0; i < n; ++i) {
        const size_t idx = axis == 0 ? i * cols + k : k * cols + i;
        ga[idx] += coef * (a.value()[idx] - means[k]);
      }
    }
  });
  return out;
}

// ----- fused network ops -----

Tensor Tape::batchnorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                       BatchNormState& state, Mode mode) {
  require(x.ndim() == 2, ErrorCategory::kDimension, "batchnorm input must be rank 2");
  const size_t rows = x.rows(), cols = x.cols();
  require(gamma.ndim() == 1 && gamma.size() == cols && beta.ndim() == 1 && beta.size() == cols,
          ErrorCategory::kDimension, "batchnorm parameter size mismatch");
  require(state.running_mean.size() == cols && state.running_var.size() == cols,
          ErrorCategory::kDimension, "batchnorm state size mismatch");

  Tensor out = make({rows, cols});
  const double eps = state.eps;

  if (mode == Mode::kTrain) {
    require(rows >= 2, ErrorCategory::kDimension,
            "batchnorm training requires a batch of at least 2 rows");
    const double inv_n = 1.0 / static_cast<double>(rows);
    std::vector<double> mu(cols, 0.0), var(cols, 0.0), inv_std(cols, 0.0);
    for (size_t r = 0; r < rows; ++r)
      for (size_t c = 0; c < cols; ++c) mu[c] += x.value()[r * cols + c];
    for (size_t c = 0; c < cols; ++c) mu[c] *= inv_n;
    for (size_t r = 0; r < rows; ++r)
      for (size_t c = 0; c < cols; ++c) {
        const double d = x.value()[r * cols + c] - mu[c];
        var[c] += d * d;
      }
    for (size_t c = 0; c < cols; ++c) {
      var[c] *= inv_n;  // population variance
      inv_std[c] = 1.0 / std::sqrt(var[c] + eps);
      state.running_mean[c] = (1.0 - state.momentum) * state.running_mean[c] + state.momentum * mu[c];
      state.running_var[c] = (1.0 - state.momentum) * state.running_var[c] + state.momentum * var[c];
    }
    // xhat retained for backward
    auto xhat = std::make_shared<std::vector<double>>(rows * cols);
    for (size_t r = 0; r < rows; ++r)
      for (size_t c = 0; c < cols; ++c) {
        const double h = (x.value()[r * cols + c] - mu[c]) * inv_std[c];
        (*xhat)[r * cols + c] = h;
        out.value()[r * cols + c] = gamma.value()[c] * h + beta.value()[c];
      }
    check_values(out, "batchnorm");
    record([x, gamma, beta, out, xhat, inv_std, rows, cols, inv_n]() mutable {
      const auto& g = out.grad();
      auto& gx = x.grad();
      auto& gg = gamma.grad();
      auto& gb = beta.grad();
      std::vector<double> sum_g(cols, 0.0), sum_gh(cols, 0.0);
      for (size_t r = 0; r < rows; ++r)
        for (size_t c = 0; c < cols; ++c) {
          const double gv = g[r * cols + c];
          sum_g[c] += gv;
          sum_gh[c] += gv * (*xhat)[r * cols + c];
        }
      for (size_t c = 0; c < cols; ++c) {
        gg[c] += sum_gh[c];
        gb[c] += sum_g[c];
      }
      for (size_t r = 0; r < rows; ++r)
        for (size_t c = 0; c < cols; ++c) {
          const size_t i = r * cols + c;
          gx[i] += gamma.value()[c] * inv_std[c] *
                   (g[i] - inv_n * sum_g[c] - inv_n * (*xhat)[i] * sum_gh[c]);
        }
    });
    return out;
  }

  // eval: running statistics, no state update
  std::vector<double> inv_std(cols);
  for (size_t c = 0; c < cols; ++c) inv_std[c] = 1.0 / std::sqrt(state.running_var[c] + eps);
  const std::vector<double> mu = state.running_mean;
  for (size_t r = 0; r < rows; ++r)
    for (size_t c = 0; c < cols; ++c)
      out.value()[r * cols + c] =
          gamma.value()[c] * (x.value()[r * cols + c] - mu[c]) * inv_std[c] + beta.value()[c];
  check_values(out, "batchnorm");
  record([x, gamma, beta, out, mu, inv_std, rows, cols]() mutable {
    const auto& g = out.grad();
    auto& gx = x.grad();
    auto& gg = gamma.grad();
    auto& gb = beta.grad();
    for (size_t r = 0; r < rows; ++r)
      for (size_t c = 0; c < cols; ++c) {
        const size_t i = r * cols + c;
        const double h = (x.value()[i] - mu[c]) * inv_std[c];
        gx[i] += g[i] * gamma.value()[c] * inv_std[c];
        gg[c] += g[i] * h;
        gb[c] += g[i];
      }
  });
  return out;
}

Tensor Tape::cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
  require(logits.ndim() == 2, ErrorCategory::kDimension, "cross_entropy logits must be rank 2");
  const size_t rows = logits.rows(), cols = logits.cols();
  require(labels.size() == rows, ErrorCategory::kDimension,
          "cross_entropy: " + std::to_string(labels.size()) + " labels for " +
              std::to_string(rows) + " rows");
  for (int l : labels)
    require(l >= 0 && static_cast<size_t>(l) < cols, ErrorCategory::kLookup,
            "cross_entropy label out of range");

  auto probs = std::make_shared<std::vector<double>>(rows * cols);
  Tensor out = make({1});
  double total = 0.0;
  for (size_t r = 0; r < rows; ++r) {
    const double* row = logits.value().data() + r * cols;
    double mx = row[0];
    for (size_t c = 1; c < cols; ++c) mx = std::max(mx, row[c]);
    double z = 0.0;
    for (size_t c = 0; c < cols; ++c) z += std::exp(row[c] - mx);
    const double logz = std::log(z) + mx;
    for (size_t c = 0; c < cols; ++c) (*probs)[r * cols + c] = std::exp(row[c] - logz);
    total += logz - row[labels[r]];
  }
  out.value()[0] = total / static_cast<double>(rows);
  check_values(out, "cross_entropy");
  record([logits, out, probs, labels, rows, cols]() mutable {
    const double g = out.grad()[0] / static_cast<double>(rows);
    auto& gl = logits.grad();
    for (size_t r = 0; r < rows; ++r) {
      for (size_t c = 0; c < cols; ++c) gl[r * cols + c] += g * (*probs)[r * cols + c];
      gl[r * cols + labels[r]] -= g;
    }
  });
  return out;
}

Tensor Tape::bce_with_logits(const Tensor& logits, const std::vector<double>& targets) {
  require(logits.size() == targets.size(), ErrorCategory::kDimension,
          "bce_with_logits: logit/target count mismatch");
  for (double t : targets)
    require(t >= 0.0 && t <= 1.0, ErrorCategory::kDomain, "bce target must lie in [0,1]");
  const size_t n = logits.size();
  Tensor out = make({1});
  double total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double z = logits.value()[i];
    // max(z,0) - z*y + log(1 + exp(-|z|))
    total += std::max(z, 0.0) - z * targets[i] + std::log1p(std::exp(-std::abs(z)));
  }
  out.value()[0] = total / static_cast<double>(n);
  check_values(out, "bce_with_logits");
  record([logits, out, targets, n]() mutable {
    const double g = out.grad()[0] / static_cast<double>(n);
    auto& gl = logits.grad();
    for (size_t i = 0; i < n; ++i) {
      const double z = logits.value()[i];
      const double s = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
      gl[i] += g * (s - targets[i]);
    }
  });
  return out;
}

Tensor Tape::rows_l2_normalize(const Tensor& a) {
  require(a.ndim() == 2, ErrorCategory::kDimension, "rows_l2_normalize requires rank 2");
  const size_t rows = a.rows(), cols = a.cols();
  Tensor out = make({rows, cols});
  std::vector<double> norms(rows);
  for (size_t r = 0; r < rows; ++r) {
    double sq = 0.0;
    for (size_t c = 0; c < cols; ++c) sq += a.value()[r * cols + c] * a.value()[r * cols + c];
    const double nrm = std::sqrt(sq);
    require(nrm > 0.0, ErrorCategory::kDomain, "cannot l2-normalize a zero row");
    norms[r] = nrm;
    for (size_t c = 0; c < cols; ++c) out.value()[r * cols + c] = a.value()[r * cols + c] / nrm;
  }
  check_values(out, "rows_l2_normalize");
  record([a, out, norms, rows, cols]() mutable {
    const auto& g = out.grad();
    auto& ga = a.grad();
    for (size_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (size_t c = 0; c < cols; ++c) dot += g[r * cols + c] * out.value()[r * cols + c];
      for (size_t c = 0; c < cols; ++c)
        ga[r * cols + c] += (g[r * cols + c] - dot * out.value()[r * cols + c]) / norms[r];
    }
  });
  return out;
}

}  // namespace svkit
