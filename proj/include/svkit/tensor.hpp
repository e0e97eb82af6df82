#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "svkit/errors.hpp"

namespace svkit {

enum class Mode { kTrain, kEval };

class Tape;

// Reference-counted value/grad pair. Rank 1 or 2, row-major, f64.
// Leaves (parameters, inputs) outlive the tape; op outputs are owned by it.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<size_t> shape, bool requires_grad = false);
  static Tensor full(std::vector<size_t> shape, double value, bool requires_grad = false);
  static Tensor from(std::vector<size_t> shape, std::vector<double> data,
                     bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const std::vector<size_t>& shape() const { return impl().shape; }
  size_t ndim() const { return impl().shape.size(); }
  size_t size() const { return impl().value.size(); }
  size_t rows() const;
  size_t cols() const;

  std::vector<double>& value() { return impl().value; }
  const std::vector<double>& value() const { return impl().value; }
  /// Mutable values through a const handle; same shared-state semantics.
  std::vector<double>& mutable_value() const { return mut().value; }

  /// Gradient buffer, allocated as zeros on first touch. Shared state:
  /// mutable through const tensors, like the rest of the impl.
  std::vector<double>& grad() const;
  bool has_grad() const { return impl_ && !impl_->grad.empty(); }
  void zero_grad() const;

  bool requires_grad() const { return impl_ && impl_->requires_grad; }

  double item() const;
  double at(size_t i) const { return impl().value[i]; }
  double at(size_t r, size_t c) const { return impl().value[r * cols() + c]; }

  bool same_shape(const Tensor& other) const { return shape() == other.shape(); }

 private:
  struct Impl {
    std::vector<size_t> shape;
    std::vector<double> value;
    std::vector<double> grad;
    bool requires_grad = false;
    long node_id = -1;  // index into the owning tape, -1 for leaves
  };

  explicit Tensor(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}

  Impl& impl() {
    if (!impl_) throw Error(ErrorCategory::kContract, "use of undefined tensor");
    return *impl_;
  }
  const Impl& impl() const {
    if (!impl_) throw Error(ErrorCategory::kContract, "use of undefined tensor");
    return *impl_;
  }
  Impl& mut() const {
    if (!impl_) throw Error(ErrorCategory::kContract, "use of undefined tensor");
    return *impl_;
  }

  std::shared_ptr<Impl> impl_;
  friend class Tape;
};

// Running statistics for one batchnorm layer. Persisted in checkpoints.
struct BatchNormState {
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  explicit BatchNormState(size_t dim = 0)
      : running_mean(dim, 0.0), running_var(dim, 1.0) {}
};

// Define-by-run graph. Records a backward closure per op; rebuilt every
// step. Not thread-safe: one tape per thread.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // ----- elementwise -----
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor sub(const Tensor& a, const Tensor& b);
  Tensor mul(const Tensor& a, const Tensor& b);
  Tensor add(const Tensor& a, double c);
  Tensor scale(const Tensor& a, double c);
  Tensor relu(const Tensor& a);
  Tensor sigmoid(const Tensor& a);
  Tensor tanh(const Tensor& a);
  Tensor exp(const Tensor& a);
  Tensor log(const Tensor& a);    // domain: strictly positive
  Tensor sqrt(const Tensor& a);   // domain: non-negative
  Tensor square(const Tensor& a);

  // ----- matrix / structural -----
  Tensor matmul(const Tensor& a, const Tensor& b);
  /// x [B x D] * w [D x N] + b [N] broadcast over rows.
  Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);
  Tensor concat(const std::vector<Tensor>& parts, size_t axis);
  /// Half-open [start, end) along axis.
  Tensor slice(const Tensor& a, size_t axis, size_t start, size_t end);
  Tensor gather_rows(const Tensor& a, const std::vector<size_t>& rows);
  Tensor reshape(const Tensor& a, std::vector<size_t> shape);

  // ----- reductions -----
  Tensor sum(const Tensor& a);
  Tensor mean(const Tensor& a);
  Tensor sum(const Tensor& a, size_t axis);
  Tensor mean(const Tensor& a, size_t axis);
  /// Population standard deviation along axis, sqrt(var + eps).
  Tensor stddev(const Tensor& a, size_t axis, double eps = 1e-10);

  // ----- fused network ops -----
  Tensor batchnorm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                   BatchNormState& state, Mode mode);
  /// Mean negative log softmax probability of the labelled class.
  Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels);
  /// Mean binary cross-entropy evaluated in logit space.
  Tensor bce_with_logits(const Tensor& logits, const std::vector<double>& targets);
  /// Rows scaled to unit Euclidean norm; zero rows are a domain error.
  Tensor rows_l2_normalize(const Tensor& a);

  /// Register an externally computed op. `backward` receives the output
  /// tensor and must accumulate (+=) into the grads of its inputs.
  Tensor custom(std::vector<size_t> shape, std::vector<double> value,
                const std::function<void(Tensor&)>& backward = nullptr);

  /// Seeds d(loss)/d(loss)=1 and walks the ops once in reverse. Leaf grads
  /// accumulate across calls; op-output grads are reset internally.
  void backward(const Tensor& loss);

  size_t num_ops() const { return ops_.size(); }

  /// When set, forward ops throw ErrorCategory::kNumeric on NaN/Inf output.
  void set_check_finite(bool enabled) { check_finite_ = enabled; }
  bool check_finite() const { return check_finite_; }

 private:
  Tensor make(std::vector<size_t> shape);
  void record(std::function<void()> backward);
  void check_values(const Tensor& t, const char* op);
  Tensor unary(const Tensor& a, const char* name, double (*f)(double),
               double (*df)(double value, double output));

  std::vector<std::function<void()>> ops_;
  std::vector<std::shared_ptr<Tensor::Impl>> outputs_;
  bool check_finite_ = false;
};

}  // namespace svkit
