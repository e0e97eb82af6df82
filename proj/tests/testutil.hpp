#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "svkit/rng.hpp"
#include "svkit/tensor.hpp"

namespace testutil {

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

struct GradCheck {
  double max_rel_err = 0.0;
  size_t checked = 0;
};

// Central finite differences against the tape's analytic gradients.
// `fn` must rebuild the graph from the leaves on every call and return a
// scalar loss; it is evaluated 2*numel(leaves) extra times.
inline GradCheck check_gradients(std::vector<svkit::Tensor> leaves,
                                 const std::function<svkit::Tensor(svkit::Tape&)>& fn,
                                 double h = 1e-5) {
  using svkit::Tape;
  using svkit::Tensor;

  std::vector<std::vector<double>> analytic;
  {
    Tape tape;
    Tensor loss = fn(tape);
    for (auto& leaf : leaves) leaf.zero_grad();
    tape.backward(loss);
    for (auto& leaf : leaves) analytic.push_back(leaf.grad());
  }

  GradCheck result;
  for (size_t li = 0; li < leaves.size(); ++li) {
    auto& vals = leaves[li].value();
    for (size_t i = 0; i < vals.size(); ++i) {
      const double saved = vals[i];
      vals[i] = saved + h;
      double fp;
      {
        Tape tape;
        fp = fn(tape).item();
      }
      vals[i] = saved - h;
      double fm;
      {
        Tape tape;
        fm = fn(tape).item();
      }
      vals[i] = saved;
      const double numeric = (fp - fm) / (2.0 * h);
      result.max_rel_err = std::max(result.max_rel_err, rel_err(analytic[li][i], numeric));
      ++result.checked;
    }
  }
  return result;
}

inline svkit::Tensor random_tensor(std::vector<size_t> shape, svkit::Rng& rng,
                                   double scale = 1.0, bool requires_grad = true) {
  size_t n = 1;
  for (size_t d : shape) n *= d;
  std::vector<double> data(n);
  for (auto& v : data) v = rng.normal() * scale;
  return svkit::Tensor::from(std::move(shape), std::move(data), requires_grad);
}

// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    namespace fs = std::filesystem;
    base_ = fs::temp_directory_path() / ("svkit_" + tag + "_" + std::to_string(counter_++));
    fs::create_directories(base_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(base_, ec);
  }
  std::string path() const { return base_.string(); }
  std::string file(const std::string& name) const { return (base_ / name).string(); }

 private:
  static inline int counter_ = 0;
  std::filesystem::path base_;
};

inline std::string read_file_bytes(const std::string& path) {
  std::string out;
  if (FILE* f = std::fopen(path.c_str(), "rb")) {
    char buf[4096];
    size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) out.append(buf, n);
    std::fclose(f);
  }
  return out;
}

}  // namespace testutil
