#pragma once

#include <cstddef>
#include <vector>

#include "mwp/numerics/graph.hpp"
#include "mwp/numerics/tensor.hpp"

namespace mwp {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
};

// Adam with bias-corrected moments. Moments are allocated lazily to match the
// parameter list passed to the first step().
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  void step(std::vector<Parameter>& params);

  const AdamOptions& options() const { return options_; }
  void set_lr(double lr) { options_.lr = lr; }
  std::size_t steps() const { return steps_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }

 private:
  AdamOptions options_;
  std::size_t steps_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

double grad_norm(const std::vector<Parameter>& params);

// Rescales all gradients so their global L2 norm is at most `max_norm`.
// Returns the norm before clipping.
double clip_grad_norm(std::vector<Parameter>& params, double max_norm);

}  // namespace mwp
