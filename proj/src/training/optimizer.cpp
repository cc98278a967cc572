#include "mwp/training/optimizer.hpp"

#include <cmath>

namespace mwp {

void Adam::step(std::vector<Parameter>& params) {
  if (m_.empty()) {
    for (const Parameter& p : params) {
      m_.push_back(Tensor(p.value.shape()));
      v_.push_back(Tensor(p.value.shape()));
    }
  }
  if (m_.size() != params.size()) throw ContractError("Adam: parameter list changed between steps");
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(options_.beta1, t);
  const double c2 = 1.0 - std::pow(options_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i].value.data();
    auto g = params[i].grad.data();
    auto m = m_[i].data();
    auto v = v_[i].data();
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = options_.beta1 * m[k] + (1.0 - options_.beta1) * g[k];
      v[k] = options_.beta2 * v[k] + (1.0 - options_.beta2) * g[k] * g[k];
      w[k] -= options_.lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + options_.eps);
    }
  }
}

double grad_norm(const std::vector<Parameter>& params) {
  double sq = 0.0;
  for (const Parameter& p : params) {
    for (double g : p.grad.data()) sq += g * g;
  }
  return std::sqrt(sq);
}

double clip_grad_norm(std::vector<Parameter>& params, double max_norm) {
  const double norm = grad_norm(params);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (Parameter& p : params) {
      for (double& g : p.grad.data()) g *= s;
    }
  }
  return norm;
}

}  // namespace mwp
