#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "support/gradcheck.hpp"

namespace mwp::testing {

struct NamedCheck {
  std::string name;
  GradCheck result;
};

// Finite-difference check of every differentiable primitive on random inputs.
inline std::vector<NamedCheck> primitive_gradient_checks(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto R = [&](std::size_t r, std::size_t c) { return random_tensor(rng, r, c); };
  std::vector<NamedCheck> out;
  auto run = [&](std::string name, std::vector<Tensor> inputs, const ScalarFn& f) {
    out.push_back({std::move(name), check_gradients(inputs, f)});
  };

  run("matmul", {R(3, 4), R(4, 2)},
      [](Graph&, const std::vector<Var>& v) { return project(matmul(v[0], v[1])); });
  run("matmul_nt", {R(3, 4), R(5, 4)},
      [](Graph&, const std::vector<Var>& v) { return project(matmul_nt(v[0], v[1])); });
  run("add/sub/mul/scale", {R(2, 3), R(2, 3)}, [](Graph&, const std::vector<Var>& v) {
    return project(scale(mul(add(v[0], v[1]), sub(v[0], v[1])), -1.7));
  });
  run("add_row", {R(4, 3), R(1, 3)},
      [](Graph&, const std::vector<Var>& v) { return project(add_row(v[0], v[1])); });
  Tensor x = R(3, 5);
  for (double& e : x.data()) e += e > 0 ? 0.05 : -0.05;  // keep clear of the kink
  run("relu", {x}, [](Graph&, const std::vector<Var>& v) { return project(relu(v[0])); });
  run("sum", {R(3, 3)}, [](Graph&, const std::vector<Var>& v) { return sum(mul(v[0], v[0])); });
  run("softmax rows", {R(3, 4)},
      [](Graph&, const std::vector<Var>& v) { return project(softmax(v[0], 1)); });
  run("softmax columns", {R(3, 4)},
      [](Graph&, const std::vector<Var>& v) { return project(softmax(v[0], 0)); });
  const Tensor mask = Tensor::from_rows({{1, 0, 1, 1}, {1, 1, 0, 0}, {0, 0, 0, 1}});
  run("masked_softmax", {R(3, 4)},
      [mask](Graph&, const std::vector<Var>& v) { return project(masked_softmax(v[0], mask)); });
  run("layer_norm", {R(3, 6), R(1, 6), R(1, 6)},
      [](Graph&, const std::vector<Var>& v) { return project(layer_norm(v[0], v[1], v[2])); });
  run("slice/concat", {R(3, 5), R(3, 2), R(2, 5)}, [](Graph&, const std::vector<Var>& v) {
    Var cols = concat_cols({slice_cols(v[0], 1, 3), v[1]});
    return add(project(cols, 1), project(concat_rows({v[0], v[2]}), 2));
  });
  const std::vector<int> ids{2, 0, 2, 3};
  run("gather_rows", {R(4, 3)},
      [ids](Graph&, const std::vector<Var>& v) { return project(gather_rows(v[0], ids)); });
  run("dropout", {R(4, 4)}, [](Graph&, const std::vector<Var>& v) {
    std::mt19937_64 mask_rng(5);  // same mask on every evaluation
    return project(dropout(v[0], 0.3, mask_rng));
  });
  const std::vector<int> targets{1, -1, 3, 0};
  run("cross_entropy", {R(4, 5)}, [targets](Graph&, const std::vector<Var>& v) {
    return cross_entropy(v[0], targets, -1);
  });
  run("linear", {R(3, 4), R(4, 2), R(1, 2)},
      [](Graph&, const std::vector<Var>& v) { return project(linear(v[0], v[1], v[2])); });
  return out;
}

}  // namespace mwp::testing
