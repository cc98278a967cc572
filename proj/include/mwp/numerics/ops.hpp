#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "mwp/numerics/graph.hpp"
#include "mwp/numerics/tensor.hpp"

namespace mwp {

inline constexpr double kLayerNormEps = 1e-5;

// ---- value-level kernels (no differentiation) ----

Tensor matmul(const Tensor& a, const Tensor& b);
// a * b^T
Tensor matmul_nt(const Tensor& a, const Tensor& b);
// a^T * b
Tensor matmul_tn(const Tensor& a, const Tensor& b);
Tensor softmax(const Tensor& x, std::size_t axis);
// Row-wise log-softmax of a matrix, computed with max-subtraction.
Tensor log_softmax_rows(const Tensor& x);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = kLayerNormEps);

// ---- differentiable primitives ----

Var matmul(Var a, Var b);
Var matmul_nt(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
// Adds a 1 x n row to every row of an m x n matrix.
Var add_row(Var a, Var row);
Var relu(Var a);
Var sum(Var a);
Var softmax(Var x, std::size_t axis);
// Row-wise softmax restricted to entries where mask != 0; masked entries are
// exactly zero. Every row must keep at least one entry.
Var masked_softmax(Var x, const Tensor& mask);
Var layer_norm(Var x, Var gain, Var bias, double eps = kLayerNormEps);
Var slice_cols(Var a, std::size_t begin, std::size_t count);
Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
// Embedding lookup: row ids[i] of `table` becomes row i of the result.
Var gather_rows(Var table, std::span<const int> ids);
// Inverted dropout; identity when p == 0.
Var dropout(Var a, double p, std::mt19937_64& rng);
// Summed token negative log-likelihood over positions whose target differs
// from ignore_index.
Var cross_entropy(Var logits, std::span<const int> targets, int ignore_index);

inline Var linear(Var x, Var weight, Var bias) { return add_row(matmul(x, weight), bias); }

}  // namespace mwp
