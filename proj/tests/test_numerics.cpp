#include <doctest.h>

#include <cmath>
#include <random>

#include "mwp/numerics/graph.hpp"
#include "mwp/numerics/ops.hpp"
#include "support/gradcheck.hpp"
#include "support/primitive_checks.hpp"

using namespace mwp;
using mwp::testing::check_gradients;
using mwp::testing::project;
using mwp::testing::random_tensor;

namespace {

Tensor naive_matmul(const Tensor& a, const Tensor& b) {
  Tensor out = Tensor::matrix(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a.at(i, k) * b.at(k, j);
      out.at(i, j) = s;
    }
  }
  return out;
}

constexpr double kGradTol = 1e-4;

}  // namespace

TEST_CASE("tensor shape contract") {
  CHECK_THROWS_AS(Tensor({2, 0}), DimensionError);
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
  Tensor t({2, 3}, 1.5);
  CHECK(t.size() == 6);
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  CHECK_THROWS(Tensor::matrix(2, 2).item());
  CHECK(Tensor::scalar(4.0).item() == 4.0);
}

TEST_CASE("matmul examples") {
  const Tensor eye = Tensor::from_rows({{1, 0}, {0, 1}});
  const Tensor m = Tensor::from_rows({{1, 2}, {3, 4}});
  CHECK(matmul(eye, m) == m);
  const Tensor proj = Tensor::from_rows({{1, 0}, {0, 0}});
  CHECK(matmul(proj, Tensor::from_rows({{5, 6}, {7, 8}})) == Tensor::from_rows({{5, 6}, {0, 0}}));

  std::mt19937_64 rng(3);
  const Tensor a = random_tensor(rng, 3, 4), b = random_tensor(rng, 4, 2);
  const Tensor fast = matmul(a, b), slow = naive_matmul(a, b);
  for (std::size_t i = 0; i < fast.size(); ++i) CHECK(std::abs(fast[i] - slow[i]) < 1e-12);

  CHECK_THROWS_AS(matmul(a, a), DimensionError);
}

TEST_CASE("transposed products agree with the plain product") {
  std::mt19937_64 rng(4);
  const Tensor a = random_tensor(rng, 3, 5), b = random_tensor(rng, 4, 5), c = random_tensor(rng, 3, 2);
  Tensor bt = Tensor::matrix(5, 4), at = Tensor::matrix(5, 3);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 5; ++j) bt.at(j, i) = b.at(i, j);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 5; ++j) at.at(j, i) = a.at(i, j);
  const Tensor nt = matmul_nt(a, b), ref_nt = naive_matmul(a, bt);
  const Tensor tn = matmul_tn(a, c), ref_tn = naive_matmul(at, c);
  for (std::size_t i = 0; i < nt.size(); ++i) CHECK(std::abs(nt[i] - ref_nt[i]) < 1e-12);
  for (std::size_t i = 0; i < tn.size(); ++i) CHECK(std::abs(tn[i] - ref_tn[i]) < 1e-12);
}

TEST_CASE("softmax examples") {
  const Tensor u = softmax(Tensor::from_rows({{0, 0, 0}}), 1);
  for (double v : u.data()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  const Tensor two = softmax(Tensor::from_rows({{std::log(2.0), 0.0}}), 1);
  CHECK(two[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(two[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  const Tensor big = softmax(Tensor::from_rows({{1000, 1000}}), 1);
  CHECK(big.all_finite());
  CHECK(big[0] == 0.5);
  CHECK(big[1] == 0.5);
}

TEST_CASE("softmax rows sum to one and ignore constant shifts") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor x = random_tensor(rng, 4, 7, -30.0, 30.0);
    const Tensor p = softmax(x, 1);
    Tensor shifted = x;
    for (std::size_t r = 0; r < 4; ++r) {
      for (double& v : shifted.row(r)) v += 17.0 * static_cast<double>(r) - 25.0;
    }
    const Tensor q = softmax(shifted, 1);
    for (std::size_t r = 0; r < 4; ++r) {
      double s = 0.0;
      for (double v : p.row(r)) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
        s += v;
      }
      CHECK(std::abs(s - 1.0) < 1e-9);
    }
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(p[i] - q[i]) < 1e-9);
  }
  // Column softmax sums down the rows.
  const Tensor c = softmax(random_tensor(rng, 3, 2), 0);
  CHECK(std::abs(c.at(0, 1) + c.at(1, 1) + c.at(2, 1) - 1.0) < 1e-9);
  CHECK_THROWS_AS(softmax(Tensor::matrix(2, 2), 2), DimensionError);
}

TEST_CASE("layer norm examples") {
  const Tensor g = Tensor::matrix(1, 4, 1.0), b = Tensor::matrix(1, 4, 0.0);
  const Tensor flat = layer_norm(Tensor::from_rows({{5, 5, 5, 5}}), g, b);
  for (double v : flat.data()) CHECK(v == 0.0);

  const Tensor pm = layer_norm(Tensor::from_rows({{1, -1}}), Tensor::matrix(1, 2, 1.0),
                               Tensor::matrix(1, 2, 0.0));
  CHECK(pm[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(pm[1] == doctest::Approx(-1.0).epsilon(1e-4));

  std::mt19937_64 rng(6);
  const Tensor x = random_tensor(rng, 1, 64, -3.0, 5.0);
  const Tensor y = layer_norm(x, Tensor::matrix(1, 64, 1.0), Tensor::matrix(1, 64, 0.0));
  double mean = 0.0, var = 0.0;
  for (double v : y.data()) mean += v;
  mean /= 64.0;
  for (double v : y.data()) var += (v - mean) * (v - mean);
  var /= 64.0;
  CHECK(std::abs(mean) < 1e-7);
  CHECK(std::abs(var - 1.0) < 1e-4);

  CHECK_THROWS_AS(layer_norm(x, Tensor::matrix(1, 3, 1.0), Tensor::matrix(1, 3, 0.0)),
                  DimensionError);
}

TEST_CASE("cross entropy examples") {
  Graph g(false);
  const std::vector<int> t0{0};
  CHECK(cross_entropy(g.constant(Tensor::matrix(1, 8, 0.3)), t0, -1).value().item() ==
        doctest::Approx(std::log(8.0)).epsilon(1e-12));

  Tensor peaked = Tensor::matrix(1, 5, 0.0);
  peaked[2] = 1000.0;
  const std::vector<int> t2{2};
  CHECK(cross_entropy(g.constant(peaked), t2, -1).value().item() < 1e-12);

  CHECK(cross_entropy(g.constant(Tensor::from_rows({{1.0, 0.0}})), t0, -1).value().item() ==
        doctest::Approx(std::log(1.0 + std::exp(-1.0))).epsilon(1e-12));

  const std::vector<int> bad{5};
  CHECK_THROWS_AS(cross_entropy(g.constant(Tensor::matrix(1, 5)), bad, -1), std::out_of_range);
}

TEST_CASE("uniform cross entropy counts only non-ignored tokens") {
  Graph g(false);
  const std::vector<int> targets{1, -1, 4, 0, -1, -1};
  const double ce = cross_entropy(g.constant(Tensor::matrix(6, 7, -2.5)), targets, -1).value().item();
  CHECK(std::abs(ce - 3.0 * std::log(7.0)) < 1e-9);
}

TEST_CASE("backward on simple functions") {
  Graph g;
  Var x = g.variable(Tensor::from_rows({{1.0, 2.0}}));
  g.backward(sum(mul(x, x)));
  CHECK(x.grad()[0] == 2.0);
  CHECK(x.grad()[1] == 4.0);

  // softmax followed by cross entropy: gradient is p - onehot.
  Graph h;
  Var logits = h.variable(Tensor::from_rows({{0.5, -1.0, 2.0}}));
  const std::vector<int> target{1};
  h.backward(cross_entropy(logits, target, -1));
  const Tensor p = softmax(logits.value(), 1);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(std::abs(logits.grad()[k] - (p[k] - (k == 1 ? 1.0 : 0.0))) < 1e-12);
  }
}

TEST_CASE("backward contract") {
  Graph g;
  Var x = g.variable(Tensor::matrix(2, 2, 1.0));
  CHECK_THROWS_AS(g.backward(x), ContractError);
  Graph frozen(false);
  Var y = frozen.constant(Tensor::scalar(1.0));
  CHECK_THROWS_AS(frozen.backward(y), ContractError);
}

TEST_CASE("non-finite values are rejected") {
  Graph g;
  Var x = g.variable(Tensor::from_rows({{1e308, 1e308}}));
  CHECK_THROWS_AS(scale(x, 10.0), NumericError);
}

TEST_CASE("graph nodes follow their inputs") {
  Graph g;
  Var a = g.variable(Tensor::matrix(2, 2, 1.0));
  Var b = matmul(a, a);
  Var c = add(b, a);
  CHECK(b.id() > a.id());
  CHECK(c.id() > b.id());
  CHECK(g.size() == 3);
}

TEST_CASE("parameters accumulate gradients across graphs") {
  Parameter p{"w", Tensor::from_rows({{3.0}}), {}};
  p.zero_grad();
  for (int i = 0; i < 2; ++i) {
    Graph g;
    g.backward(sum(mul(g.parameter(p), g.parameter(p))));
  }
  CHECK(p.grad[0] == 12.0);
}

TEST_CASE("finite differences: every primitive") {
  for (const auto& check : mwp::testing::primitive_gradient_checks(11)) {
    INFO(check.name << " worst at " << check.result.worst);
    CHECK(check.result.checked > 0);
    CHECK(check.result.max_error < kGradTol);
  }
}

TEST_CASE("primitive error contracts") {
  Graph g;
  Var x = g.variable(Tensor::matrix(2, 3, 1.0));
  CHECK_THROWS_AS(masked_softmax(x, Tensor::from_rows({{1, 0, 0}, {0, 0, 0}})), ContractError);
  const std::vector<int> ids{3};
  CHECK_THROWS_AS(gather_rows(x, ids), std::out_of_range);
  CHECK_THROWS_AS(slice_cols(x, 2, 2), DimensionError);
  CHECK_THROWS_AS(add(x, g.variable(Tensor::matrix(3, 2))), DimensionError);
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(dropout(x, 1.0, rng), ContractError);
  CHECK(dropout(x, 0.0, rng).value() == x.value());
}
