#include "mwp/numerics/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>

namespace mwp {

namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void check_shape(const std::vector<std::size_t>& shape) {
  if (shape.empty()) throw DimensionError("tensor shape must have at least one dimension");
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_string(shape));
  }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(product(shape_), fill);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (product(shape_) != data_.size()) {
    throw DimensionError("shape " + shape_string(shape_) + " does not match " +
                         std::to_string(data_.size()) + " values");
  }
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, double fill) {
  return Tensor({rows, cols}, fill);
}

Tensor Tensor::scalar(double v) { return Tensor({1, 1}, std::vector<double>{v}); }

Tensor Tensor::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty() || rows.front().empty()) throw DimensionError("from_rows: empty input");
  std::vector<double> data;
  for (const auto& r : rows) {
    if (r.size() != rows.front().size()) throw DimensionError("from_rows: ragged rows");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Tensor({rows.size(), rows.front().size()}, std::move(data));
}

std::size_t Tensor::rows() const {
  if (shape_.size() <= 1) return shape_.empty() ? 0 : 1;
  return data_.size() / shape_.back();
}

std::size_t Tensor::cols() const { return shape_.empty() ? 0 : shape_.back(); }

double Tensor::item() const {
  if (data_.size() != 1) {
    throw DimensionError("item() requires a single-element tensor, got " + shape_string(shape_));
  }
  return data_[0];
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

void require_finite(const Tensor& t, const char* where) {
  if (!t.all_finite()) throw NumericError(std::string("non-finite value produced by ") + where);
}

}  // namespace mwp
