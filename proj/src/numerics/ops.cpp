#include "mwp/numerics/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace mwp {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

ConstMap view(const Tensor& t) {
  return ConstMap(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}

MutMap view(Tensor& t) {
  return MutMap(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                static_cast<Eigen::Index>(t.cols()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
}

[[noreturn]] void mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape_string(a.shape()) +
                       " and " + shape_string(b.shape()));
}

Tensor zeros_like(const Tensor& t) { return Tensor(t.shape()); }

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) mismatch("matmul", a, b);
  Tensor out = Tensor::matrix(a.rows(), b.cols());
  view(out).noalias() = view(a) * view(b);
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) mismatch("matmul_nt", a, b);
  Tensor out = Tensor::matrix(a.rows(), b.rows());
  view(out).noalias() = view(a) * view(b).transpose();
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) mismatch("matmul_tn", a, b);
  Tensor out = Tensor::matrix(a.cols(), b.cols());
  view(out).noalias() = view(a).transpose() * view(b);
  return out;
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  const std::size_t rank = x.rank();
  if (axis >= rank) {
    throw DimensionError("softmax: axis " + std::to_string(axis) + " invalid for " +
                         shape_string(x.shape()));
  }
  Tensor out = zeros_like(x);
  const bool along_rows = (rank == 1) || (axis == rank - 1);
  if (!along_rows && !(rank == 2 && axis == 0)) {
    throw DimensionError("softmax: only the last axis is supported beyond rank 2");
  }
  const std::size_t outer = along_rows ? x.rows() : x.cols();
  const std::size_t inner = along_rows ? x.cols() : x.rows();
  const std::size_t stride = along_rows ? 1 : x.cols();
  for (std::size_t o = 0; o < outer; ++o) {
    const std::size_t base = along_rows ? o * x.cols() : o;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < inner; ++i) mx = std::max(mx, x[base + i * stride]);
    double total = 0.0;
    for (std::size_t i = 0; i < inner; ++i) {
      const double e = std::exp(x[base + i * stride] - mx);
      out[base + i * stride] = e;
      total += e;
    }
    for (std::size_t i = 0; i < inner; ++i) out[base + i * stride] /= total;
  }
  return out;
}

Tensor log_softmax_rows(const Tensor& x) {
  Tensor out = zeros_like(x);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row(r);
    auto dst = out.row(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (double v : in) total += std::exp(v - mx);
    const double log_z = mx + std::log(total);
    for (std::size_t c = 0; c < in.size(); ++c) dst[c] = in[c] - log_z;
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  const std::size_t n = x.cols();
  if (gain.size() != n || bias.size() != n) {
    throw DimensionError("layer_norm: gain/bias must match last dimension " + std::to_string(n));
  }
  Tensor out = zeros_like(x);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row(r);
    auto dst = out.row(r);
    double mean = 0.0;
    for (double v : in) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : in) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    const double inv_std = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < n; ++c) dst[c] = (in[c] - mean) * inv_std * gain[c] + bias[c];
  }
  return out;
}

// ---- differentiable primitives ----

Var matmul(Var a, Var b) {
  Graph& g = *a.graph();
  return g.emit(matmul(a.value(), b.value()), {a, b},
                [ia = a.id(), ib = b.id()](Graph& g, std::size_t self) {
                  const Tensor& dy = g.grad(self);
                  if (g.requires_grad(ia)) g.accumulate(ia, matmul_nt(dy, g.value(ib)));
                  if (g.requires_grad(ib)) g.accumulate(ib, matmul_tn(g.value(ia), dy));
                },
                "matmul");
}

Var matmul_nt(Var a, Var b) {
  Graph& g = *a.graph();
  return g.emit(matmul_nt(a.value(), b.value()), {a, b},
                [ia = a.id(), ib = b.id()](Graph& g, std::size_t self) {
                  const Tensor& dy = g.grad(self);
                  if (g.requires_grad(ia)) g.accumulate(ia, matmul(dy, g.value(ib)));
                  if (g.requires_grad(ib)) g.accumulate(ib, matmul_tn(dy, g.value(ia)));
                },
                "matmul_nt");
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  view(out) += view(b.value());
  Graph& g = *a.graph();
  return g.emit(std::move(out), {a, b},
                [ia = a.id(), ib = b.id()](Graph& g, std::size_t self) {
                  g.accumulate(ia, g.grad(self));
                  g.accumulate(ib, g.grad(self));
                },
                "add");
}

Var sub(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  view(out) -= view(b.value());
  Graph& g = *a.graph();
  return g.emit(std::move(out), {a, b},
                [ia = a.id(), ib = b.id()](Graph& g, std::size_t self) {
                  g.accumulate(ia, g.grad(self));
                  if (g.requires_grad(ib)) {
                    Tensor neg = g.grad(self);
                    for (double& v : neg.data()) v = -v;
                    g.accumulate(ib, neg);
                  }
                },
                "sub");
}

Var mul(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  view(out).array() *= view(b.value()).array();
  Graph& g = *a.graph();
  return g.emit(std::move(out), {a, b},
                [ia = a.id(), ib = b.id()](Graph& g, std::size_t self) {
                  const Tensor& dy = g.grad(self);
                  if (g.requires_grad(ia)) {
                    Tensor d = dy;
                    view(d).array() *= view(g.value(ib)).array();
                    g.accumulate(ia, d);
                  }
                  if (g.requires_grad(ib)) {
                    Tensor d = dy;
                    view(d).array() *= view(g.value(ia)).array();
                    g.accumulate(ib, d);
                  }
                },
                "mul");
}

Var scale(Var a, double s) {
  Tensor out = a.value();
  for (double& v : out.data()) v *= s;
  Graph& g = *a.graph();
  return g.emit(std::move(out), {a},
                [ia = a.id(), s](Graph& g, std::size_t self) {
                  Tensor d = g.grad(self);
                  for (double& v : d.data()) v *= s;
                  g.accumulate(ia, d);
                },
                "scale");
}

Var add_row(Var a, Var row) {
  const Tensor& av = a.value();
  const Tensor& rv = row.value();
  if (rv.size() != av.cols()) mismatch("add_row", av, rv);
  Tensor out = av;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto dst = out.row(r);
    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += rv[c];
  }
  Graph& g = *a.graph();
  return g.emit(std::move(out), {a, row},
                [ia = a.id(), ir = row.id()](Graph& g, std::size_t self) {
                  const Tensor& dy = g.grad(self);
                  g.accumulate(ia, dy);
                  if (g.requires_grad(ir)) {
                    Tensor d = zeros_like(g.value(ir));
                    for (std::size_t r = 0; r < dy.rows(); ++r) {
                      auto src = dy.row(r);
                      for (std::size_t c = 0; c < src.size(); ++c) d[c] += src[c];
                    }
                    g.accumulate(ir, d);
                  }
                },
                "add_row");
}

Var relu(Var a) {
  Tensor out = a.value();
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  Graph& g = *a.graph();
  return g.emit(std::move(out), {a},
                [ia = a.id()](Graph& g, std::size_t self) {
                  Tensor d = g.grad(self);
                  const Tensor& x = g.value(ia);
                  for (std::size_t i = 0; i < d.size(); ++i) {
                    if (x[i] <= 0.0) d[i] = 0.0;
                  }
                  g.accumulate(ia, d);
                },
                "relu");
}

Var sum(Var a) {
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  Graph& g = *a.graph();
  return g.emit(Tensor::scalar(total), {a},
                [ia = a.id()](Graph& g, std::size_t self) {
                  g.accumulate(ia, Tensor(g.value(ia).shape(), g.grad(self)[0]));
                },
                "sum");
}

namespace {

// Shared backward for softmax variants: dx = y * (dy - <y, dy>) along the
// normalised direction.
Tensor softmax_backward(const Tensor& y, const Tensor& dy, bool along_rows) {
  Tensor dx = zeros_like(y);
  const std::size_t outer = along_rows ? y.rows() : y.cols();
  const std::size_t inner = along_rows ? y.cols() : y.rows();
  const std::size_t stride = along_rows ? 1 : y.cols();
  for (std::size_t o = 0; o < outer; ++o) {
    const std::size_t base = along_rows ? o * y.cols() : o;
    double dot = 0.0;
    for (std::size_t i = 0; i < inner; ++i) dot += y[base + i * stride] * dy[base + i * stride];
    for (std::size_t i = 0; i < inner; ++i) {
      const std::size_t k = base + i * stride;
      dx[k] = y[k] * (dy[k] - dot);
    }
  }
  return dx;
}

}  // namespace

Var softmax(Var x, std::size_t axis) {
  const std::size_t rank = x.value().rank();
  Tensor out = softmax(x.value(), axis);
  const bool along_rows = (rank == 1) || (axis == rank - 1);
  Graph& g = *x.graph();
  return g.emit(std::move(out), {x},
                [ix = x.id(), along_rows](Graph& g, std::size_t self) {
                  g.accumulate(ix, softmax_backward(g.value(self), g.grad(self), along_rows));
                },
                "softmax");
}

Var masked_softmax(Var x, const Tensor& mask) {
  const Tensor& xv = x.value();
  require_same_shape(xv, mask, "masked_softmax");
  Tensor out = zeros_like(xv);
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    auto in = xv.row(r);
    auto keep = mask.row(r);
    auto dst = out.row(r);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < in.size(); ++c) {
      if (keep[c] != 0.0) mx = std::max(mx, in[c]);
    }
    if (mx == -std::numeric_limits<double>::infinity()) {
      throw ContractError("masked_softmax: row " + std::to_string(r) + " has no visible entry");
    }
    double total = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      if (keep[c] != 0.0) {
        dst[c] = std::exp(in[c] - mx);
        total += dst[c];
      }
    }
    for (double& v : dst) v /= total;
  }
  Graph& g = *x.graph();
  return g.emit(std::move(out), {x},
                [ix = x.id()](Graph& g, std::size_t self) {
                  g.accumulate(ix, softmax_backward(g.value(self), g.grad(self), true));
                },
                "masked_softmax");
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  Tensor out = layer_norm(x.value(), gain.value(), bias.value(), eps);
  Graph& g = *x.graph();
  return g.emit(
      std::move(out), {x, gain, bias},
      [ix = x.id(), ig = gain.id(), ib = bias.id(), eps](Graph& g, std::size_t self) {
        const Tensor& xv = g.value(ix);
        const Tensor& gv = g.value(ig);
        const Tensor& dy = g.grad(self);
        const std::size_t n = xv.cols();
        Tensor dx = zeros_like(xv);
        Tensor dgain = zeros_like(gv);
        Tensor dbias = zeros_like(gv);
        std::vector<double> xhat(n), dxhat(n);
        for (std::size_t r = 0; r < xv.rows(); ++r) {
          auto in = xv.row(r);
          auto d_out = dy.row(r);
          double mean = 0.0;
          for (double v : in) mean += v;
          mean /= static_cast<double>(n);
          double var = 0.0;
          for (double v : in) var += (v - mean) * (v - mean);
          var /= static_cast<double>(n);
          const double inv_std = 1.0 / std::sqrt(var + eps);
          double mean_dxhat = 0.0;
          double mean_dxhat_xhat = 0.0;
          for (std::size_t c = 0; c < n; ++c) {
            xhat[c] = (in[c] - mean) * inv_std;
            dxhat[c] = d_out[c] * gv[c];
            dgain[c] += d_out[c] * xhat[c];
            dbias[c] += d_out[c];
            mean_dxhat += dxhat[c];
            mean_dxhat_xhat += dxhat[c] * xhat[c];
          }
          mean_dxhat /= static_cast<double>(n);
          mean_dxhat_xhat /= static_cast<double>(n);
          auto d_in = dx.row(r);
          for (std::size_t c = 0; c < n; ++c) {
            d_in[c] = inv_std * (dxhat[c] - mean_dxhat - xhat[c] * mean_dxhat_xhat);
          }
        }
        g.accumulate(ix, dx);
        g.accumulate(ig, dgain);
        g.accumulate(ib, dbias);
      },
      "layer_norm");
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  const Tensor& av = a.value();
  if (count == 0 || begin + count > av.cols()) {
    throw DimensionError("slice_cols: range [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") outside " + shape_string(av.shape()));
  }
  Tensor out = Tensor::matrix(av.rows(), count);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    auto src = av.row(r);
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(begin), count, out.row(r).begin());
  }
  Graph& g = *a.graph();
  return g.emit(std::move(out), {a},
                [ia = a.id(), begin, count](Graph& g, std::size_t self) {
                  Tensor d = zeros_like(g.value(ia));
                  const Tensor& dy = g.grad(self);
                  for (std::size_t r = 0; r < dy.rows(); ++r) {
                    auto src = dy.row(r);
                    std::copy(src.begin(), src.end(),
                              d.row(r).begin() + static_cast<std::ptrdiff_t>(begin));
                  }
                  g.accumulate(ia, d);
                  (void)count;
                },
                "slice_cols");
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) mismatch("concat_cols", parts.front().value(), p.value());
    cols += p.cols();
  }
  Tensor out = Tensor::matrix(rows, cols);
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const Var& p : parts) {
    offsets.push_back(off);
    for (std::size_t r = 0; r < rows; ++r) {
      auto src = p.value().row(r);
      std::copy(src.begin(), src.end(), out.row(r).begin() + static_cast<std::ptrdiff_t>(off));
    }
    off += p.cols();
  }
  std::vector<std::size_t> ids;
  for (const Var& p : parts) ids.push_back(p.id());
  Graph& g = *parts.front().graph();
  return g.emit(std::move(out), parts,
                [ids, offsets](Graph& g, std::size_t self) {
                  const Tensor& dy = g.grad(self);
                  for (std::size_t k = 0; k < ids.size(); ++k) {
                    if (!g.requires_grad(ids[k])) continue;
                    Tensor d = zeros_like(g.value(ids[k]));
                    for (std::size_t r = 0; r < d.rows(); ++r) {
                      auto src = dy.row(r).subspan(offsets[k], d.cols());
                      std::copy(src.begin(), src.end(), d.row(r).begin());
                    }
                    g.accumulate(ids[k], d);
                  }
                },
                "concat_cols");
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const std::size_t cols = parts.front().cols();
  std::vector<double> data;
  std::vector<std::size_t> ids;
  std::size_t rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != cols) mismatch("concat_rows", parts.front().value(), p.value());
    auto src = p.value().data();
    data.insert(data.end(), src.begin(), src.end());
    rows += p.rows();
    ids.push_back(p.id());
  }
  Graph& g = *parts.front().graph();
  return g.emit(Tensor({rows, cols}, std::move(data)), parts,
                [ids](Graph& g, std::size_t self) {
                  const Tensor& dy = g.grad(self);
                  std::size_t off = 0;
                  for (std::size_t id : ids) {
                    const Tensor& v = g.value(id);
                    if (g.requires_grad(id)) {
                      auto src = dy.data().subspan(off, v.size());
                      g.accumulate(id, Tensor(v.shape(), std::vector<double>(src.begin(), src.end())));
                    }
                    off += v.size();
                  }
                },
                "concat_rows");
}

Var gather_rows(Var table, std::span<const int> ids) {
  const Tensor& tv = table.value();
  if (ids.empty()) throw DimensionError("gather_rows: empty id list");
  Tensor out = Tensor::matrix(ids.size(), tv.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= tv.rows()) {
      throw std::out_of_range("gather_rows: id " + std::to_string(ids[i]) + " outside table of " +
                              std::to_string(tv.rows()) + " rows");
    }
    auto src = tv.row(static_cast<std::size_t>(ids[i]));
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  Graph& g = *table.graph();
  std::vector<int> idx(ids.begin(), ids.end());
  return g.emit(std::move(out), {table},
                [it = table.id(), idx = std::move(idx)](Graph& g, std::size_t self) {
                  Tensor& d = g.grad_buffer(it);
                  const Tensor& dy = g.grad(self);
                  for (std::size_t i = 0; i < idx.size(); ++i) {
                    auto src = dy.row(i);
                    auto dst = d.row(static_cast<std::size_t>(idx[i]));
                    for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
                  }
                },
                "gather_rows");
}

Var dropout(Var a, double p, std::mt19937_64& rng) {
  if (p <= 0.0) return a;
  if (p >= 1.0) throw ContractError("dropout: rate must be below 1");
  std::bernoulli_distribution keep(1.0 - p);
  const double s = 1.0 / (1.0 - p);
  Tensor mask(a.value().shape());
  for (double& m : mask.data()) m = keep(rng) ? s : 0.0;
  Tensor out = a.value();
  view(out).array() *= view(mask).array();
  Graph& g = *a.graph();
  return g.emit(std::move(out), {a},
                [ia = a.id(), mask = std::move(mask)](Graph& g, std::size_t self) {
                  Tensor d = g.grad(self);
                  view(d).array() *= view(mask).array();
                  g.accumulate(ia, d);
                },
                "dropout");
}

Var cross_entropy(Var logits, std::span<const int> targets, int ignore_index) {
  const Tensor& lv = logits.value();
  if (targets.size() != lv.rows()) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                         std::to_string(lv.rows()) + " rows");
  }
  const int vocab = static_cast<int>(lv.cols());
  for (int t : targets) {
    if (t != ignore_index && (t < 0 || t >= vocab)) {
      throw std::out_of_range("cross_entropy: target " + std::to_string(t) + " outside [0, " +
                              std::to_string(vocab) + ")");
    }
  }
  Tensor logp = log_softmax_rows(lv);
  double total = 0.0;
  for (std::size_t r = 0; r < targets.size(); ++r) {
    if (targets[r] != ignore_index) total -= logp.at(r, static_cast<std::size_t>(targets[r]));
  }
  std::vector<int> tgt(targets.begin(), targets.end());
  Graph& g = *logits.graph();
  return g.emit(Tensor::scalar(total), {logits},
                [il = logits.id(), tgt = std::move(tgt), ignore_index,
                 logp = std::move(logp)](Graph& g, std::size_t self) {
                  const double up = g.grad(self)[0];
                  Tensor d = zeros_like(logp);
                  for (std::size_t r = 0; r < tgt.size(); ++r) {
                    if (tgt[r] == ignore_index) continue;
                    auto lp = logp.row(r);
                    auto dst = d.row(r);
                    for (std::size_t c = 0; c < lp.size(); ++c) dst[c] = up * std::exp(lp[c]);
                    dst[static_cast<std::size_t>(tgt[r])] -= up;
                  }
                  g.accumulate(il, d);
                },
                "cross_entropy");
}

}  // namespace mwp
