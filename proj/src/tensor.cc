// src/tensor.cc

// Copyright 2026   The tcblstm Authors

// See ../../COPYING for clarification regarding multiple authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "tcblstm/tensor.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Core>

namespace tcblstm {

namespace {

template <typename Real>
using RowMajor =
    Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Real>
Eigen::Map<const RowMajor<Real>> View(const BasicTensor<Real> &t) {
  return {t.data().data(), static_cast<Eigen::Index>(t.rows()),
          static_cast<Eigen::Index>(t.cols())};
}

template <typename Real>
Eigen::Map<RowMajor<Real>> View(BasicTensor<Real> *t) {
  return {t->data().data(), static_cast<Eigen::Index>(t->rows()),
          static_cast<Eigen::Index>(t->cols())};
}

std::string Shape(std::size_t r, std::size_t c) {
  std::ostringstream os;
  os << "(" << r << "x" << c << ")";
  return os.str();
}

template <typename Real, typename Fn>
BasicTensor<Real> Map(const BasicTensor<Real> &x, Fn fn) {
  BasicTensor<Real> y(x.rows(), x.cols());
  auto in = x.data();
  auto out = y.data();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = fn(in[i]);
  return y;
}

}  // namespace

void CheckSameShape(std::size_t ar, std::size_t ac, std::size_t br,
                    std::size_t bc, const char *what) {
  if (ar != br || ac != bc)
    throw ShapeError(std::string(what) + ": shape mismatch " + Shape(ar, ac) +
                     " vs " + Shape(br, bc));
}

template <typename Real>
BasicTensor<Real>::BasicTensor(std::size_t rows, std::size_t cols,
                               std::vector<Real> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_)
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + Shape(rows_, cols_));
}

template <typename Real>
BasicTensor<Real>::BasicTensor(
    std::initializer_list<std::initializer_list<Real>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  data_.reserve(rows_ * cols_);
  for (const auto &r : rows) {
    if (r.size() != cols_) throw ShapeError("ragged tensor initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

template <typename Real>
BasicTensor<Real> BasicTensor<Real>::Identity(std::size_t n) {
  BasicTensor<Real> t(n, n);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = Real(1);
  return t;
}

template <typename Real>
void BasicTensor<Real>::SetZero() {
  std::fill(data_.begin(), data_.end(), Real(0));
}

template <typename Real>
std::string BasicTensor<Real>::ShapeString() const {
  return Shape(rows_, cols_);
}

template <typename Real>
BasicTensor<Real> matmul(const BasicTensor<Real> &a, const BasicTensor<Real> &b) {
  if (a.cols() != b.rows())
    throw ShapeError("matmul: cannot multiply " + a.ShapeString() + " by " +
                     b.ShapeString());
  BasicTensor<Real> out(a.rows(), b.cols());
  if (a.rows() && b.cols() && a.cols()) View(&out).noalias() = View(a) * View(b);
  return out;
}

template <typename Real>
void AddMatmul(const BasicTensor<Real> &a, const BasicTensor<Real> &b,
               BasicTensor<Real> *out) {
  if (a.cols() != b.rows() || out->rows() != a.rows() || out->cols() != b.cols())
    throw ShapeError("matmul-accumulate: " + a.ShapeString() + " * " +
                     b.ShapeString() + " into " + out->ShapeString());
  if (a.cols()) View(out).noalias() += View(a) * View(b);
}

template <typename Real>
void AddMatmulTransA(const BasicTensor<Real> &a, const BasicTensor<Real> &b,
                     BasicTensor<Real> *out) {
  if (a.rows() != b.rows() || out->rows() != a.cols() || out->cols() != b.cols())
    throw ShapeError("matmul-accumulate: " + a.ShapeString() + "^T * " +
                     b.ShapeString() + " into " + out->ShapeString());
  if (a.rows()) View(out).noalias() += View(a).transpose() * View(b);
}

template <typename Real>
void AddMatmulTransB(const BasicTensor<Real> &a, const BasicTensor<Real> &b,
                     BasicTensor<Real> *out) {
  if (a.cols() != b.cols() || out->rows() != a.rows() || out->cols() != b.rows())
    throw ShapeError("matmul-accumulate: " + a.ShapeString() + " * " +
                     b.ShapeString() + "^T into " + out->ShapeString());
  if (a.cols()) View(out).noalias() += View(a) * View(b).transpose();
}

template <typename Real>
BasicTensor<Real> sigmoid(const BasicTensor<Real> &x) {
  BasicTensor<Real> y(x.rows(), x.cols());
  View(&y).array() = View(x).array().logistic();
  return y;
}

template <typename Real>
BasicTensor<Real> tanh_op(const BasicTensor<Real> &x) {
  BasicTensor<Real> y(x.rows(), x.cols());
  View(&y).array() = View(x).array().tanh();
  return y;
}

template <typename Real>
BasicTensor<Real> relu(const BasicTensor<Real> &x) {
  return Map(x, [](Real v) { return v > 0 ? v : Real(0); });
}

template <typename Real>
BasicTensor<Real> clip(const BasicTensor<Real> &x, Real limit) {
  if (!(limit > 0))
    throw ParameterError("clip: limit must be positive, got " +
                         std::to_string(limit));
  return Map(x, [limit](Real v) { return std::min(limit, std::max(-limit, v)); });
}

template <typename Real>
BasicTensor<Real> softmax_rows(const BasicTensor<Real> &logits) {
  BasicTensor<Real> out(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto in = logits.row(r);
    auto y = out.row(r);
    if (in.empty()) continue;
    Real peak = *std::max_element(in.begin(), in.end());
    Real total = 0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      y[c] = std::exp(in[c] - peak);
      total += y[c];
    }
    for (auto &v : y) v /= total;
  }
  return out;
}

template <typename Real>
CrossEntropyResult<Real> cross_entropy(const BasicTensor<Real> &probs,
                                       std::span<const std::int32_t> targets) {
  if (targets.size() != probs.rows())
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) +
                     " targets for " + std::to_string(probs.rows()) + " rows");
  constexpr Real kFloor = Real(1e-12);
  CrossEntropyResult<Real> result;
  result.grad_logits = probs;
  const std::size_t n = probs.rows();
  double total = 0;
  for (std::size_t r = 0; r < n; ++r) {
    const std::int32_t t = targets[r];
    if (t < 0 || static_cast<std::size_t>(t) >= probs.cols())
      throw LabelError("cross_entropy: target " + std::to_string(t) +
                       " out of range for " + std::to_string(probs.cols()) +
                       " classes in row " + std::to_string(r));
    total -= std::log(std::max(probs(r, t), kFloor));
    result.grad_logits(r, t) -= Real(1);
  }
  if (n > 0) {
    const Real inv = Real(1) / static_cast<Real>(n);
    for (auto &g : result.grad_logits.data()) g *= inv;
    result.loss = static_cast<Real>(total / static_cast<double>(n));
  }
  return result;
}

template <typename Real>
void AddInPlace(const BasicTensor<Real> &x, BasicTensor<Real> *acc) {
  CheckSameShape(x.rows(), x.cols(), acc->rows(), acc->cols(), "add");
  auto a = acc->data();
  auto b = x.data();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

template <typename Real>
void AddRowBroadcast(const BasicTensor<Real> &bias, BasicTensor<Real> *x) {
  CheckSameShape(bias.rows(), bias.cols(), 1, x->cols(), "bias broadcast");
  auto b = bias.data();
  for (std::size_t r = 0; r < x->rows(); ++r) {
    auto row = x->row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += b[c];
  }
}

template <typename Real>
void AddColumnSums(const BasicTensor<Real> &x, BasicTensor<Real> *acc) {
  CheckSameShape(acc->rows(), acc->cols(), 1, x.cols(), "column sums");
  auto a = acc->data();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) a[c] += row[c];
  }
}

template <typename Real>
BasicTensor<Real> Hadamard(const BasicTensor<Real> &a, const BasicTensor<Real> &b) {
  CheckSameShape(a.rows(), a.cols(), b.rows(), b.cols(), "hadamard");
  BasicTensor<Real> out(a.rows(), a.cols());
  auto x = a.data();
  auto y = b.data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] * y[i];
  return out;
}

template <typename Real>
BasicTensor<Real> ConcatCols(const BasicTensor<Real> &a, const BasicTensor<Real> &b) {
  if (a.rows() != b.rows())
    throw ShapeError("concat: row mismatch " + a.ShapeString() + " vs " +
                     b.ShapeString());
  BasicTensor<Real> out(a.rows(), a.cols() + b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto dst = out.row(r);
    std::copy(a.row(r).begin(), a.row(r).end(), dst.begin());
    std::copy(b.row(r).begin(), b.row(r).end(), dst.begin() + a.cols());
  }
  return out;
}

template <typename Real>
BasicTensor<Real> SliceCols(const BasicTensor<Real> &x, std::size_t begin,
                            std::size_t count) {
  if (begin + count > x.cols())
    throw ShapeError("column slice [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") out of range for " +
                     x.ShapeString());
  BasicTensor<Real> out(x.rows(), count);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto src = x.row(r).subspan(begin, count);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

template <typename Real>
bool AllFinite(const BasicTensor<Real> &x) {
  for (Real v : x.data())
    if (!std::isfinite(v)) return false;
  return true;
}

#define TCBLSTM_INSTANTIATE(Real)                                              \
  template class BasicTensor<Real>;                                            \
  template BasicTensor<Real> matmul(const BasicTensor<Real> &,                 \
                                    const BasicTensor<Real> &);                \
  template void AddMatmul(const BasicTensor<Real> &, const BasicTensor<Real> &, \
                          BasicTensor<Real> *);                                \
  template void AddMatmulTransA(const BasicTensor<Real> &,                     \
                                const BasicTensor<Real> &, BasicTensor<Real> *); \
  template void AddMatmulTransB(const BasicTensor<Real> &,                     \
                                const BasicTensor<Real> &, BasicTensor<Real> *); \
  template BasicTensor<Real> sigmoid(const BasicTensor<Real> &);               \
  template BasicTensor<Real> tanh_op(const BasicTensor<Real> &);               \
  template BasicTensor<Real> relu(const BasicTensor<Real> &);                  \
  template BasicTensor<Real> clip(const BasicTensor<Real> &, Real);            \
  template BasicTensor<Real> softmax_rows(const BasicTensor<Real> &);          \
  template CrossEntropyResult<Real> cross_entropy(                             \
      const BasicTensor<Real> &, std::span<const std::int32_t>);               \
  template void AddInPlace(const BasicTensor<Real> &, BasicTensor<Real> *);    \
  template void AddRowBroadcast(const BasicTensor<Real> &, BasicTensor<Real> *); \
  template void AddColumnSums(const BasicTensor<Real> &, BasicTensor<Real> *); \
  template BasicTensor<Real> Hadamard(const BasicTensor<Real> &,               \
                                      const BasicTensor<Real> &);              \
  template BasicTensor<Real> ConcatCols(const BasicTensor<Real> &,             \
                                        const BasicTensor<Real> &);            \
  template BasicTensor<Real> SliceCols(const BasicTensor<Real> &, std::size_t, \
                                       std::size_t);                           \
  template bool AllFinite(const BasicTensor<Real> &);

TCBLSTM_INSTANTIATE(float)
TCBLSTM_INSTANTIATE(double)

#undef TCBLSTM_INSTANTIATE

}  // namespace tcblstm
