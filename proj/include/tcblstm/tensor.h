// include/tcblstm/tensor.h

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

#ifndef TCBLSTM_TENSOR_H_
#define TCBLSTM_TENSOR_H_

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "tcblstm/error.h"

namespace tcblstm {

/// Dense row-major 2-D array. Training runs on BasicTensor<float>; the
/// gradient-check path instantiates the same kernels on double.
template <typename Real>
class BasicTensor {
 public:
  using value_type = Real;

  BasicTensor() = default;
  BasicTensor(std::size_t rows, std::size_t cols, Real fill = Real(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  BasicTensor(std::size_t rows, std::size_t cols, std::vector<Real> data);
  BasicTensor(std::initializer_list<std::initializer_list<Real>> rows);

  static BasicTensor Identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  Real &operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  Real operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<Real> data() { return data_; }
  std::span<const Real> data() const { return data_; }
  std::span<Real> row(std::size_t r) {
    return std::span<Real>(data_).subspan(r * cols_, cols_);
  }
  std::span<const Real> row(std::size_t r) const {
    return std::span<const Real>(data_).subspan(r * cols_, cols_);
  }

  void SetZero();
  bool SameShape(const BasicTensor &other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  std::string ShapeString() const;

  template <typename Other>
  BasicTensor<Other> Cast() const {
    BasicTensor<Other> out(rows_, cols_);
    for (std::size_t i = 0; i < data_.size(); ++i)
      out.data()[i] = static_cast<Other>(data_[i]);
    return out;
  }

  bool operator==(const BasicTensor &other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Real> data_;
};

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;

// ---- products -------------------------------------------------------------

template <typename Real>
BasicTensor<Real> matmul(const BasicTensor<Real> &a, const BasicTensor<Real> &b);

// out += a^T * b  (a: n x p, b: n x q, out: p x q)
template <typename Real>
void AddMatmulTransA(const BasicTensor<Real> &a, const BasicTensor<Real> &b,
                     BasicTensor<Real> *out);

// out += a * b^T  (a: n x q, b: p x q, out: n x p)
template <typename Real>
void AddMatmulTransB(const BasicTensor<Real> &a, const BasicTensor<Real> &b,
                     BasicTensor<Real> *out);

// out += a * b
template <typename Real>
void AddMatmul(const BasicTensor<Real> &a, const BasicTensor<Real> &b,
               BasicTensor<Real> *out);

// ---- elementwise ----------------------------------------------------------

template <typename Real>
BasicTensor<Real> sigmoid(const BasicTensor<Real> &x);

template <typename Real>
BasicTensor<Real> tanh_op(const BasicTensor<Real> &x);

template <typename Real>
BasicTensor<Real> relu(const BasicTensor<Real> &x);

/// Hard clip to [-limit, limit]. Throws ParameterError unless limit > 0.
template <typename Real>
BasicTensor<Real> clip(const BasicTensor<Real> &x, Real limit);

/// Row-wise softmax with max subtraction.
template <typename Real>
BasicTensor<Real> softmax_rows(const BasicTensor<Real> &logits);

template <typename Real>
struct CrossEntropyResult {
  Real loss = 0;
  BasicTensor<Real> grad_logits;
};

/// Mean negative log-likelihood of `targets` under `probs`, together with the
/// gradient of that loss with respect to the logits that produced `probs`
/// through softmax_rows. Probabilities are floored at 1e-12 before the log.
template <typename Real>
CrossEntropyResult<Real> cross_entropy(const BasicTensor<Real> &probs,
                                       std::span<const std::int32_t> targets);

// ---- small helpers shared by the layers ------------------------------------

template <typename Real>
void AddInPlace(const BasicTensor<Real> &x, BasicTensor<Real> *acc);

template <typename Real>
void AddRowBroadcast(const BasicTensor<Real> &bias, BasicTensor<Real> *x);

// Column sums accumulated into a 1 x cols tensor.
template <typename Real>
void AddColumnSums(const BasicTensor<Real> &x, BasicTensor<Real> *acc);

template <typename Real>
BasicTensor<Real> Hadamard(const BasicTensor<Real> &a, const BasicTensor<Real> &b);

template <typename Real>
BasicTensor<Real> ConcatCols(const BasicTensor<Real> &a, const BasicTensor<Real> &b);

// Columns [begin, begin + count) of x.
template <typename Real>
BasicTensor<Real> SliceCols(const BasicTensor<Real> &x, std::size_t begin,
                            std::size_t count);

template <typename Real>
bool AllFinite(const BasicTensor<Real> &x);

void CheckSameShape(std::size_t ar, std::size_t ac, std::size_t br,
                    std::size_t bc, const char *what);

}  // namespace tcblstm

#endif  // TCBLSTM_TENSOR_H_
