// include/tcblstm/verify.h

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

#ifndef TCBLSTM_VERIFY_H_
#define TCBLSTM_VERIFY_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tcblstm/model.h"

namespace tcblstm {

/// Central differences (f(w+e) - f(w-e)) / 2e for every coordinate of `w`.
/// OracleError naming the coordinate if a perturbed loss is not finite.
std::vector<double> finite_diff_grad(
    const std::function<double(std::span<const double>)> &loss_fn,
    std::vector<double> w, double epsilon);

/// max_k |a_k - b_k| / max(|a_k|, |b_k|, 1e-8); ShapeError on length mismatch.
double relative_error(std::span<const double> a, std::span<const double> b);
double relative_error(const Tensor64 &a, const Tensor64 &b);

struct ScalarLstmWeights {
  double w_xi = 0, w_hi = 0, w_xf = 0, w_hf = 0;
  double w_xc = 0, w_hc = 0, w_xo = 0, w_ho = 0;
};

struct ScalarLstmStep {
  double i = 0, f = 0, c = 0, o = 0, h = 0;
};

/// Straight-line evaluation of the cell equations on scalars from a zero
/// state, with the cell clipped to [-clip, clip].
std::vector<ScalarLstmStep> scalar_lstm_oracle(const ScalarLstmWeights &w,
                                               const std::vector<double> &inputs,
                                               double clip = 3.0);

struct CheckResult {
  std::string name;
  double max_rel_error = 0;
  double tolerance = 0;
  bool passed = false;
  std::string detail;  // worst block, or what disagreed
};

struct VerifyOptions {
  double epsilon = 1e-4;
  double tolerance = 1e-4;
  std::uint64_t seed = 2024;
  std::size_t oracle_draws = 100;
  // Fault injection: called on each analytic gradient block before it is
  // compared, so a test can corrupt one block and watch the report name it.
  std::function<void(const std::string &check, const std::string &block, Tensor64 *grad)>
      corrupt;
};

/// Gradient checks for the activations, softmax cross-entropy, affine
/// layers, lstm_step, lstm_forward, blstm_context and every model variant.
std::vector<CheckResult> RunGradientChecks(const VerifyOptions &options = {});

/// lstm_step on 1x1 tensors against scalar_lstm_oracle over random draws,
/// half of them scaled to drive the cell into the clip.
CheckResult RunScalarOracleCheck(const VerifyOptions &options = {});

/// Both of the above.
std::vector<CheckResult> RunVerifySuite(const VerifyOptions &options = {});

/// The tiny configuration used to check a variant.
ModelConfig TinyConfig(Variant variant);

}  // namespace tcblstm

#endif  // TCBLSTM_VERIFY_H_
