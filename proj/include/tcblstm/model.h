// include/tcblstm/model.h

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

#ifndef TCBLSTM_MODEL_H_
#define TCBLSTM_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tcblstm/layers.h"

namespace tcblstm {

enum class Variant {
  kDnn,
  kBlstm,
  kDnnBlstm,
  kBlstmDnn,
  kDnnBlstmDnn,
  kTcDnnBlstmDnn,
};

std::string VariantName(Variant v);
Variant ParseVariant(const std::string &name);  // ConfigError if unknown
const std::vector<Variant> &AllVariants();

struct ModelConfig {
  Variant variant = Variant::kTcDnnBlstmDnn;
  std::vector<std::size_t> input_dnn_layers = {64, 64};
  std::size_t cell_dim = 32;
  std::size_t blstm_layers = 1;
  std::vector<std::size_t> output_dnn_layers = {64, 64};
  std::size_t num_classes = 4;
  std::size_t feat_dim = 16;
  TimeConvSpec tc;
  std::uint64_t seed = 1;

  // Initialisation: LSTM matrices ~ U(-lstm_init_range, lstm_init_range),
  // DNN weights ~ N(0, dnn_init_std^2), DNN biases zero.
  double lstm_init_range = 0.01;
  double dnn_init_std = 0.001;
  double cell_clip = 3.0;

  bool has_input_dnn() const;
  bool has_blstm() const;
  bool has_output_dnn() const;
  std::size_t window_width() const { return tc.context_frames * feat_dim; }
  // The time convolution actually applied: the configured one for the TC
  // variant, single frames for the other recurrent variants.
  TimeConvSpec effective_tc() const;

  // Throws ConfigError naming the violated constraint.
  void Validate() const;

  bool operator==(const ModelConfig &) const = default;
};

enum class BlockKind { kLstm, kDnnWeight, kDnnBias };

template <typename Real>
struct NamedBlock {
  std::string name;
  BasicTensor<Real> *tensor;
  BlockKind kind;
};

template <typename Real>
struct ConstNamedBlock {
  std::string name;
  const BasicTensor<Real> *tensor;
  BlockKind kind;
};

/// Every trainable matrix of a configured model. Gradients use the same type.
template <typename Real>
struct ModelParams {
  // One column when tied (or for the plain DNN), one per timestep otherwise;
  // each column is a stack of ReLU layers.
  std::vector<std::vector<AffineLayer<Real>>> input_columns;
  std::vector<LstmParams<Real>> fwd;  // one per BLSTM layer
  std::vector<LstmParams<Real>> bwd;
  std::vector<AffineLayer<Real>> output_dnn;
  AffineLayer<Real> classifier;  // no activation; feeds the softmax

  std::vector<NamedBlock<Real>> Blocks();
  std::vector<ConstNamedBlock<Real>> Blocks() const;

  std::size_t ParameterCount() const;
  std::vector<Real> Flatten() const;
  void Unflatten(std::span<const Real> flat);  // ShapeError on length mismatch
  ModelParams ZerosLike() const;

  template <typename Other>
  ModelParams<Other> Cast() const;

  bool operator==(const ModelParams &) const = default;
};

/// Zero-filled parameters with the shapes the config implies.
template <typename Real>
ModelParams<Real> ShapeParams(const ModelConfig &config);

/// Seeded initialisation; deterministic for a given config.
ModelParams<float> init_params(const ModelConfig &config);

template <typename Real>
struct ModelCache {
  bool valid = false;
  std::size_t batch = 0;
  std::size_t steps = 0;
  std::vector<std::vector<AffineCache<Real>>> input;  // [column][layer]
  std::vector<BlstmCache<Real>> blstm;
  std::vector<AffineCache<Real>> output;
  AffineCache<Real> classifier;
  BasicTensor<Real> posteriors;
};

/// Posteriors (batch x num_classes) for a batch of flattened context windows.
/// With train_mode set, `cache` receives what backward() needs.
template <typename Real>
BasicTensor<Real> forward(const ModelParams<Real> &params,
                          const ModelConfig &config,
                          const BasicTensor<Real> &batch, bool train_mode,
                          ModelCache<Real> *cache);

template <typename Real>
struct BackwardResult {
  Real loss = 0;
  ModelParams<Real> grads;
  BasicTensor<Real> grad_input;
};

/// Mean cross-entropy and exact gradients; consumes a train-mode cache.
template <typename Real>
BackwardResult<Real> backward(const ModelParams<Real> &params,
                              const ModelConfig &config,
                              const ModelCache<Real> &cache,
                              std::span<const std::int32_t> targets);

/// Row-wise argmax of the posteriors, lowest index on ties.
std::vector<std::int32_t> ArgmaxRows(const Tensor &posteriors);

std::vector<std::int32_t> predict(const ModelParams<float> &params,
                                  const ModelConfig &config, const Tensor &batch);

struct EvalMetrics {
  double loss = 0;
  double accuracy = 0;
  std::size_t frames = 0;
};

/// Mean cross-entropy and frame accuracy, computed in fixed-size chunks.
EvalMetrics Evaluate(const ModelParams<float> &params, const ModelConfig &config,
                     const Tensor &windows, std::span<const std::int32_t> targets,
                     std::size_t chunk = 512);

// ---- implementation of the templated conversion ----------------------------

template <typename Real>
template <typename Other>
ModelParams<Other> ModelParams<Real>::Cast() const {
  auto layer = [](const AffineLayer<Real> &l) {
    AffineLayer<Other> o;
    o.weight = l.weight.template Cast<Other>();
    o.bias = l.bias.template Cast<Other>();
    o.activation = l.activation;
    return o;
  };
  auto lstm = [](const LstmParams<Real> &p) {
    LstmParams<Other> o;
    o.w_xi = p.w_xi.template Cast<Other>();
    o.w_hi = p.w_hi.template Cast<Other>();
    o.w_xf = p.w_xf.template Cast<Other>();
    o.w_hf = p.w_hf.template Cast<Other>();
    o.w_xc = p.w_xc.template Cast<Other>();
    o.w_hc = p.w_hc.template Cast<Other>();
    o.w_xo = p.w_xo.template Cast<Other>();
    o.w_ho = p.w_ho.template Cast<Other>();
    o.cell_clip = static_cast<Other>(p.cell_clip);
    return o;
  };
  ModelParams<Other> out;
  for (const auto &col : input_columns) {
    out.input_columns.emplace_back();
    for (const auto &l : col) out.input_columns.back().push_back(layer(l));
  }
  for (const auto &p : fwd) out.fwd.push_back(lstm(p));
  for (const auto &p : bwd) out.bwd.push_back(lstm(p));
  for (const auto &l : output_dnn) out.output_dnn.push_back(layer(l));
  out.classifier = layer(classifier);
  return out;
}

}  // namespace tcblstm

#endif  // TCBLSTM_MODEL_H_
