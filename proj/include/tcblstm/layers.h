// include/tcblstm/layers.h

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

#ifndef TCBLSTM_LAYERS_H_
#define TCBLSTM_LAYERS_H_

#include <cstddef>
#include <string>
#include <vector>

#include "tcblstm/tensor.h"

namespace tcblstm {

enum class Activation { kRelu, kNone };

// ---------------------------------------------------------------------------
// Affine (+ optional ReLU) layer used by the input and output DNN stacks.

template <typename Real>
struct AffineLayer {
  BasicTensor<Real> weight;  // in_dim x out_dim
  BasicTensor<Real> bias;    // 1 x out_dim
  Activation activation = Activation::kRelu;

  AffineLayer() = default;
  AffineLayer(std::size_t in_dim, std::size_t out_dim, Activation act)
      : weight(in_dim, out_dim), bias(1, out_dim), activation(act) {}

  std::size_t in_dim() const { return weight.rows(); }
  std::size_t out_dim() const { return weight.cols(); }
  bool operator==(const AffineLayer &) const = default;
};

template <typename Real>
struct AffineCache {
  BasicTensor<Real> input;
  BasicTensor<Real> output;  // post-activation; its sign is the ReLU mask
};

template <typename Real>
struct AffineGrads {
  BasicTensor<Real> grad_x;
  BasicTensor<Real> grad_weight;
  BasicTensor<Real> grad_bias;
};

template <typename Real>
BasicTensor<Real> affine_forward(const AffineLayer<Real> &layer,
                                 const BasicTensor<Real> &x,
                                 AffineCache<Real> *cache);

template <typename Real>
AffineGrads<Real> affine_backward(const AffineLayer<Real> &layer,
                                  const AffineCache<Real> &cache,
                                  const BasicTensor<Real> &grad_y);

// ---------------------------------------------------------------------------
// Bias-free, peephole-free LSTM.
//
//   i = sigmoid(x W_xi + h W_hi)
//   f = sigmoid(x W_xf + h W_hf)
//   c = clip(f * c_prev + i * tanh(x W_xc + h W_hc), cell_clip)
//   o = sigmoid(x W_xo + h W_ho)
//   h = o * tanh(c)

template <typename Real>
struct LstmParams {
  BasicTensor<Real> w_xi, w_hi;
  BasicTensor<Real> w_xf, w_hf;
  BasicTensor<Real> w_xc, w_hc;
  BasicTensor<Real> w_xo, w_ho;
  Real cell_clip = Real(3);

  LstmParams() = default;
  LstmParams(std::size_t in_dim, std::size_t cell_dim, Real clip_limit = Real(3));

  std::size_t in_dim() const { return w_xi.rows(); }
  std::size_t cell_dim() const { return w_hi.rows(); }

  // Throws ShapeError if any of the eight matrices disagree.
  void Validate() const;

  // The eight matrices in canonical order, with their block-name suffixes.
  std::vector<std::pair<const char *, BasicTensor<Real> *>> Matrices();
  std::vector<std::pair<const char *, const BasicTensor<Real> *>> Matrices() const;

  bool operator==(const LstmParams &) const = default;
};

template <typename Real>
struct LstmStepState {
  BasicTensor<Real> h;  // batch x cell_dim
  BasicTensor<Real> c;  // batch x cell_dim
};

template <typename Real>
struct LstmStepCache {
  BasicTensor<Real> x;
  BasicTensor<Real> h_prev, c_prev;
  BasicTensor<Real> i, f, g, o;  // gate activations; g is the tanh candidate
  BasicTensor<Real> c, tanh_c;
  std::vector<unsigned char> clipped;  // 1 where the pre-clip cell left the band
};

template <typename Real>
LstmStepState<Real> lstm_step(const LstmParams<Real> &params,
                              const BasicTensor<Real> &x_t,
                              const LstmStepState<Real> &prev,
                              LstmStepCache<Real> *cache);

template <typename Real>
struct LstmSequenceCache {
  BasicTensor<Real> inputs;  // x_1..x_T stacked time-major, (T*batch) x in_dim
  std::vector<LstmStepCache<Real>> steps;  // step caches leave x empty
};

/// Runs the cell over x_1..x_T from a zero state; returns h_1..h_T.
template <typename Real>
std::vector<BasicTensor<Real>> lstm_forward(
    const LstmParams<Real> &params, const std::vector<BasicTensor<Real>> &sequence,
    LstmSequenceCache<Real> *cache);

template <typename Real>
struct LstmGrads {
  LstmParams<Real> params;  // gradient for each of the eight matrices
  std::vector<BasicTensor<Real>> grad_x;
};

/// Backpropagation through time. grad_h[t] is dLoss/dh_t for every step.
template <typename Real>
LstmGrads<Real> lstm_backward(const LstmParams<Real> &params,
                              const LstmSequenceCache<Real> &cache,
                              const std::vector<BasicTensor<Real>> &grad_h);

// ---------------------------------------------------------------------------
// Bidirectional LSTM. The backward direction is the same cell run over the
// reversed sequence, so its state at original position t is the state after
// reading x_T..x_t.

template <typename Real>
struct BlstmCache {
  LstmSequenceCache<Real> fwd;
  LstmSequenceCache<Real> bwd;  // in reversed (processing) order
  std::size_t steps = 0;
  std::size_t cell_dim = 0;
};

/// Per-timestep outputs [h_t^f ; h_t^b], in original time order.
template <typename Real>
std::vector<BasicTensor<Real>> blstm_sequence(
    const LstmParams<Real> &fwd, const LstmParams<Real> &bwd,
    const std::vector<BasicTensor<Real>> &sequence, BlstmCache<Real> *cache);

/// Fixed-size summary [h_T^f ; h_1^b] (batch x 2*cell_dim), forward half first.
template <typename Real>
BasicTensor<Real> blstm_context(const LstmParams<Real> &fwd,
                                const LstmParams<Real> &bwd,
                                const std::vector<BasicTensor<Real>> &sequence,
                                BlstmCache<Real> *cache);

template <typename Real>
struct BlstmGrads {
  LstmParams<Real> fwd;
  LstmParams<Real> bwd;
  std::vector<BasicTensor<Real>> grad_x;  // original time order
};

/// grad_outputs[t] is dLoss/d[h_t^f ; h_t^b]; used for stacked layers.
template <typename Real>
BlstmGrads<Real> blstm_sequence_backward(
    const LstmParams<Real> &fwd, const LstmParams<Real> &bwd,
    const BlstmCache<Real> &cache,
    const std::vector<BasicTensor<Real>> &grad_outputs);

template <typename Real>
BlstmGrads<Real> blstm_context_backward(const LstmParams<Real> &fwd,
                                        const LstmParams<Real> &bwd,
                                        const BlstmCache<Real> &cache,
                                        const BasicTensor<Real> &grad_context);

// ---------------------------------------------------------------------------
// Time convolution: stride-1 sub-windows of a context window.

struct TimeConvSpec {
  std::size_t context_frames = 21;
  std::size_t tc_width = 5;
  bool tied_columns = true;

  std::size_t steps() const { return context_frames - tc_width + 1; }
  void Validate() const;  // ConfigError on bad window settings
  bool operator==(const TimeConvSpec &) const = default;
};

/// frames: context_frames x feat_dim. Returns T tensors of 1 x (tc_width*feat_dim).
template <typename Real>
std::vector<BasicTensor<Real>> tc_window(const TimeConvSpec &spec,
                                         const BasicTensor<Real> &frames);

/// Batched form over flattened windows (batch x context_frames*feat_dim):
/// step t is columns [t*feat_dim, (t+tc_width)*feat_dim).
template <typename Real>
std::vector<BasicTensor<Real>> tc_window_batch(const TimeConvSpec &spec,
                                               std::size_t feat_dim,
                                               const BasicTensor<Real> &windows);

/// Adjoint of tc_window_batch: scatters step gradients back onto the window.
template <typename Real>
BasicTensor<Real> tc_window_batch_backward(
    const TimeConvSpec &spec, std::size_t feat_dim,
    const std::vector<BasicTensor<Real>> &grad_steps);

}  // namespace tcblstm

#endif  // TCBLSTM_LAYERS_H_
