// src/layers.cc

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

#include "tcblstm/layers.h"

#include <algorithm>
#include <cmath>

namespace tcblstm {

namespace {

template <typename Real>
BasicTensor<Real> StackRows(const std::vector<BasicTensor<Real>> &parts) {
  std::size_t rows = 0;
  const std::size_t cols = parts.front().cols();
  for (const auto &p : parts) {
    if (p.cols() != cols)
      throw ShapeError("sequence frames disagree in width: " + p.ShapeString() +
                       " vs " + parts.front().ShapeString());
    rows += p.rows();
  }
  BasicTensor<Real> out(rows, cols);
  auto dst = out.data().begin();
  for (const auto &p : parts) dst = std::copy(p.data().begin(), p.data().end(), dst);
  return out;
}

template <typename Real>
BasicTensor<Real> RowBlock(const BasicTensor<Real> &x, std::size_t first,
                           std::size_t count) {
  BasicTensor<Real> out(count, x.cols());
  auto src = x.data().subspan(first * x.cols(), count * x.cols());
  std::copy(src.begin(), src.end(), out.data().begin());
  return out;
}

template <typename Real>
void SetRowBlock(const BasicTensor<Real> &block, std::size_t first,
                 BasicTensor<Real> *x) {
  std::copy(block.data().begin(), block.data().end(),
            x->data().begin() + first * x->cols());
}

// State given the four input projections (x W_x*) for this step.
template <typename Real>
LstmStepState<Real> StepFromProjections(const LstmParams<Real> &p,
                                        const BasicTensor<Real> *xproj,
                                        const LstmStepState<Real> &prev,
                                        LstmStepCache<Real> *cache) {
  const std::size_t batch = prev.h.rows();
  const std::size_t cells = p.cell_dim();
  CheckSameShape(prev.h.rows(), prev.h.cols(), batch, cells, "lstm h_prev");
  CheckSameShape(prev.c.rows(), prev.c.cols(), batch, cells, "lstm c_prev");
  CheckSameShape(xproj[0].rows(), xproj[0].cols(), batch, cells, "lstm input");

  BasicTensor<Real> zi = xproj[0], zf = xproj[1], zg = xproj[2], zo = xproj[3];
  AddMatmul(prev.h, p.w_hi, &zi);
  AddMatmul(prev.h, p.w_hf, &zf);
  AddMatmul(prev.h, p.w_hc, &zg);
  AddMatmul(prev.h, p.w_ho, &zo);

  BasicTensor<Real> i = sigmoid(zi), f = sigmoid(zf), g = tanh_op(zg),
                    o = sigmoid(zo);
  LstmStepState<Real> next{BasicTensor<Real>(batch, cells),
                           BasicTensor<Real>(batch, cells)};
  std::vector<unsigned char> clipped(batch * cells, 0);
  const Real limit = p.cell_clip;
  auto cd = next.c.data();
  auto cp = prev.c.data();
  for (std::size_t k = 0; k < cd.size(); ++k) {
    Real v = f.data()[k] * cp[k] + i.data()[k] * g.data()[k];
    if (v > limit) {
      v = limit;
      clipped[k] = 1;
    } else if (v < -limit) {
      v = -limit;
      clipped[k] = 1;
    }
    cd[k] = v;
  }
  BasicTensor<Real> tanh_c = tanh_op(next.c);
  next.h = Hadamard(o, tanh_c);
  if (cache) {
    cache->h_prev = prev.h;
    cache->c_prev = prev.c;
    cache->i = std::move(i);
    cache->f = std::move(f);
    cache->g = std::move(g);
    cache->o = std::move(o);
    cache->c = next.c;
    cache->tanh_c = std::move(tanh_c);
    cache->clipped = std::move(clipped);
  }
  return next;
}

template <typename Real>
void CheckCellClip(Real limit) {
  if (!(limit > 0))
    throw ParameterError("lstm: cell_clip must be positive, got " +
                         std::to_string(limit));
}

}  // namespace

// ---- affine ---------------------------------------------------------------

template <typename Real>
BasicTensor<Real> affine_forward(const AffineLayer<Real> &layer,
                                 const BasicTensor<Real> &x,
                                 AffineCache<Real> *cache) {
  if (x.cols() != layer.in_dim())
    throw ShapeError("affine_forward: input " + x.ShapeString() +
                     " does not match weight " + layer.weight.ShapeString());
  BasicTensor<Real> y = matmul(x, layer.weight);
  AddRowBroadcast(layer.bias, &y);
  if (layer.activation == Activation::kRelu)
    for (auto &v : y.data()) v = v > 0 ? v : Real(0);
  if (cache) {
    cache->input = x;
    cache->output = y;
  }
  return y;
}

template <typename Real>
AffineGrads<Real> affine_backward(const AffineLayer<Real> &layer,
                                  const AffineCache<Real> &cache,
                                  const BasicTensor<Real> &grad_y) {
  if (cache.input.cols() != layer.in_dim() ||
      !grad_y.SameShape(cache.output))
    throw ShapeError("affine_backward: grad " + grad_y.ShapeString() +
                     " does not match cached output " +
                     cache.output.ShapeString());
  BasicTensor<Real> dz = grad_y;
  if (layer.activation == Activation::kRelu) {
    auto out = cache.output.data();
    auto d = dz.data();
    for (std::size_t k = 0; k < d.size(); ++k)
      if (!(out[k] > 0)) d[k] = 0;
  }
  AffineGrads<Real> g;
  g.grad_weight = BasicTensor<Real>(layer.in_dim(), layer.out_dim());
  g.grad_bias = BasicTensor<Real>(1, layer.out_dim());
  g.grad_x = BasicTensor<Real>(cache.input.rows(), layer.in_dim());
  AddMatmulTransA(cache.input, dz, &g.grad_weight);
  AddColumnSums(dz, &g.grad_bias);
  AddMatmulTransB(dz, layer.weight, &g.grad_x);
  return g;
}

// ---- lstm -----------------------------------------------------------------

template <typename Real>
LstmParams<Real>::LstmParams(std::size_t in_dim, std::size_t cell_dim,
                             Real clip_limit)
    : w_xi(in_dim, cell_dim), w_hi(cell_dim, cell_dim),
      w_xf(in_dim, cell_dim), w_hf(cell_dim, cell_dim),
      w_xc(in_dim, cell_dim), w_hc(cell_dim, cell_dim),
      w_xo(in_dim, cell_dim), w_ho(cell_dim, cell_dim),
      cell_clip(clip_limit) {}

template <typename Real>
void LstmParams<Real>::Validate() const {
  const std::size_t in = in_dim(), cells = cell_dim();
  for (auto [name, m] : Matrices()) {
    const bool recurrent = name[2] == 'h';
    const std::size_t rows = recurrent ? cells : in;
    if (m->rows() != rows || m->cols() != cells)
      throw ShapeError(std::string("lstm matrix ") + name + " has shape " +
                       m->ShapeString() + ", expected (" + std::to_string(rows) +
                       "x" + std::to_string(cells) + ")");
  }
  CheckCellClip(cell_clip);
}

template <typename Real>
std::vector<std::pair<const char *, BasicTensor<Real> *>>
LstmParams<Real>::Matrices() {
  return {{"W_xi", &w_xi}, {"W_hi", &w_hi}, {"W_xf", &w_xf}, {"W_hf", &w_hf},
          {"W_xc", &w_xc}, {"W_hc", &w_hc}, {"W_xo", &w_xo}, {"W_ho", &w_ho}};
}

template <typename Real>
std::vector<std::pair<const char *, const BasicTensor<Real> *>>
LstmParams<Real>::Matrices() const {
  return {{"W_xi", &w_xi}, {"W_hi", &w_hi}, {"W_xf", &w_xf}, {"W_hf", &w_hf},
          {"W_xc", &w_xc}, {"W_hc", &w_hc}, {"W_xo", &w_xo}, {"W_ho", &w_ho}};
}

template <typename Real>
LstmStepState<Real> lstm_step(const LstmParams<Real> &params,
                              const BasicTensor<Real> &x_t,
                              const LstmStepState<Real> &prev,
                              LstmStepCache<Real> *cache) {
  if (x_t.cols() != params.in_dim())
    throw ShapeError("lstm_step: input " + x_t.ShapeString() +
                     " does not match in_dim " + std::to_string(params.in_dim()));
  CheckCellClip(params.cell_clip);
  const BasicTensor<Real> xproj[4] = {matmul(x_t, params.w_xi),
                                      matmul(x_t, params.w_xf),
                                      matmul(x_t, params.w_xc),
                                      matmul(x_t, params.w_xo)};
  LstmStepState<Real> next = StepFromProjections(params, xproj, prev, cache);
  if (cache) cache->x = x_t;
  return next;
}

template <typename Real>
std::vector<BasicTensor<Real>> lstm_forward(
    const LstmParams<Real> &params, const std::vector<BasicTensor<Real>> &sequence,
    LstmSequenceCache<Real> *cache) {
  if (sequence.empty()) throw InputError("lstm_forward: empty sequence");
  CheckCellClip(params.cell_clip);
  const std::size_t steps = sequence.size();
  const std::size_t batch = sequence.front().rows();
  for (const auto &x : sequence)
    if (x.rows() != batch || x.cols() != params.in_dim())
      throw ShapeError("lstm_forward: frame " + x.ShapeString() +
                       " inconsistent with batch " + std::to_string(batch) +
                       " and in_dim " + std::to_string(params.in_dim()));

  // Input projections for every step at once; only the recurrence is serial.
  BasicTensor<Real> inputs = StackRows(sequence);
  const BasicTensor<Real> proj[4] = {
      matmul(inputs, params.w_xi), matmul(inputs, params.w_xf),
      matmul(inputs, params.w_xc), matmul(inputs, params.w_xo)};

  const std::size_t cells = params.cell_dim();
  LstmStepState<Real> state{BasicTensor<Real>(batch, cells),
                            BasicTensor<Real>(batch, cells)};
  std::vector<BasicTensor<Real>> hs;
  hs.reserve(steps);
  if (cache) {
    cache->steps.assign(steps, {});
  }
  for (std::size_t t = 0; t < steps; ++t) {
    const BasicTensor<Real> xproj[4] = {
        RowBlock(proj[0], t * batch, batch), RowBlock(proj[1], t * batch, batch),
        RowBlock(proj[2], t * batch, batch), RowBlock(proj[3], t * batch, batch)};
    state = StepFromProjections(params, xproj, state,
                                cache ? &cache->steps[t] : nullptr);
    hs.push_back(state.h);
  }
  if (cache) cache->inputs = std::move(inputs);
  return hs;
}

template <typename Real>
LstmGrads<Real> lstm_backward(const LstmParams<Real> &params,
                              const LstmSequenceCache<Real> &cache,
                              const std::vector<BasicTensor<Real>> &grad_h) {
  const std::size_t steps = cache.steps.size();
  if (grad_h.size() != steps)
    throw ShapeError("lstm_backward: " + std::to_string(grad_h.size()) +
                     " output gradients for " + std::to_string(steps) + " steps");
  if (steps == 0) throw UsageError("lstm_backward: empty cache");
  const std::size_t batch = cache.steps.front().h_prev.rows();
  const std::size_t cells = params.cell_dim();
  const std::size_t in = params.in_dim();
  if (cache.inputs.rows() != steps * batch || cache.inputs.cols() != in)
    throw ShapeError("lstm_backward: cache does not hold stacked inputs");

  LstmGrads<Real> out;
  out.params = LstmParams<Real>(in, cells, params.cell_clip);
  BasicTensor<Real> dz[4] = {BasicTensor<Real>(steps * batch, cells),
                             BasicTensor<Real>(steps * batch, cells),
                             BasicTensor<Real>(steps * batch, cells),
                             BasicTensor<Real>(steps * batch, cells)};
  BasicTensor<Real> dh_next(batch, cells), dc_next(batch, cells);

  for (std::size_t t = steps; t-- > 0;) {
    const LstmStepCache<Real> &s = cache.steps[t];
    CheckSameShape(grad_h[t].rows(), grad_h[t].cols(), batch, cells,
                   "lstm_backward grad_h");
    BasicTensor<Real> dzi(batch, cells), dzf(batch, cells), dzg(batch, cells),
        dzo(batch, cells);
    for (std::size_t k = 0; k < batch * cells; ++k) {
      const Real dh = grad_h[t].data()[k] + dh_next.data()[k];
      const Real o = s.o.data()[k], tc = s.tanh_c.data()[k];
      const Real i = s.i.data()[k], f = s.f.data()[k], g = s.g.data()[k];
      dzo.data()[k] = dh * tc * o * (Real(1) - o);
      Real dc = dh * o * (Real(1) - tc * tc) + dc_next.data()[k];
      if (s.clipped[k]) dc = 0;
      dzi.data()[k] = dc * g * i * (Real(1) - i);
      dzg.data()[k] = dc * i * (Real(1) - g * g);
      dzf.data()[k] = dc * s.c_prev.data()[k] * f * (Real(1) - f);
      dc_next.data()[k] = dc * f;
    }
    dh_next.SetZero();
    AddMatmulTransB(dzi, params.w_hi, &dh_next);
    AddMatmulTransB(dzf, params.w_hf, &dh_next);
    AddMatmulTransB(dzg, params.w_hc, &dh_next);
    AddMatmulTransB(dzo, params.w_ho, &dh_next);
    AddMatmulTransA(s.h_prev, dzi, &out.params.w_hi);
    AddMatmulTransA(s.h_prev, dzf, &out.params.w_hf);
    AddMatmulTransA(s.h_prev, dzg, &out.params.w_hc);
    AddMatmulTransA(s.h_prev, dzo, &out.params.w_ho);
    SetRowBlock(dzi, t * batch, &dz[0]);
    SetRowBlock(dzf, t * batch, &dz[1]);
    SetRowBlock(dzg, t * batch, &dz[2]);
    SetRowBlock(dzo, t * batch, &dz[3]);
  }

  AddMatmulTransA(cache.inputs, dz[0], &out.params.w_xi);
  AddMatmulTransA(cache.inputs, dz[1], &out.params.w_xf);
  AddMatmulTransA(cache.inputs, dz[2], &out.params.w_xc);
  AddMatmulTransA(cache.inputs, dz[3], &out.params.w_xo);
  BasicTensor<Real> dx(steps * batch, in);
  AddMatmulTransB(dz[0], params.w_xi, &dx);
  AddMatmulTransB(dz[1], params.w_xf, &dx);
  AddMatmulTransB(dz[2], params.w_xc, &dx);
  AddMatmulTransB(dz[3], params.w_xo, &dx);
  out.grad_x.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t)
    out.grad_x.push_back(RowBlock(dx, t * batch, batch));
  return out;
}

// ---- blstm ----------------------------------------------------------------

namespace {

template <typename Real>
void CheckPair(const LstmParams<Real> &fwd, const LstmParams<Real> &bwd) {
  if (fwd.cell_dim() != bwd.cell_dim() || fwd.in_dim() != bwd.in_dim())
    throw ConfigError("blstm: direction shapes differ (cell " +
                      std::to_string(fwd.cell_dim()) + " vs " +
                      std::to_string(bwd.cell_dim()) + ", in " +
                      std::to_string(fwd.in_dim()) + " vs " +
                      std::to_string(bwd.in_dim()) + ")");
}

// Runs both directions; returns forward hs (time order) and backward hs in
// processing order (index 0 is original time T).
template <typename Real>
std::pair<std::vector<BasicTensor<Real>>, std::vector<BasicTensor<Real>>> RunBoth(
    const LstmParams<Real> &fwd, const LstmParams<Real> &bwd,
    const std::vector<BasicTensor<Real>> &sequence, BlstmCache<Real> *cache) {
  CheckPair(fwd, bwd);
  if (sequence.empty()) throw InputError("blstm: empty sequence");
  std::vector<BasicTensor<Real>> reversed(sequence.rbegin(), sequence.rend());
  auto hf = lstm_forward(fwd, sequence, cache ? &cache->fwd : nullptr);
  auto hb = lstm_forward(bwd, reversed, cache ? &cache->bwd : nullptr);
  if (cache) {
    cache->steps = sequence.size();
    cache->cell_dim = fwd.cell_dim();
  }
  return {std::move(hf), std::move(hb)};
}

template <typename Real>
BlstmGrads<Real> BackwardBoth(const LstmParams<Real> &fwd,
                              const LstmParams<Real> &bwd,
                              const BlstmCache<Real> &cache,
                              const std::vector<BasicTensor<Real>> &grad_hf,
                              const std::vector<BasicTensor<Real>> &grad_hb_rev) {
  LstmGrads<Real> gf = lstm_backward(fwd, cache.fwd, grad_hf);
  LstmGrads<Real> gb = lstm_backward(bwd, cache.bwd, grad_hb_rev);
  BlstmGrads<Real> out;
  out.fwd = std::move(gf.params);
  out.bwd = std::move(gb.params);
  const std::size_t steps = cache.steps;
  out.grad_x = std::move(gf.grad_x);
  for (std::size_t t = 0; t < steps; ++t)
    AddInPlace(gb.grad_x[steps - 1 - t], &out.grad_x[t]);
  return out;
}

}  // namespace

template <typename Real>
std::vector<BasicTensor<Real>> blstm_sequence(
    const LstmParams<Real> &fwd, const LstmParams<Real> &bwd,
    const std::vector<BasicTensor<Real>> &sequence, BlstmCache<Real> *cache) {
  auto [hf, hb] = RunBoth(fwd, bwd, sequence, cache);
  const std::size_t steps = sequence.size();
  std::vector<BasicTensor<Real>> out;
  out.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t)
    out.push_back(ConcatCols(hf[t], hb[steps - 1 - t]));
  return out;
}

template <typename Real>
BasicTensor<Real> blstm_context(const LstmParams<Real> &fwd,
                                const LstmParams<Real> &bwd,
                                const std::vector<BasicTensor<Real>> &sequence,
                                BlstmCache<Real> *cache) {
  auto [hf, hb] = RunBoth(fwd, bwd, sequence, cache);
  return ConcatCols(hf.back(), hb.back());
}

template <typename Real>
BlstmGrads<Real> blstm_sequence_backward(
    const LstmParams<Real> &fwd, const LstmParams<Real> &bwd,
    const BlstmCache<Real> &cache,
    const std::vector<BasicTensor<Real>> &grad_outputs) {
  CheckPair(fwd, bwd);
  const std::size_t steps = cache.steps, cells = cache.cell_dim;
  if (grad_outputs.size() != steps)
    throw ShapeError("blstm_sequence_backward: " +
                     std::to_string(grad_outputs.size()) + " gradients for " +
                     std::to_string(steps) + " steps");
  std::vector<BasicTensor<Real>> gf(steps), gb(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    gf[t] = SliceCols(grad_outputs[t], 0, cells);
    gb[steps - 1 - t] = SliceCols(grad_outputs[t], cells, cells);
  }
  return BackwardBoth(fwd, bwd, cache, gf, gb);
}

template <typename Real>
BlstmGrads<Real> blstm_context_backward(const LstmParams<Real> &fwd,
                                        const LstmParams<Real> &bwd,
                                        const BlstmCache<Real> &cache,
                                        const BasicTensor<Real> &grad_context) {
  CheckPair(fwd, bwd);
  const std::size_t steps = cache.steps, cells = cache.cell_dim;
  if (steps == 0) throw UsageError("blstm_context_backward: empty cache");
  if (grad_context.cols() != 2 * cells)
    throw ShapeError("blstm_context_backward: gradient " +
                     grad_context.ShapeString() + " for context width " +
                     std::to_string(2 * cells));
  const std::size_t batch = grad_context.rows();
  std::vector<BasicTensor<Real>> gf(steps, BasicTensor<Real>(batch, cells));
  std::vector<BasicTensor<Real>> gb(steps, BasicTensor<Real>(batch, cells));
  gf.back() = SliceCols(grad_context, 0, cells);
  gb.back() = SliceCols(grad_context, cells, cells);
  return BackwardBoth(fwd, bwd, cache, gf, gb);
}

// ---- time convolution -----------------------------------------------------

void TimeConvSpec::Validate() const {
  if (context_frames == 0 || context_frames % 2 == 0)
    throw ConfigError("time convolution: context_frames must be odd, got " +
                      std::to_string(context_frames));
  if (tc_width == 0 || tc_width > context_frames)
    throw ConfigError("time convolution: tc_width " + std::to_string(tc_width) +
                      " must be in [1, context_frames=" +
                      std::to_string(context_frames) + "]");
}

template <typename Real>
std::vector<BasicTensor<Real>> tc_window(const TimeConvSpec &spec,
                                         const BasicTensor<Real> &frames) {
  spec.Validate();
  if (frames.rows() != spec.context_frames)
    throw ShapeError("tc_window: expected " + std::to_string(spec.context_frames) +
                     " frames, got " + std::to_string(frames.rows()));
  BasicTensor<Real> flat(1, frames.size(),
                         std::vector<Real>(frames.data().begin(), frames.data().end()));
  return tc_window_batch(spec, frames.cols(), flat);
}

template <typename Real>
std::vector<BasicTensor<Real>> tc_window_batch(const TimeConvSpec &spec,
                                               std::size_t feat_dim,
                                               const BasicTensor<Real> &windows) {
  spec.Validate();
  if (windows.cols() != spec.context_frames * feat_dim)
    throw ShapeError("tc_window: window width " + std::to_string(windows.cols()) +
                     " != context_frames*feat_dim = " +
                     std::to_string(spec.context_frames * feat_dim));
  std::vector<BasicTensor<Real>> out;
  out.reserve(spec.steps());
  for (std::size_t t = 0; t < spec.steps(); ++t)
    out.push_back(SliceCols(windows, t * feat_dim, spec.tc_width * feat_dim));
  return out;
}

template <typename Real>
BasicTensor<Real> tc_window_batch_backward(
    const TimeConvSpec &spec, std::size_t feat_dim,
    const std::vector<BasicTensor<Real>> &grad_steps) {
  spec.Validate();
  if (grad_steps.size() != spec.steps())
    throw ShapeError("tc_window backward: " + std::to_string(grad_steps.size()) +
                     " step gradients for " + std::to_string(spec.steps()) +
                     " steps");
  const std::size_t batch = grad_steps.front().rows();
  const std::size_t width = spec.tc_width * feat_dim;
  BasicTensor<Real> out(batch, spec.context_frames * feat_dim);
  for (std::size_t t = 0; t < grad_steps.size(); ++t) {
    CheckSameShape(grad_steps[t].rows(), grad_steps[t].cols(), batch, width,
                   "tc_window backward");
    for (std::size_t r = 0; r < batch; ++r) {
      auto src = grad_steps[t].row(r);
      auto dst = out.row(r).subspan(t * feat_dim, width);
      for (std::size_t k = 0; k < width; ++k) dst[k] += src[k];
    }
  }
  return out;
}

#define TCBLSTM_INSTANTIATE(Real)                                              \
  template struct LstmParams<Real>;                                            \
  template BasicTensor<Real> affine_forward(const AffineLayer<Real> &,         \
                                            const BasicTensor<Real> &,         \
                                            AffineCache<Real> *);              \
  template AffineGrads<Real> affine_backward(const AffineLayer<Real> &,        \
                                             const AffineCache<Real> &,        \
                                             const BasicTensor<Real> &);       \
  template LstmStepState<Real> lstm_step(const LstmParams<Real> &,             \
                                         const BasicTensor<Real> &,            \
                                         const LstmStepState<Real> &,          \
                                         LstmStepCache<Real> *);               \
  template std::vector<BasicTensor<Real>> lstm_forward(                        \
      const LstmParams<Real> &, const std::vector<BasicTensor<Real>> &,        \
      LstmSequenceCache<Real> *);                                              \
  template LstmGrads<Real> lstm_backward(const LstmParams<Real> &,             \
                                         const LstmSequenceCache<Real> &,      \
                                         const std::vector<BasicTensor<Real>> &); \
  template std::vector<BasicTensor<Real>> blstm_sequence(                      \
      const LstmParams<Real> &, const LstmParams<Real> &,                      \
      const std::vector<BasicTensor<Real>> &, BlstmCache<Real> *);             \
  template BasicTensor<Real> blstm_context(                                    \
      const LstmParams<Real> &, const LstmParams<Real> &,                      \
      const std::vector<BasicTensor<Real>> &, BlstmCache<Real> *);             \
  template BlstmGrads<Real> blstm_sequence_backward(                           \
      const LstmParams<Real> &, const LstmParams<Real> &,                      \
      const BlstmCache<Real> &, const std::vector<BasicTensor<Real>> &);       \
  template BlstmGrads<Real> blstm_context_backward(                            \
      const LstmParams<Real> &, const LstmParams<Real> &,                      \
      const BlstmCache<Real> &, const BasicTensor<Real> &);                    \
  template std::vector<BasicTensor<Real>> tc_window(const TimeConvSpec &,      \
                                                    const BasicTensor<Real> &); \
  template std::vector<BasicTensor<Real>> tc_window_batch(                     \
      const TimeConvSpec &, std::size_t, const BasicTensor<Real> &);           \
  template BasicTensor<Real> tc_window_batch_backward(                         \
      const TimeConvSpec &, std::size_t, const std::vector<BasicTensor<Real>> &);

TCBLSTM_INSTANTIATE(float)
TCBLSTM_INSTANTIATE(double)

#undef TCBLSTM_INSTANTIATE

}  // namespace tcblstm
