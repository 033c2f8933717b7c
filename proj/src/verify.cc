// src/verify.cc

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

#include "tcblstm/verify.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace tcblstm {

std::vector<double> finite_diff_grad(
    const std::function<double(std::span<const double>)> &loss_fn,
    std::vector<double> w, double epsilon) {
  if (!(epsilon > 0)) throw ParameterError("finite_diff_grad: epsilon must be positive");
  std::vector<double> grad(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double saved = w[k];
    w[k] = saved + epsilon;
    const double up = loss_fn(w);
    w[k] = saved - epsilon;
    const double down = loss_fn(w);
    w[k] = saved;
    if (!std::isfinite(up) || !std::isfinite(down))
      throw OracleError("non-finite loss when perturbing coordinate " + std::to_string(k));
    grad[k] = (up - down) / (2 * epsilon);
  }
  return grad;
}

double relative_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw ShapeError("relative_error: " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + " coordinates");
  double worst = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double scale = std::max({std::abs(a[k]), std::abs(b[k]), 1e-8});
    worst = std::max(worst, std::abs(a[k] - b[k]) / scale);
  }
  return worst;
}

double relative_error(const Tensor64 &a, const Tensor64 &b) {
  if (!a.SameShape(b))
    throw ShapeError("relative_error: " + a.ShapeString() + " vs " + b.ShapeString());
  return relative_error(std::span<const double>(a.data()), std::span<const double>(b.data()));
}

std::vector<ScalarLstmStep> scalar_lstm_oracle(const ScalarLstmWeights &w,
                                               const std::vector<double> &inputs,
                                               double clip) {
  auto sigma = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  std::vector<ScalarLstmStep> out;
  double h = 0, c = 0;
  for (double x : inputs) {
    ScalarLstmStep s;
    s.i = sigma(w.w_xi * x + w.w_hi * h);
    s.f = sigma(w.w_xf * x + w.w_hf * h);
    s.c = s.f * c + s.i * std::tanh(w.w_xc * x + w.w_hc * h);
    s.c = std::min(clip, std::max(-clip, s.c));
    s.o = sigma(w.w_xo * x + w.w_ho * h);
    s.h = s.o * std::tanh(s.c);
    h = s.h;
    c = s.c;
    out.push_back(s);
  }
  return out;
}

ModelConfig TinyConfig(Variant variant) {
  ModelConfig c;
  c.variant = variant;
  c.feat_dim = 3;
  c.num_classes = 3;
  c.cell_dim = 3;
  c.tc.context_frames = 5;
  c.tc.tc_width = 3;
  const bool in = variant == Variant::kDnn || variant == Variant::kDnnBlstm ||
                  variant == Variant::kDnnBlstmDnn || variant == Variant::kTcDnnBlstmDnn;
  const bool out = variant == Variant::kBlstmDnn || variant == Variant::kDnnBlstmDnn ||
                   variant == Variant::kTcDnnBlstmDnn;
  c.input_dnn_layers = in ? std::vector<std::size_t>{4} : std::vector<std::size_t>{};
  c.output_dnn_layers = out ? std::vector<std::size_t>{4} : std::vector<std::size_t>{};
  if (variant == Variant::kDnn) c.input_dnn_layers = {4, 4};
  return c;
}

namespace {

using Rng = std::mt19937_64;

Tensor64 Uniform(std::size_t r, std::size_t c, double lo, double hi, Rng &rng) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor64 t(r, c);
  for (auto &v : t.data()) v = d(rng);
  return t;
}

// Uniform magnitude in [lo, hi] with a random sign; keeps ReLU inputs off
// the kink.
Tensor64 AwayFromZero(std::size_t r, std::size_t c, double lo, double hi, Rng &rng) {
  std::uniform_real_distribution<double> mag(lo, hi);
  std::bernoulli_distribution neg(0.5);
  Tensor64 t(r, c);
  for (auto &v : t.data()) v = (neg(rng) ? -1 : 1) * mag(rng);
  return t;
}

double Dot(const Tensor64 &a, const Tensor64 &b) {
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a.data()[k] * b.data()[k];
  return s;
}

struct Block {
  std::string name;
  Tensor64 *value;    // perturbed in place
  Tensor64 analytic;  // claimed gradient
};

// Compares every block's analytic gradient with central differences of
// `loss`, reporting the worst block.
CheckResult CompareBlocks(const std::string &name, std::vector<Block> blocks,
                          const std::function<double()> &loss,
                          const VerifyOptions &opt) {
  CheckResult r{name, 0, opt.tolerance, false, ""};
  std::string worst_block;
  for (auto &b : blocks) {
    if (opt.corrupt) opt.corrupt(name, b.name, &b.analytic);
    Tensor64 &target = *b.value;
    const std::vector<double> start(target.data().begin(), target.data().end());
    auto fn = [&](std::span<const double> w) {
      std::copy(w.begin(), w.end(), target.data().begin());
      return loss();
    };
    const std::vector<double> numeric = finite_diff_grad(fn, start, opt.epsilon);
    std::copy(start.begin(), start.end(), target.data().begin());
    const double err = relative_error(numeric, b.analytic.data());
    if (err >= r.max_rel_error) {
      r.max_rel_error = err;
      worst_block = b.name;
    }
  }
  r.passed = r.max_rel_error < opt.tolerance;
  r.detail = "worst block " + worst_block;
  return r;
}

enum class Act { kSigmoid, kTanh, kRelu };

CheckResult CheckActivation(Act act, const VerifyOptions &opt, Rng &rng) {
  Tensor64 x = AwayFromZero(3, 4, 0.05, 2.0, rng);
  const Tensor64 weights = Uniform(3, 4, -1, 1, rng);
  auto apply = [act](const Tensor64 &v) {
    switch (act) {
      case Act::kSigmoid: return sigmoid(v);
      case Act::kTanh: return tanh_op(v);
      default: return relu(v);
    }
  };
  const Tensor64 y = apply(x);
  Tensor64 grad(3, 4);
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double yk = y.data()[k];
    double d;
    switch (act) {
      case Act::kSigmoid: d = yk * (1 - yk); break;
      case Act::kTanh: d = 1 - yk * yk; break;
      default: d = x.data()[k] > 0 ? 1 : 0;
    }
    grad.data()[k] = weights.data()[k] * d;
  }
  const char *name = act == Act::kSigmoid ? "sigmoid" : act == Act::kTanh ? "tanh" : "relu";
  return CompareBlocks(name, {{"x", &x, grad}}, [&] { return Dot(weights, apply(x)); }, opt);
}

CheckResult CheckSoftmaxCrossEntropy(const VerifyOptions &opt, Rng &rng) {
  Tensor64 logits = Uniform(4, 5, -2, 2, rng);
  const std::vector<std::int32_t> targets = {0, 3, 4, 1};
  auto loss = [&] { return cross_entropy(softmax_rows(logits), targets).loss; };
  const Tensor64 grad = cross_entropy(softmax_rows(logits), targets).grad_logits;
  return CompareBlocks("softmax_cross_entropy", {{"logits", &logits, grad}}, loss, opt);
}

CheckResult CheckAffine(Activation act, const VerifyOptions &opt, Rng &rng) {
  AffineLayer<double> layer(4, 3, act);
  layer.weight = Uniform(4, 3, -0.5, 0.5, rng);
  layer.bias = Uniform(1, 3, -0.5, 0.5, rng);
  Tensor64 x = Uniform(5, 4, -1, 1, rng);
  const Tensor64 weights = Uniform(5, 3, -1, 1, rng);
  AffineCache<double> cache;
  affine_forward(layer, x, &cache);
  const AffineGrads<double> g = affine_backward(layer, cache, weights);
  auto loss = [&] { return Dot(weights, affine_forward<double>(layer, x, nullptr)); };
  return CompareBlocks(act == Activation::kRelu ? "affine_relu" : "affine_linear",
                       {{"x", &x, g.grad_x},
                        {"W", &layer.weight, g.grad_weight},
                        {"b", &layer.bias, g.grad_bias}},
                       loss, opt);
}

LstmParams<double> RandomLstm(std::size_t in, std::size_t cell, double range, Rng &rng) {
  LstmParams<double> p(in, cell);
  for (auto &[name, m] : p.Matrices()) *m = Uniform(m->rows(), m->cols(), -range, range, rng);
  return p;
}

std::vector<Block> LstmBlocks(const std::string &prefix, LstmParams<double> *p,
                              LstmParams<double> &grads) {
  std::vector<Block> blocks;
  auto params = p->Matrices();
  auto g = grads.Matrices();
  for (std::size_t k = 0; k < params.size(); ++k)
    blocks.push_back({prefix + params[k].first, params[k].second, *g[k].second});
  return blocks;
}

std::size_t CountClipped(const LstmSequenceCache<double> &cache) {
  std::size_t n = 0;
  for (const auto &s : cache.steps)
    n += static_cast<std::size_t>(std::count(s.clipped.begin(), s.clipped.end(), 1));
  return n;
}

// With `drive` set, positive inputs meet open input and forget gates and a
// saturated candidate, so the cell accumulates past the clip within a few
// steps and the check covers the clipped branch of the backward pass.
CheckResult CheckLstm(const std::string &name, std::size_t steps, bool drive,
                      const VerifyOptions &opt, Rng &rng) {
  const std::size_t in = 3, cell = 2, batch = 2;
  LstmParams<double> p = RandomLstm(in, cell, 0.5, rng);
  if (drive) {
    p.w_xi = Uniform(in, cell, 0.8, 1.2, rng);
    p.w_xf = Uniform(in, cell, 0.8, 1.2, rng);
    p.w_xc = AwayFromZero(in, cell, 0.5, 1.0, rng);
  }
  std::vector<Tensor64> xs, weights;
  for (std::size_t t = 0; t < steps; ++t) {
    xs.push_back(drive ? Uniform(batch, in, 1, 2, rng) : Uniform(batch, in, -1, 1, rng));
    weights.push_back(Uniform(batch, cell, -1, 1, rng));
  }
  auto loss = [&] {
    const auto hs = lstm_forward<double>(p, xs, nullptr);
    double s = 0;
    for (std::size_t t = 0; t < steps; ++t) s += Dot(weights[t], hs[t]);
    return s;
  };
  LstmSequenceCache<double> cache;
  lstm_forward(p, xs, &cache);
  LstmGrads<double> g = lstm_backward(p, cache, weights);
  std::vector<Block> blocks = LstmBlocks("", &p, g.params);
  for (std::size_t t = 0; t < steps; ++t)
    blocks.push_back({"x" + std::to_string(t + 1), &xs[t], g.grad_x[t]});
  CheckResult r = CompareBlocks(name, std::move(blocks), loss, opt);
  const std::size_t clipped = CountClipped(cache);
  r.detail += ", " + std::to_string(clipped) + " clipped cells";
  if (drive && clipped == 0) r.passed = false;
  return r;
}

CheckResult CheckBlstmContext(const VerifyOptions &opt, Rng &rng) {
  const std::size_t in = 3, cell = 2, batch = 2, steps = 5;
  LstmParams<double> fwd = RandomLstm(in, cell, 0.5, rng);
  LstmParams<double> bwd = RandomLstm(in, cell, 0.5, rng);
  std::vector<Tensor64> xs;
  for (std::size_t t = 0; t < steps; ++t) xs.push_back(Uniform(batch, in, -1, 1, rng));
  const Tensor64 weights = Uniform(batch, 2 * cell, -1, 1, rng);
  auto loss = [&] { return Dot(weights, blstm_context<double>(fwd, bwd, xs, nullptr)); };
  BlstmCache<double> cache;
  blstm_context(fwd, bwd, xs, &cache);
  BlstmGrads<double> g = blstm_context_backward(fwd, bwd, cache, weights);
  std::vector<Block> blocks = LstmBlocks("fwd.", &fwd, g.fwd);
  for (auto &b : LstmBlocks("bwd.", &bwd, g.bwd)) blocks.push_back(std::move(b));
  for (std::size_t t = 0; t < steps; ++t)
    blocks.push_back({"x" + std::to_string(t + 1), &xs[t], g.grad_x[t]});
  return CompareBlocks("blstm_context", std::move(blocks), loss, opt);
}

CheckResult CheckModel(const std::string &name, const ModelConfig &config,
                       const VerifyOptions &opt, Rng &rng) {
  config.Validate();
  ModelParams<double> params = ShapeParams<double>(config);
  for (auto &b : params.Blocks())
    *b.tensor = Uniform(b.tensor->rows(), b.tensor->cols(), -0.5, 0.5, rng);
  const std::size_t batch = 4;
  Tensor64 windows = Uniform(batch, config.window_width(), -1, 1, rng);
  std::vector<std::int32_t> targets(batch);
  for (std::size_t k = 0; k < batch; ++k)
    targets[k] = static_cast<std::int32_t>(k % config.num_classes);
  auto loss = [&] {
    return cross_entropy(forward<double>(params, config, windows, false, nullptr), targets).loss;
  };
  ModelCache<double> cache;
  forward(params, config, windows, true, &cache);
  BackwardResult<double> r = backward(params, config, cache, targets);
  std::vector<Block> blocks;
  auto p = params.Blocks();
  auto g = r.grads.Blocks();
  for (std::size_t k = 0; k < p.size(); ++k) blocks.push_back({p[k].name, p[k].tensor, *g[k].tensor});
  blocks.push_back({"input", &windows, r.grad_input});
  return CompareBlocks(name, std::move(blocks), loss, opt);
}

}  // namespace

std::vector<CheckResult> RunGradientChecks(const VerifyOptions &opt) {
  Rng rng(opt.seed);
  std::vector<CheckResult> out;
  out.push_back(CheckActivation(Act::kSigmoid, opt, rng));
  out.push_back(CheckActivation(Act::kTanh, opt, rng));
  out.push_back(CheckActivation(Act::kRelu, opt, rng));
  out.push_back(CheckSoftmaxCrossEntropy(opt, rng));
  out.push_back(CheckAffine(Activation::kRelu, opt, rng));
  out.push_back(CheckAffine(Activation::kNone, opt, rng));
  out.push_back(CheckLstm("lstm_step", 1, false, opt, rng));
  out.push_back(CheckLstm("lstm_forward", 6, false, opt, rng));
  out.push_back(CheckLstm("lstm_forward_clipping", 6, true, opt, rng));
  out.push_back(CheckBlstmContext(opt, rng));
  for (Variant v : AllVariants()) out.push_back(CheckModel(VariantName(v), TinyConfig(v), opt, rng));
  ModelConfig untied = TinyConfig(Variant::kTcDnnBlstmDnn);
  untied.tc.tied_columns = false;
  out.push_back(CheckModel("tc_dnn_blstm_dnn_untied", untied, opt, rng));
  ModelConfig stacked = TinyConfig(Variant::kDnnBlstmDnn);
  stacked.blstm_layers = 2;
  out.push_back(CheckModel("dnn_blstm_dnn_two_layers", stacked, opt, rng));
  return out;
}

CheckResult RunScalarOracleCheck(const VerifyOptions &opt) {
  Rng rng(opt.seed + 1);
  CheckResult r{"scalar_lstm_oracle", 0, 1e-6, false, ""};
  std::size_t clipped = 0;
  for (std::size_t draw = 0; draw < opt.oracle_draws; ++draw) {
    const bool drive = draw % 2 == 1;  // large weights push |c| past the clip
    const double range = drive ? 6.0 : 1.5;
    std::uniform_real_distribution<double> wd(-range, range), xd(-1.0, 1.0);
    ScalarLstmWeights w{wd(rng), wd(rng), wd(rng), wd(rng), wd(rng), wd(rng), wd(rng), wd(rng)};
    if (drive) {
      // Open the input and forget gates and saturate the candidate.
      w.w_xi = w.w_xf = 8.0;
      w.w_hi = w.w_hf = 0.0;
      w.w_xc = std::copysign(8.0, w.w_xc);
      w.w_hc = 0.0;
    }
    std::vector<double> xs(drive ? 6 : 4);
    for (auto &x : xs) x = drive ? 0.5 + 0.5 * std::abs(xd(rng)) : xd(rng);
    // Round the draw to float so both paths see identical numbers.
    auto f = [](double v) { return static_cast<double>(static_cast<float>(v)); };
    for (double *v : {&w.w_xi, &w.w_hi, &w.w_xf, &w.w_hf, &w.w_xc, &w.w_hc, &w.w_xo, &w.w_ho})
      *v = f(*v);
    for (auto &x : xs) x = f(x);
    const auto golden = scalar_lstm_oracle(w, xs, 3.0);

    LstmParams<float> p(1, 1);
    p.w_xi(0, 0) = static_cast<float>(w.w_xi);
    p.w_hi(0, 0) = static_cast<float>(w.w_hi);
    p.w_xf(0, 0) = static_cast<float>(w.w_xf);
    p.w_hf(0, 0) = static_cast<float>(w.w_hf);
    p.w_xc(0, 0) = static_cast<float>(w.w_xc);
    p.w_hc(0, 0) = static_cast<float>(w.w_hc);
    p.w_xo(0, 0) = static_cast<float>(w.w_xo);
    p.w_ho(0, 0) = static_cast<float>(w.w_ho);
    LstmStepState<float> state{Tensor(1, 1), Tensor(1, 1)};
    for (std::size_t t = 0; t < xs.size(); ++t) {
      LstmStepCache<float> cache;
      state = lstm_step(p, Tensor({{static_cast<float>(xs[t])}}), state, &cache);
      const ScalarLstmStep &g = golden[t];
      for (auto [got, want] : {std::pair{cache.i(0, 0), g.i}, {cache.f(0, 0), g.f},
                               {state.c(0, 0), g.c}, {cache.o(0, 0), g.o},
                               {state.h(0, 0), g.h}})
        r.max_rel_error = std::max(r.max_rel_error, std::abs(static_cast<double>(got) - want));
      if (std::abs(g.c) == 3.0) ++clipped;
    }
  }
  r.passed = r.max_rel_error <= r.tolerance && clipped > 0;
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%zu draws, max abs difference %.2e, %zu steps at the clip",
                opt.oracle_draws, r.max_rel_error, clipped);
  r.detail = buf;
  return r;
}

std::vector<CheckResult> RunVerifySuite(const VerifyOptions &opt) {
  std::vector<CheckResult> out = RunGradientChecks(opt);
  out.push_back(RunScalarOracleCheck(opt));
  return out;
}

}  // namespace tcblstm
