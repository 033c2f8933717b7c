// tests/test_layers.cc

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

#include <doctest.h>

#include <cmath>
#include <random>

#include "tcblstm/layers.h"
#include "tcblstm/verify.h"

using namespace tcblstm;

namespace {

std::mt19937_64 &Rng() {
  static std::mt19937_64 rng(77);
  return rng;
}

template <typename Real = float>
BasicTensor<Real> Rand(std::size_t r, std::size_t c, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> d(lo, hi);
  BasicTensor<Real> t(r, c);
  for (auto &v : t.data()) v = static_cast<Real>(d(Rng()));
  return t;
}

template <typename Real = float>
LstmParams<Real> RandLstm(std::size_t in, std::size_t cell, double range = 0.5) {
  LstmParams<Real> p(in, cell);
  for (auto &[name, m] : p.Matrices()) *m = Rand<Real>(m->rows(), m->cols(), -range, range);
  return p;
}

std::vector<Tensor> Reversed(std::vector<Tensor> v) {
  std::reverse(v.begin(), v.end());
  return v;
}

LstmParams<float> ScalarParams(const ScalarLstmWeights &w) {
  LstmParams<float> p(1, 1);
  p.w_xi(0, 0) = static_cast<float>(w.w_xi);
  p.w_hi(0, 0) = static_cast<float>(w.w_hi);
  p.w_xf(0, 0) = static_cast<float>(w.w_xf);
  p.w_hf(0, 0) = static_cast<float>(w.w_hf);
  p.w_xc(0, 0) = static_cast<float>(w.w_xc);
  p.w_hc(0, 0) = static_cast<float>(w.w_hc);
  p.w_xo(0, 0) = static_cast<float>(w.w_xo);
  p.w_ho(0, 0) = static_cast<float>(w.w_ho);
  return p;
}

}  // namespace

TEST_SUITE("affine") {
  TEST_CASE("zero layer with relu outputs zero") {
    AffineLayer<float> layer(4, 3, Activation::kRelu);
    const Tensor y = affine_forward(layer, Rand(5, 4), static_cast<AffineCache<float> *>(nullptr));
    CHECK(y == Tensor(5, 3));
  }

  TEST_CASE("identity weight and no activation is the identity") {
    AffineLayer<float> layer(3, 3, Activation::kNone);
    layer.weight = Tensor::Identity(3);
    const Tensor x = Rand(4, 3);
    CHECK(affine_forward(layer, x, static_cast<AffineCache<float> *>(nullptr)) == x);
  }

  TEST_CASE("shape mismatch raises") {
    AffineLayer<float> layer(4, 3, Activation::kRelu);
    CHECK_THROWS_AS(affine_forward(layer, Rand(2, 5), static_cast<AffineCache<float> *>(nullptr)),
                    ShapeError);
    AffineCache<float> cache;
    affine_forward(layer, Rand(2, 4), &cache);
    CHECK_THROWS_AS(affine_backward(layer, cache, Tensor(3, 3)), ShapeError);
  }

  TEST_CASE("backward is linear in grad_y") {
    AffineLayer<float> layer(4, 3, Activation::kRelu);
    layer.weight = Rand(4, 3);
    layer.bias = Rand(1, 3);
    AffineCache<float> cache;
    affine_forward(layer, Rand(5, 4), &cache);
    const auto zero = affine_backward(layer, cache, Tensor(5, 3));
    CHECK(zero.grad_x == Tensor(5, 4));
    CHECK(zero.grad_weight == Tensor(4, 3));
    CHECK(zero.grad_bias == Tensor(1, 3));
    const Tensor g = Rand(5, 3);
    Tensor g2 = g;
    for (auto &v : g2.data()) v *= 2;
    const auto a = affine_backward(layer, cache, g), b = affine_backward(layer, cache, g2);
    for (std::size_t k = 0; k < a.grad_weight.size(); ++k)
      CHECK(b.grad_weight.data()[k] == doctest::Approx(2 * a.grad_weight.data()[k]));
    for (std::size_t k = 0; k < a.grad_x.size(); ++k)
      CHECK(b.grad_x.data()[k] == doctest::Approx(2 * a.grad_x.data()[k]));
  }

  TEST_CASE("3x4 layer gradients match finite differences") {
    for (Activation act : {Activation::kRelu, Activation::kNone}) {
      AffineLayer<double> layer(3, 4, act);
      layer.weight = Rand<double>(3, 4, -0.5, 0.5);
      layer.bias = Rand<double>(1, 4, 0.1, 0.5);  // keeps pre-activations off the kink
      Tensor64 x = Rand<double>(2, 3, 0.2, 1.0);
      const Tensor64 w = Rand<double>(2, 4);
      AffineCache<double> cache;
      affine_forward(layer, x, &cache);
      const auto g = affine_backward(layer, cache, w);
      auto dot = [&] {
        const Tensor64 y = affine_forward<double>(layer, x, nullptr);
        double s = 0;
        for (std::size_t k = 0; k < y.size(); ++k) s += y.data()[k] * w.data()[k];
        return s;
      };
      auto fd = [&](Tensor64 *target) {
        const std::vector<double> start(target->data().begin(), target->data().end());
        auto f = [&](std::span<const double> v) {
          std::copy(v.begin(), v.end(), target->data().begin());
          return dot();
        };
        auto out = finite_diff_grad(f, start, 1e-4);
        std::copy(start.begin(), start.end(), target->data().begin());
        return out;
      };
      CHECK(relative_error(fd(&layer.weight), g.grad_weight.data()) < 1e-4);
      CHECK(relative_error(fd(&layer.bias), g.grad_bias.data()) < 1e-4);
      CHECK(relative_error(fd(&x), g.grad_x.data()) < 1e-4);
    }
  }
}

TEST_SUITE("lstm") {
  TEST_CASE("zero weights give zero state") {
    LstmParams<float> p(3, 2);
    LstmStepState<float> s{Tensor(2, 2), Tensor(2, 2)};
    const auto next = lstm_step(p, Rand(2, 3), s, static_cast<LstmStepCache<float> *>(nullptr));
    CHECK(next.h == Tensor(2, 2));
    CHECK(next.c == Tensor(2, 2));
  }

  TEST_CASE("bias-free: constant input shift with zero weights keeps h at zero") {
    LstmParams<float> p(2, 3);
    std::vector<Tensor> seq;
    for (int t = 0; t < 4; ++t) seq.push_back(Tensor(1, 2, 5.0f + static_cast<float>(t)));
    for (const Tensor &h : lstm_forward(p, seq, static_cast<LstmSequenceCache<float> *>(nullptr)))
      CHECK(h == Tensor(1, 3));
  }

  TEST_CASE("type exposes exactly eight matrices and no bias") {
    LstmParams<float> p(3, 2);
    const auto m = p.Matrices();
    REQUIRE(m.size() == 8);
    const char *names[] = {"W_xi", "W_hi", "W_xf", "W_hf", "W_xc", "W_hc", "W_xo", "W_ho"};
    for (std::size_t k = 0; k < 8; ++k) CHECK(std::string(m[k].first) == names[k]);
    CHECK(p.w_xi.rows() == 3);
    CHECK(p.w_hi.rows() == 2);
    CHECK(p.cell_clip == 3.0f);
  }

  TEST_CASE("all-ones scalar cell matches the oracle") {
    ScalarLstmWeights w{1, 1, 1, 1, 1, 1, 1, 1};
    const auto golden = scalar_lstm_oracle(w, {1.0});
    // Hand arithmetic: i = f = o = sigma(1), c = sigma(1) tanh(1).
    const double s1 = 1 / (1 + std::exp(-1.0));
    CHECK(std::abs(golden[0].c - s1 * std::tanh(1.0)) < 1e-12);
    CHECK(std::abs(golden[0].c - 0.55677) < 1e-3);
    CHECK(std::abs(golden[0].h - 0.3696) < 1e-3);
    LstmStepState<float> s{Tensor(1, 1), Tensor(1, 1)};
    const auto next = lstm_step(ScalarParams(w), Tensor{{1}}, s,
                                static_cast<LstmStepCache<float> *>(nullptr));
    CHECK(std::abs(next.c(0, 0) - golden[0].c) < 1e-6);
    CHECK(std::abs(next.h(0, 0) - golden[0].h) < 1e-6);
  }

  TEST_CASE("oracle with zero weights gives zero h") {
    for (const auto &s : scalar_lstm_oracle({}, {0.3, -2.0, 5.0})) CHECK(s.h == 0.0);
  }

  TEST_CASE("pre-clip cell above 3 is stored as exactly 3") {
    ScalarLstmWeights w{};
    w.w_xi = w.w_xf = 20;
    w.w_xc = 20;
    const auto golden = scalar_lstm_oracle(w, {1, 1, 1, 1, 1});
    CHECK(golden.back().c == 3.0);
    LstmParams<float> p = ScalarParams(w);
    std::vector<Tensor> seq(5, Tensor{{1}});
    LstmSequenceCache<float> cache;
    lstm_forward(p, seq, &cache);
    CHECK(cache.steps.back().c(0, 0) == 3.0f);
    for (const auto &step : cache.steps) CHECK(std::abs(step.c(0, 0)) <= 3.0f);
  }

  TEST_CASE("T=3 scalar forward matches the iterated oracle") {
    std::uniform_real_distribution<double> d(-1, 1);
    for (int trial = 0; trial < 20; ++trial) {
      ScalarLstmWeights w{};
      for (double *v : {&w.w_xi, &w.w_hi, &w.w_xf, &w.w_hf, &w.w_xc, &w.w_hc, &w.w_xo, &w.w_ho})
        *v = static_cast<float>(d(Rng()));
      std::vector<double> xs = {static_cast<float>(d(Rng())), static_cast<float>(d(Rng())),
                                static_cast<float>(d(Rng()))};
      const auto golden = scalar_lstm_oracle(w, xs);
      std::vector<Tensor> seq;
      for (double x : xs) seq.push_back(Tensor{{static_cast<float>(x)}});
      const auto hs = lstm_forward(ScalarParams(w), seq,
                                   static_cast<LstmSequenceCache<float> *>(nullptr));
      for (std::size_t t = 0; t < 3; ++t) CHECK(std::abs(hs[t](0, 0) - golden[t].h) < 1e-5);
    }
  }

  TEST_CASE("T=1 forward equals one step") {
    const auto p = RandLstm(3, 4);
    const Tensor x = Rand(2, 3);
    LstmStepState<float> zero{Tensor(2, 4), Tensor(2, 4)};
    const auto step = lstm_step(p, x, zero, static_cast<LstmStepCache<float> *>(nullptr));
    const auto hs = lstm_forward(p, {x}, static_cast<LstmSequenceCache<float> *>(nullptr));
    CHECK(hs.size() == 1);
    CHECK(hs[0] == step.h);
  }

  TEST_CASE("empty sequence and shape errors") {
    const auto p = RandLstm(3, 2);
    CHECK_THROWS_AS(lstm_forward(p, {}, static_cast<LstmSequenceCache<float> *>(nullptr)), InputError);
    LstmStepState<float> s{Tensor(1, 2), Tensor(1, 2)};
    CHECK_THROWS_AS(lstm_step(p, Rand(1, 4), s, static_cast<LstmStepCache<float> *>(nullptr)),
                    ShapeError);
    LstmSequenceCache<float> cache;
    lstm_forward(p, {Rand(1, 3), Rand(1, 3)}, &cache);
    CHECK_THROWS_AS(lstm_backward(p, cache, {Tensor(1, 2)}), ShapeError);
  }

  TEST_CASE("zero grad_h gives zero gradients") {
    const auto p = RandLstm(3, 2);
    LstmSequenceCache<float> cache;
    lstm_forward(p, {Rand(2, 3), Rand(2, 3), Rand(2, 3)}, &cache);
    const auto g = lstm_backward(p, cache, std::vector<Tensor>(3, Tensor(2, 2)));
    for (const auto &[name, m] : g.params.Matrices()) CHECK(*m == Tensor(m->rows(), m->cols()));
    for (const auto &gx : g.grad_x) CHECK(gx == Tensor(2, 3));
  }

  TEST_CASE("T=5 cell 4: all eight weight gradients match finite differences") {
    auto p = RandLstm<double>(3, 4);
    std::vector<Tensor64> xs, ws;
    for (int t = 0; t < 5; ++t) {
      xs.push_back(Rand<double>(2, 3));
      ws.push_back(Rand<double>(2, 4));
    }
    auto loss = [&] {
      const auto hs = lstm_forward<double>(p, xs, nullptr);
      double s = 0;
      for (std::size_t t = 0; t < hs.size(); ++t)
        for (std::size_t k = 0; k < hs[t].size(); ++k) s += hs[t].data()[k] * ws[t].data()[k];
      return s;
    };
    LstmSequenceCache<double> cache;
    lstm_forward(p, xs, &cache);
    auto g = lstm_backward(p, cache, ws);
    auto pm = p.Matrices();
    auto gm = g.params.Matrices();
    for (std::size_t k = 0; k < 8; ++k) {
      Tensor64 *target = pm[k].second;
      const std::vector<double> start(target->data().begin(), target->data().end());
      auto f = [&](std::span<const double> v) {
        std::copy(v.begin(), v.end(), target->data().begin());
        return loss();
      };
      const auto numeric = finite_diff_grad(f, start, 1e-4);
      std::copy(start.begin(), start.end(), target->data().begin());
      INFO(pm[k].first);
      CHECK(relative_error(numeric, gm[k].second->data()) < 1e-4);
    }
  }

  TEST_CASE("cell stays within the clip after every step on random inputs") {
    const auto p = RandLstm(4, 6, 3.0);
    std::vector<Tensor> seq;
    for (int t = 0; t < 12; ++t) seq.push_back(Rand(3, 4, -5, 5));
    LstmSequenceCache<float> cache;
    lstm_forward(p, seq, &cache);
    for (const auto &s : cache.steps)
      for (float v : s.c.data()) CHECK(std::abs(v) <= 3.0f);
  }
}

TEST_SUITE("blstm") {
  TEST_CASE("zero weights give a zero context") {
    LstmParams<float> z(3, 2);
    const Tensor ctx = blstm_context(z, z, {Rand(2, 3), Rand(2, 3)},
                                     static_cast<BlstmCache<float> *>(nullptr));
    CHECK(ctx == Tensor(2, 4));
  }

  TEST_CASE("context is the forward final state then the backward final state") {
    const auto fwd = RandLstm(3, 2), bwd = RandLstm(3, 2);
    std::vector<Tensor> seq = {Rand(1, 3), Rand(1, 3), Rand(1, 3), Rand(1, 3)};
    const Tensor ctx = blstm_context(fwd, bwd, seq, static_cast<BlstmCache<float> *>(nullptr));
    const auto hf = lstm_forward(fwd, seq, static_cast<LstmSequenceCache<float> *>(nullptr));
    const auto hb = lstm_forward(bwd, Reversed(seq), static_cast<LstmSequenceCache<float> *>(nullptr));
    CHECK(SliceCols(ctx, 0, 2) == hf.back());
    CHECK(SliceCols(ctx, 2, 2) == hb.back());
  }

  TEST_CASE("reversal symmetry with tied directions is exact") {
    const auto p = RandLstm(3, 4);
    std::vector<Tensor> seq;
    for (int t = 0; t < 7; ++t) seq.push_back(Rand(2, 3));
    const Tensor on_reversed = blstm_context(p, p, Reversed(seq), static_cast<BlstmCache<float> *>(nullptr));
    const Tensor on_original = blstm_context(p, p, seq, static_cast<BlstmCache<float> *>(nullptr));
    CHECK(SliceCols(on_reversed, 0, 4) == SliceCols(on_original, 4, 4));
    CHECK(SliceCols(on_reversed, 4, 4) == SliceCols(on_original, 0, 4));
  }

  TEST_CASE("cell dimension mismatch is a config error") {
    CHECK_THROWS_AS(blstm_context(RandLstm(3, 2), RandLstm(3, 3), {Rand(1, 3)},
                                  static_cast<BlstmCache<float> *>(nullptr)),
                    ConfigError);
  }

  TEST_CASE("gradients through both halves match finite differences") {
    auto fwd = RandLstm<double>(2, 3), bwd = RandLstm<double>(2, 3);
    std::vector<Tensor64> xs;
    for (int t = 0; t < 4; ++t) xs.push_back(Rand<double>(2, 2));
    const Tensor64 w = Rand<double>(2, 6);
    auto loss = [&] {
      const Tensor64 c = blstm_context<double>(fwd, bwd, xs, nullptr);
      double s = 0;
      for (std::size_t k = 0; k < c.size(); ++k) s += c.data()[k] * w.data()[k];
      return s;
    };
    BlstmCache<double> cache;
    blstm_context(fwd, bwd, xs, &cache);
    auto g = blstm_context_backward(fwd, bwd, cache, w);
    for (auto [p, gp] : {std::pair{&fwd, &g.fwd}, std::pair{&bwd, &g.bwd}}) {
      auto pm = p->Matrices();
      auto gm = gp->Matrices();
      for (std::size_t k = 0; k < 8; ++k) {
        Tensor64 *target = pm[k].second;
        const std::vector<double> start(target->data().begin(), target->data().end());
        auto f = [&](std::span<const double> v) {
          std::copy(v.begin(), v.end(), target->data().begin());
          return loss();
        };
        const auto numeric = finite_diff_grad(f, start, 1e-4);
        std::copy(start.begin(), start.end(), target->data().begin());
        CHECK(relative_error(numeric, gm[k].second->data()) < 1e-4);
      }
    }
  }
}

TEST_SUITE("time convolution") {
  TEST_CASE("width 1 returns the frames") {
    TimeConvSpec spec{5, 1, true};
    const Tensor frames = Rand(5, 3);
    const auto w = tc_window(spec, frames);
    REQUIRE(w.size() == 5);
    for (std::size_t t = 0; t < 5; ++t)
      for (std::size_t k = 0; k < 3; ++k) CHECK(w[t](0, k) == frames(t, k));
  }

  TEST_CASE("full-width window is a single step") {
    TimeConvSpec spec{5, 5, true};
    const auto w = tc_window(spec, Rand(5, 4));
    REQUIRE(w.size() == 1);
    CHECK(w[0].cols() == 20);
  }

  TEST_CASE("21 frames width 5 enumerates 17 slices") {
    TimeConvSpec spec{21, 5, true};
    Tensor frames(21, 2);
    for (std::size_t t = 0; t < 21; ++t) {
      frames(t, 0) = static_cast<float>(t);
      frames(t, 1) = static_cast<float>(100 + t);
    }
    const auto w = tc_window(spec, frames);
    REQUIRE(w.size() == 17);
    for (std::size_t t = 0; t < 17; ++t)
      for (std::size_t j = 0; j < 5; ++j) {
        CHECK(w[t](0, 2 * j) == static_cast<float>(t + j));
        CHECK(w[t](0, 2 * j + 1) == static_cast<float>(100 + t + j));
      }
  }

  TEST_CASE("bad specs are config errors") {
    CHECK_THROWS_AS(tc_window(TimeConvSpec{5, 6, true}, Rand(5, 2)), ConfigError);
    CHECK_THROWS_AS((TimeConvSpec{4, 2, true}).Validate(), ConfigError);
  }

  TEST_CASE("step count and width-1 reconstruction hold for all small specs") {
    for (std::size_t context = 1; context <= 9; context += 2)
      for (std::size_t width = 1; width <= context; ++width) {
        TimeConvSpec spec{context, width, true};
        const Tensor frames = Rand(context, 3);
        CHECK(tc_window(spec, frames).size() == context - width + 1);
      }
    TimeConvSpec unit{7, 1, true};
    const Tensor frames = Rand(7, 3);
    const auto w = tc_window(unit, frames);
    Tensor rebuilt(7, 3);
    for (std::size_t t = 0; t < 7; ++t)
      for (std::size_t k = 0; k < 3; ++k) rebuilt(t, k) = w[t](0, k);
    CHECK(rebuilt == frames);
  }

  TEST_CASE("batched windows agree with per-window slices and the adjoint is exact") {
    TimeConvSpec spec{7, 3, true};
    const Tensor windows = Rand(4, 7 * 2);
    const auto steps = tc_window_batch(spec, 2, windows);
    REQUIRE(steps.size() == 5);
    for (std::size_t r = 0; r < 4; ++r) {
      Tensor frames(7, 2);
      for (std::size_t t = 0; t < 7; ++t)
        for (std::size_t k = 0; k < 2; ++k) frames(t, k) = windows(r, t * 2 + k);
      const auto single = tc_window(spec, frames);
      for (std::size_t t = 0; t < 5; ++t)
        for (std::size_t k = 0; k < 6; ++k) CHECK(steps[t](r, k) == single[t](0, k));
    }
    // <adjoint(g), x> == <g, forward(x)>
    std::vector<Tensor64> g;
    for (int t = 0; t < 5; ++t) g.push_back(Rand<double>(4, 6));
    const Tensor64 x = windows.Cast<double>();
    const Tensor64 back = tc_window_batch_backward(spec, 2, g);
    const auto fwd = tc_window_batch(spec, 2, x);
    double lhs = 0, rhs = 0;
    for (std::size_t k = 0; k < x.size(); ++k) lhs += back.data()[k] * x.data()[k];
    for (std::size_t t = 0; t < 5; ++t)
      for (std::size_t k = 0; k < fwd[t].size(); ++k) rhs += g[t].data()[k] * fwd[t].data()[k];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}
