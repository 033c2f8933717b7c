// src/model.cc

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

#include "tcblstm/model.h"

#include <algorithm>
#include <random>

namespace tcblstm {

namespace {

struct VariantEntry {
  Variant variant;
  const char *name;
};

constexpr VariantEntry kVariants[] = {
    {Variant::kDnn, "dnn"},
    {Variant::kBlstm, "blstm"},
    {Variant::kDnnBlstm, "dnn_blstm"},
    {Variant::kBlstmDnn, "blstm_dnn"},
    {Variant::kDnnBlstmDnn, "dnn_blstm_dnn"},
    {Variant::kTcDnnBlstmDnn, "tc_dnn_blstm_dnn"},
};

std::string JoinWidths(const std::vector<std::size_t> &w) {
  std::string s = "[";
  for (std::size_t i = 0; i < w.size(); ++i)
    s += (i ? "," : "") + std::to_string(w[i]);
  return s + "]";
}

template <typename Real>
BasicTensor<Real> StackRows(const std::vector<BasicTensor<Real>> &parts) {
  const std::size_t batch = parts.front().rows(), cols = parts.front().cols();
  BasicTensor<Real> out(batch * parts.size(), cols);
  auto dst = out.data().begin();
  for (const auto &p : parts) dst = std::copy(p.data().begin(), p.data().end(), dst);
  return out;
}

template <typename Real>
std::vector<BasicTensor<Real>> SplitRows(const BasicTensor<Real> &x,
                                         std::size_t parts) {
  const std::size_t batch = x.rows() / parts;
  std::vector<BasicTensor<Real>> out;
  out.reserve(parts);
  for (std::size_t t = 0; t < parts; ++t) {
    BasicTensor<Real> block(batch, x.cols());
    auto src = x.data().subspan(t * batch * x.cols(), batch * x.cols());
    std::copy(src.begin(), src.end(), block.data().begin());
    out.push_back(std::move(block));
  }
  return out;
}

template <typename Real>
BasicTensor<Real> StackForward(const std::vector<AffineLayer<Real>> &layers,
                               BasicTensor<Real> x,
                               std::vector<AffineCache<Real>> *caches) {
  if (caches) caches->assign(layers.size(), {});
  for (std::size_t l = 0; l < layers.size(); ++l)
    x = affine_forward(layers[l], x, caches ? &(*caches)[l] : nullptr);
  return x;
}

template <typename Real>
BasicTensor<Real> StackBackward(const std::vector<AffineLayer<Real>> &layers,
                                const std::vector<AffineCache<Real>> &caches,
                                BasicTensor<Real> grad,
                                std::vector<AffineLayer<Real>> *grads) {
  for (std::size_t l = layers.size(); l-- > 0;) {
    AffineGrads<Real> g = affine_backward(layers[l], caches[l], grad);
    AddInPlace(g.grad_weight, &(*grads)[l].weight);
    AddInPlace(g.grad_bias, &(*grads)[l].bias);
    grad = std::move(g.grad_x);
  }
  return grad;
}

template <typename Real>
void AddLstm(const LstmParams<Real> &g, LstmParams<Real> *acc) {
  auto src = g.Matrices();
  auto dst = acc->Matrices();
  for (std::size_t k = 0; k < src.size(); ++k) AddInPlace(*src[k].second, dst[k].second);
}

}  // namespace

std::string VariantName(Variant v) {
  for (const auto &e : kVariants)
    if (e.variant == v) return e.name;
  return "unknown";
}

Variant ParseVariant(const std::string &name) {
  for (const auto &e : kVariants)
    if (name == e.name) return e.variant;
  throw ConfigError("unknown model variant '" + name + "'");
}

const std::vector<Variant> &AllVariants() {
  static const std::vector<Variant> all = [] {
    std::vector<Variant> v;
    for (const auto &e : kVariants) v.push_back(e.variant);
    return v;
  }();
  return all;
}

bool ModelConfig::has_input_dnn() const {
  return variant == Variant::kDnn || variant == Variant::kDnnBlstm ||
         variant == Variant::kDnnBlstmDnn || variant == Variant::kTcDnnBlstmDnn;
}

bool ModelConfig::has_blstm() const { return variant != Variant::kDnn; }

bool ModelConfig::has_output_dnn() const {
  return variant == Variant::kBlstmDnn || variant == Variant::kDnnBlstmDnn ||
         variant == Variant::kTcDnnBlstmDnn;
}

TimeConvSpec ModelConfig::effective_tc() const {
  TimeConvSpec spec = tc;
  if (variant != Variant::kTcDnnBlstmDnn) spec.tc_width = 1;
  return spec;
}

void ModelConfig::Validate() const {
  const std::string v = VariantName(variant);
  if (num_classes < 2)
    throw ConfigError("model.num_classes must be >= 2, got " +
                      std::to_string(num_classes));
  if (feat_dim == 0) throw ConfigError("model.feat_dim must be positive");
  tc.Validate();
  if (has_input_dnn() && input_dnn_layers.empty())
    throw ConfigError("variant " + v + " requires nonempty model.input_dnn");
  if (!has_input_dnn() && !input_dnn_layers.empty())
    throw ConfigError("variant " + v + " requires empty model.input_dnn, got " +
                      JoinWidths(input_dnn_layers));
  if (has_output_dnn() && output_dnn_layers.empty())
    throw ConfigError("variant " + v + " requires nonempty model.output_dnn");
  if (!has_output_dnn() && !output_dnn_layers.empty())
    throw ConfigError("variant " + v + " requires empty model.output_dnn, got " +
                      JoinWidths(output_dnn_layers));
  for (std::size_t w : input_dnn_layers)
    if (w == 0) throw ConfigError("model.input_dnn widths must be positive");
  for (std::size_t w : output_dnn_layers)
    if (w == 0) throw ConfigError("model.output_dnn widths must be positive");
  if (has_blstm()) {
    if (cell_dim == 0) throw ConfigError("model.cell_dim must be positive");
    if (blstm_layers < 1 || blstm_layers > 2)
      throw ConfigError("model.blstm_layers must be 1 or 2, got " +
                        std::to_string(blstm_layers));
  }
  if (!(lstm_init_range > 0)) throw ConfigError("model.lstm_init_range must be positive");
  if (!(dnn_init_std > 0)) throw ConfigError("model.dnn_init_std must be positive");
  if (!(cell_clip > 0)) throw ConfigError("model.cell_clip must be positive");
}

// ---- parameters -----------------------------------------------------------

template <typename Real>
std::vector<NamedBlock<Real>> ModelParams<Real>::Blocks() {
  std::vector<NamedBlock<Real>> out;
  const bool tied = input_columns.size() <= 1;
  for (std::size_t c = 0; c < input_columns.size(); ++c) {
    for (std::size_t l = 0; l < input_columns[c].size(); ++l) {
      std::string prefix = "in" + std::to_string(l);
      if (!tied) prefix += ".t" + std::to_string(c);
      out.push_back({prefix + ".W", &input_columns[c][l].weight, BlockKind::kDnnWeight});
      out.push_back({prefix + ".b", &input_columns[c][l].bias, BlockKind::kDnnBias});
    }
  }
  for (std::size_t l = 0; l < fwd.size(); ++l) {
    for (auto [dir, params] : {std::pair{"fwd", &fwd[l]}, std::pair{"bwd", &bwd[l]}}) {
      for (auto [name, m] : params->Matrices())
        out.push_back({"blstm" + std::to_string(l) + "." + dir + "." + name, m,
                       BlockKind::kLstm});
    }
  }
  for (std::size_t l = 0; l < output_dnn.size(); ++l) {
    const std::string prefix = "out" + std::to_string(l);
    out.push_back({prefix + ".W", &output_dnn[l].weight, BlockKind::kDnnWeight});
    out.push_back({prefix + ".b", &output_dnn[l].bias, BlockKind::kDnnBias});
  }
  out.push_back({"softmax.W", &classifier.weight, BlockKind::kDnnWeight});
  out.push_back({"softmax.b", &classifier.bias, BlockKind::kDnnBias});
  return out;
}

template <typename Real>
std::vector<ConstNamedBlock<Real>> ModelParams<Real>::Blocks() const {
  auto blocks = const_cast<ModelParams *>(this)->Blocks();
  std::vector<ConstNamedBlock<Real>> out;
  out.reserve(blocks.size());
  for (auto &b : blocks) out.push_back({std::move(b.name), b.tensor, b.kind});
  return out;
}

template <typename Real>
std::size_t ModelParams<Real>::ParameterCount() const {
  std::size_t n = 0;
  for (const auto &b : Blocks()) n += b.tensor->size();
  return n;
}

template <typename Real>
std::vector<Real> ModelParams<Real>::Flatten() const {
  std::vector<Real> flat;
  flat.reserve(ParameterCount());
  for (const auto &b : Blocks())
    flat.insert(flat.end(), b.tensor->data().begin(), b.tensor->data().end());
  return flat;
}

template <typename Real>
void ModelParams<Real>::Unflatten(std::span<const Real> flat) {
  if (flat.size() != ParameterCount())
    throw ShapeError("unflatten: " + std::to_string(flat.size()) +
                     " values for " + std::to_string(ParameterCount()) +
                     " parameters");
  std::size_t pos = 0;
  for (auto &b : Blocks()) {
    auto dst = b.tensor->data();
    std::copy(flat.begin() + pos, flat.begin() + pos + dst.size(), dst.begin());
    pos += dst.size();
  }
}

template <typename Real>
ModelParams<Real> ModelParams<Real>::ZerosLike() const {
  ModelParams out = *this;
  for (auto &b : out.Blocks()) b.tensor->SetZero();
  return out;
}

template <typename Real>
ModelParams<Real> ShapeParams(const ModelConfig &config) {
  config.Validate();
  ModelParams<Real> p;
  const Real clip_limit = static_cast<Real>(config.cell_clip);
  std::size_t width = 0;
  if (config.variant == Variant::kDnn) {
    width = config.window_width();
    p.input_columns.emplace_back();
    for (std::size_t w : config.input_dnn_layers) {
      p.input_columns[0].emplace_back(width, w, Activation::kRelu);
      width = w;
    }
  } else {
    const TimeConvSpec tc = config.effective_tc();
    const std::size_t step_in = tc.tc_width * config.feat_dim;
    width = step_in;
    if (config.has_input_dnn()) {
      const std::size_t columns = tc.tied_columns ? 1 : tc.steps();
      p.input_columns.resize(columns);
      for (auto &col : p.input_columns) {
        std::size_t in = step_in;
        for (std::size_t w : config.input_dnn_layers) {
          col.emplace_back(in, w, Activation::kRelu);
          in = w;
        }
      }
      width = config.input_dnn_layers.back();
    }
    for (std::size_t l = 0; l < config.blstm_layers; ++l) {
      p.fwd.emplace_back(width, config.cell_dim, clip_limit);
      p.bwd.emplace_back(width, config.cell_dim, clip_limit);
      width = 2 * config.cell_dim;
    }
    for (std::size_t w : config.output_dnn_layers) {
      p.output_dnn.emplace_back(width, w, Activation::kRelu);
      width = w;
    }
  }
  p.classifier = AffineLayer<Real>(width, config.num_classes, Activation::kNone);
  return p;
}

ModelParams<float> init_params(const ModelConfig &config) {
  ModelParams<float> p = ShapeParams<float>(config);
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> uniform(-config.lstm_init_range,
                                                 config.lstm_init_range);
  std::normal_distribution<double> gauss(0.0, config.dnn_init_std);
  for (auto &b : p.Blocks()) {
    for (float &w : b.tensor->data()) {
      switch (b.kind) {
        case BlockKind::kLstm:
          w = static_cast<float>(uniform(rng));
          break;
        case BlockKind::kDnnWeight:
          w = static_cast<float>(gauss(rng));
          break;
        case BlockKind::kDnnBias:
          w = 0.0f;
          break;
      }
    }
  }
  return p;
}

// ---- forward / backward ---------------------------------------------------

template <typename Real>
BasicTensor<Real> forward(const ModelParams<Real> &params,
                          const ModelConfig &config,
                          const BasicTensor<Real> &batch, bool train_mode,
                          ModelCache<Real> *cache) {
  if (batch.cols() != config.window_width())
    throw ShapeError("forward: batch width " + std::to_string(batch.cols()) +
                     " != context_frames*feat_dim = " +
                     std::to_string(config.window_width()));
  ModelCache<Real> *c = train_mode ? cache : nullptr;
  if (c) {
    *c = ModelCache<Real>{};
    c->batch = batch.rows();
  }

  BasicTensor<Real> hidden;
  if (config.variant == Variant::kDnn) {
    if (c) c->input.resize(1);
    hidden = StackForward(params.input_columns.at(0), batch,
                          c ? &c->input[0] : nullptr);
  } else {
    const TimeConvSpec tc = config.effective_tc();
    std::vector<BasicTensor<Real>> seq =
        tc_window_batch(tc, config.feat_dim, batch);
    const std::size_t steps = seq.size();
    if (c) c->steps = steps;
    if (config.has_input_dnn()) {
      if (params.input_columns.size() == 1) {
        if (c) c->input.resize(1);
        BasicTensor<Real> y = StackForward(params.input_columns[0], StackRows(seq),
                                           c ? &c->input[0] : nullptr);
        seq = SplitRows(y, steps);
      } else {
        if (params.input_columns.size() != steps)
          throw ShapeError("forward: " + std::to_string(params.input_columns.size()) +
                           " untied input columns for " + std::to_string(steps) +
                           " timesteps");
        if (c) c->input.resize(steps);
        for (std::size_t t = 0; t < steps; ++t)
          seq[t] = StackForward(params.input_columns[t], seq[t],
                                c ? &c->input[t] : nullptr);
      }
    }
    const std::size_t layers = params.fwd.size();
    if (c) c->blstm.resize(layers);
    for (std::size_t l = 0; l + 1 < layers; ++l)
      seq = blstm_sequence(params.fwd[l], params.bwd[l], seq,
                           c ? &c->blstm[l] : nullptr);
    hidden = blstm_context(params.fwd[layers - 1], params.bwd[layers - 1], seq,
                           c ? &c->blstm[layers - 1] : nullptr);
    hidden = StackForward(params.output_dnn, std::move(hidden),
                          c ? &c->output : nullptr);
  }
  BasicTensor<Real> logits =
      affine_forward(params.classifier, hidden, c ? &c->classifier : nullptr);
  BasicTensor<Real> posteriors = softmax_rows(logits);
  if (c) {
    c->posteriors = posteriors;
    c->valid = true;
  }
  return posteriors;
}

template <typename Real>
BackwardResult<Real> backward(const ModelParams<Real> &params,
                              const ModelConfig &config,
                              const ModelCache<Real> &cache,
                              std::span<const std::int32_t> targets) {
  if (!cache.valid)
    throw UsageError("backward: no train-mode forward cache is available");
  if (targets.size() != cache.batch)
    throw ShapeError("backward: " + std::to_string(targets.size()) +
                     " targets for a batch of " + std::to_string(cache.batch));
  BackwardResult<Real> result;
  result.grads = params.ZerosLike();
  ModelParams<Real> &g = result.grads;

  CrossEntropyResult<Real> ce = cross_entropy(cache.posteriors, targets);
  result.loss = ce.loss;
  AffineGrads<Real> cg =
      affine_backward(params.classifier, cache.classifier, ce.grad_logits);
  AddInPlace(cg.grad_weight, &g.classifier.weight);
  AddInPlace(cg.grad_bias, &g.classifier.bias);
  BasicTensor<Real> grad = std::move(cg.grad_x);

  if (config.variant == Variant::kDnn) {
    result.grad_input = StackBackward(params.input_columns[0], cache.input[0],
                                      std::move(grad), &g.input_columns[0]);
    return result;
  }

  grad = StackBackward(params.output_dnn, cache.output, std::move(grad),
                       &g.output_dnn);
  const std::size_t layers = params.fwd.size();
  BlstmGrads<Real> bg = blstm_context_backward(
      params.fwd[layers - 1], params.bwd[layers - 1], cache.blstm[layers - 1], grad);
  AddLstm(bg.fwd, &g.fwd[layers - 1]);
  AddLstm(bg.bwd, &g.bwd[layers - 1]);
  std::vector<BasicTensor<Real>> grad_seq = std::move(bg.grad_x);
  for (std::size_t l = layers - 1; l-- > 0;) {
    bg = blstm_sequence_backward(params.fwd[l], params.bwd[l], cache.blstm[l],
                                 grad_seq);
    AddLstm(bg.fwd, &g.fwd[l]);
    AddLstm(bg.bwd, &g.bwd[l]);
    grad_seq = std::move(bg.grad_x);
  }

  if (config.has_input_dnn()) {
    if (params.input_columns.size() == 1) {
      BasicTensor<Real> gx = StackBackward(params.input_columns[0], cache.input[0],
                                           StackRows(grad_seq), &g.input_columns[0]);
      grad_seq = SplitRows(gx, cache.steps);
    } else {
      for (std::size_t t = 0; t < cache.steps; ++t)
        grad_seq[t] = StackBackward(params.input_columns[t], cache.input[t],
                                    std::move(grad_seq[t]), &g.input_columns[t]);
    }
  }
  result.grad_input =
      tc_window_batch_backward(config.effective_tc(), config.feat_dim, grad_seq);
  return result;
}

std::vector<std::int32_t> ArgmaxRows(const Tensor &posteriors) {
  std::vector<std::int32_t> out(posteriors.rows());
  for (std::size_t r = 0; r < posteriors.rows(); ++r) {
    auto row = posteriors.row(r);
    std::size_t best = 0;
    for (std::size_t c = 1; c < row.size(); ++c)
      if (row[c] > row[best]) best = c;
    out[r] = static_cast<std::int32_t>(best);
  }
  return out;
}

std::vector<std::int32_t> predict(const ModelParams<float> &params,
                                  const ModelConfig &config, const Tensor &batch) {
  return ArgmaxRows(forward<float>(params, config, batch, false, nullptr));
}

EvalMetrics Evaluate(const ModelParams<float> &params, const ModelConfig &config,
                     const Tensor &windows, std::span<const std::int32_t> targets,
                     std::size_t chunk) {
  if (targets.size() != windows.rows())
    throw ShapeError("evaluate: " + std::to_string(targets.size()) +
                     " targets for " + std::to_string(windows.rows()) + " windows");
  EvalMetrics m;
  m.frames = windows.rows();
  if (m.frames == 0) return m;
  chunk = std::max<std::size_t>(chunk, 1);
  double loss_sum = 0;
  std::size_t correct = 0;
  for (std::size_t begin = 0; begin < m.frames; begin += chunk) {
    const std::size_t n = std::min(chunk, m.frames - begin);
    Tensor part(n, windows.cols());
    auto src = windows.data().subspan(begin * windows.cols(), n * windows.cols());
    std::copy(src.begin(), src.end(), part.data().begin());
    Tensor post = forward<float>(params, config, part, false, nullptr);
    auto tgt = targets.subspan(begin, n);
    CrossEntropyResult<float> ce = cross_entropy(post, tgt);
    loss_sum += static_cast<double>(ce.loss) * static_cast<double>(n);
    auto pred = ArgmaxRows(post);
    for (std::size_t r = 0; r < n; ++r) correct += pred[r] == tgt[r];
  }
  m.loss = loss_sum / static_cast<double>(m.frames);
  m.accuracy = static_cast<double>(correct) / static_cast<double>(m.frames);
  return m;
}

#define TCBLSTM_INSTANTIATE(Real)                                              \
  template struct ModelParams<Real>;                                           \
  template ModelParams<Real> ShapeParams(const ModelConfig &);                 \
  template BasicTensor<Real> forward(const ModelParams<Real> &,                \
                                     const ModelConfig &,                      \
                                     const BasicTensor<Real> &, bool,          \
                                     ModelCache<Real> *);                      \
  template BackwardResult<Real> backward(const ModelParams<Real> &,            \
                                         const ModelConfig &,                  \
                                         const ModelCache<Real> &,             \
                                         std::span<const std::int32_t>);

TCBLSTM_INSTANTIATE(float)
TCBLSTM_INSTANTIATE(double)

#undef TCBLSTM_INSTANTIATE

}  // namespace tcblstm
