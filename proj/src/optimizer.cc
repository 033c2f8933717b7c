// src/optimizer.cc

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

#include "tcblstm/optimizer.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <exception>
#include <thread>

namespace tcblstm {

void OptimConfig::Validate() const {
  if (!(initial_lr > 0)) throw ConfigError("optim.initial_lr must be positive");
  if (!(decay > 0 && decay < 1))
    throw ConfigError("optim.decay must lie in (0, 1), got " + std::to_string(decay));
  if (!(lr_floor > 0)) throw ConfigError("optim.lr_floor must be positive");
  if (minibatch < 1) throw ConfigError("optim.minibatch must be >= 1");
  if (momentum != 0.0)
    throw ConfigError("optim.momentum must be 0 (momentum is not supported)");
  if (patience < 1) throw ConfigError("optim.patience must be >= 1");
  if (threads < 1) throw ConfigError("optim.threads must be >= 1");
}

double lr_at(const OptimConfig &config, std::size_t epoch) {
  if (epoch < 1) throw ParameterError("lr_at: epochs are 1-based, got 0");
  const double lr =
      config.initial_lr * std::pow(config.decay, static_cast<double>(epoch - 1));
  return std::max(lr, config.lr_floor);
}

template <typename Real>
void sgd_step(ModelParams<Real> *params, const ModelParams<Real> &grads, Real lr) {
  if (!(lr > 0)) throw ParameterError("sgd_step: learning rate must be positive");
  auto p = params->Blocks();
  auto g = grads.Blocks();
  if (p.size() != g.size())
    throw ShapeError("sgd_step: " + std::to_string(g.size()) +
                     " gradient blocks for " + std::to_string(p.size()) +
                     " parameter blocks");
  for (std::size_t b = 0; b < p.size(); ++b) {
    if (!p[b].tensor->SameShape(*g[b].tensor) || p[b].name != g[b].name)
      throw ShapeError("sgd_step: block " + p[b].name + " " +
                       p[b].tensor->ShapeString() + " vs gradient " + g[b].name +
                       " " + g[b].tensor->ShapeString());
    auto w = p[b].tensor->data();
    auto d = g[b].tensor->data();
    for (std::size_t k = 0; k < w.size(); ++k) w[k] -= lr * d[k];
  }
}

template void sgd_step(ModelParams<float> *, const ModelParams<float> &, float);
template void sgd_step(ModelParams<double> *, const ModelParams<double> &, double);

std::uint64_t EpochShuffleSeed(std::uint64_t seed, std::size_t epoch,
                               std::size_t stream) {
  // splitmix64 finaliser over the three inputs.
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ static_cast<std::uint64_t>(epoch)) ^
             static_cast<std::uint64_t>(stream));
}

std::vector<std::size_t> ShuffledOrder(std::vector<std::size_t> indices,
                                       std::uint64_t seed, std::size_t epoch,
                                       std::size_t stream) {
  std::mt19937_64 rng(EpochShuffleSeed(seed, epoch, stream));
  std::shuffle(indices.begin(), indices.end(), rng);
  return indices;
}

std::vector<std::vector<std::size_t>> Minibatches(const std::vector<std::size_t> &order,
                                                  std::size_t size) {
  if (size < 1) throw ParameterError("minibatch size must be >= 1");
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t begin = 0; begin < order.size(); begin += size) {
    const std::size_t end = std::min(order.size(), begin + size);
    out.emplace_back(order.begin() + begin, order.begin() + end);
  }
  return out;
}

namespace {

MinibatchResult GradientOnRows(const ModelParams<float> &params,
                               const ModelConfig &config, const WindowDataset &data,
                               std::span<const std::size_t> rows) {
  Tensor batch = data.GatherWindows(rows);
  std::vector<std::int32_t> targets = data.GatherTargets(rows);
  ModelCache<float> cache;
  forward(params, config, batch, true, &cache);
  BackwardResult<float> r = backward(params, config, cache, targets);
  return {r.loss, std::move(r.grads)};
}

}  // namespace

MinibatchResult MinibatchGradient(const ModelParams<float> &params,
                                  const ModelConfig &config,
                                  const WindowDataset &data,
                                  std::span<const std::size_t> rows,
                                  std::size_t threads) {
  if (rows.empty()) throw InputError("minibatch is empty");
  threads = std::clamp<std::size_t>(threads, 1, rows.size());
  if (threads == 1) return GradientOnRows(params, config, data, rows);

  std::vector<MinibatchResult> parts(threads);
  std::vector<std::span<const std::size_t>> chunks;
  const std::size_t base = rows.size() / threads, extra = rows.size() % threads;
  std::size_t begin = 0;
  for (std::size_t w = 0; w < threads; ++w) {
    const std::size_t n = base + (w < extra ? 1 : 0);
    chunks.push_back(rows.subspan(begin, n));
    begin += n;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < threads; ++w)
    workers.emplace_back([&, w] {
      try {
        parts[w] = GradientOnRows(params, config, data, chunks[w]);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto &t : workers) t.join();
  for (auto &e : errors)
    if (e) std::rethrow_exception(e);

  MinibatchResult out;
  out.grads = params.ZerosLike();
  auto acc = out.grads.Blocks();
  const float total = static_cast<float>(rows.size());
  for (std::size_t w = 0; w < threads; ++w) {
    const float weight = static_cast<float>(chunks[w].size()) / total;
    out.loss += weight * parts[w].loss;
    auto g = parts[w].grads.Blocks();
    for (std::size_t b = 0; b < acc.size(); ++b) {
      auto dst = acc[b].tensor->data();
      auto src = g[b].tensor->data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += weight * src[k];
    }
  }
  return out;
}

std::string LogHeader(bool asgd) {
  std::string h = "epoch\tlr\ttrain_loss\tdev_loss\tdev_acc\tseconds";
  if (asgd) h += "\tmessages_applied\tmean_staleness";
  return h;
}

namespace {

std::string Fields(const EpochLog &log, bool asgd, bool with_time) {
  char buf[256];
  std::string line;
  std::snprintf(buf, sizeof(buf), "%zu\t%.9g\t%.9g\t%.9g\t%.6f", log.epoch, log.lr,
                log.train_loss, log.dev_loss, log.dev_acc);
  line = buf;
  if (with_time) {
    std::snprintf(buf, sizeof(buf), "\t%.3f", log.seconds);
    line += buf;
  }
  if (asgd) {
    std::snprintf(buf, sizeof(buf), "\t%zu\t%.4f", log.messages_applied,
                  log.mean_staleness);
    line += buf;
  }
  return line;
}

}  // namespace

std::string FormatLogLine(const EpochLog &log, bool asgd) {
  return Fields(log, asgd, true);
}

std::string DeterministicLogLine(const EpochLog &log, bool asgd) {
  return Fields(log, asgd, false);
}

TrainResult RunEpochs(const ModelConfig &model, ModelParams<float> initial,
                      const WindowDataset &dev, const OptimConfig &optim,
                      const EpochRunner &runner, const ResumePoint *resume,
                      const EpochCallback &on_epoch) {
  optim.Validate();
  if (dev.size() == 0) throw InputError("dev set is empty");
  TrainResult result;
  if (resume) {
    result.state = resume->state;
    result.last = resume->current;
    result.best = resume->best;
  } else {
    result.state.rng_seed = optim.seed;
    result.state.lr = optim.initial_lr;
    result.last = initial;
    result.best = std::move(initial);
  }
  if (result.state.epochs_since_improvement >= optim.patience) return result;

  using Clock = std::chrono::steady_clock;
  for (std::size_t epoch = result.state.epoch + 1; epoch <= optim.max_epochs; ++epoch) {
    const double lr = lr_at(optim, epoch);
    const auto start = Clock::now();
    EpochUpdate update = runner(epoch, lr, &result.last);
    EvalMetrics metrics = Evaluate(result.last, model, dev.windows, dev.targets);
    const double seconds =
        std::chrono::duration<double>(Clock::now() - start).count();

    result.state.epoch = static_cast<std::uint32_t>(epoch);
    result.state.lr = lr;
    if (metrics.loss < result.state.best_dev_loss) {
      result.state.best_dev_loss = metrics.loss;
      result.state.epochs_since_improvement = 0;
      result.best = result.last;
    } else {
      ++result.state.epochs_since_improvement;
    }
    EpochLog entry{epoch,          lr,      update.train_loss, metrics.loss,
                   metrics.accuracy, seconds, update.messages_applied,
                   update.mean_staleness};
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry, result.state, result.last, result.best);
    if (result.state.epochs_since_improvement >= optim.patience) break;
  }
  return result;
}

namespace {

void CheckDims(const ModelConfig &model, const WindowDataset &data,
               const char *which) {
  if (data.width() != model.window_width() || data.num_classes != model.num_classes)
    throw ConfigError(std::string(which) + " set has window width " +
                      std::to_string(data.width()) + " and " +
                      std::to_string(data.num_classes) +
                      " classes; the model expects " +
                      std::to_string(model.window_width()) + " and " +
                      std::to_string(model.num_classes));
}

}  // namespace

TrainResult train(const ModelConfig &model, ModelParams<float> initial,
                  const WindowDataset &train_set, const WindowDataset &dev_set,
                  const OptimConfig &optim, const ResumePoint *resume,
                  const EpochCallback &on_epoch) {
  model.Validate();
  optim.Validate();
  if (train_set.size() == 0) throw InputError("training set is empty");
  if (dev_set.size() == 0) throw InputError("dev set is empty");
  CheckDims(model, train_set, "training");
  CheckDims(model, dev_set, "dev");

  std::vector<std::size_t> identity(train_set.size());
  std::iota(identity.begin(), identity.end(), 0);
  EpochRunner runner = [&](std::size_t epoch, double lr, ModelParams<float> *params) {
    const auto order = ShuffledOrder(identity, optim.seed, epoch, 0);
    double loss_sum = 0;
    for (const auto &batch : Minibatches(order, optim.minibatch)) {
      MinibatchResult r =
          MinibatchGradient(*params, model, train_set, batch, optim.threads);
      sgd_step(params, r.grads, static_cast<float>(lr));
      loss_sum += static_cast<double>(r.loss) * static_cast<double>(batch.size());
    }
    return EpochUpdate{loss_sum / static_cast<double>(train_set.size()), 0, 0.0};
  };
  return RunEpochs(model, std::move(initial), dev_set, optim, runner, resume, on_epoch);
}

}  // namespace tcblstm
