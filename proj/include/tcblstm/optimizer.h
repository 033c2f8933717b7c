// include/tcblstm/optimizer.h

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

#ifndef TCBLSTM_OPTIMIZER_H_
#define TCBLSTM_OPTIMIZER_H_

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "tcblstm/dataset.h"
#include "tcblstm/model.h"

namespace tcblstm {

struct OptimConfig {
  double initial_lr = 0.1;
  double decay = 0.5;
  double lr_floor = 1e-5;
  std::size_t minibatch = 128;
  double momentum = 0.0;  // must stay 0; plain SGD only
  std::size_t patience = 1;
  std::size_t max_epochs = 15;
  std::size_t threads = 1;  // minibatch fan-out workers
  std::uint64_t seed = 1;   // shuffling

  void Validate() const;  // ConfigError naming the bad key
  bool operator==(const OptimConfig &) const = default;
};

/// Bookkeeping carried between epochs. `epoch` is the last completed epoch
/// (0 before training starts) and `lr` the rate that epoch used.
struct TrainState {
  std::uint32_t epoch = 0;
  double lr = 0.0;
  double best_dev_loss = std::numeric_limits<double>::infinity();
  std::uint32_t epochs_since_improvement = 0;
  std::uint64_t rng_seed = 0;

  bool operator==(const TrainState &) const = default;
};

/// max(initial_lr * decay^(epoch-1), lr_floor); epoch is 1-based.
double lr_at(const OptimConfig &config, std::size_t epoch);

/// w <- w - lr * g for every block.
template <typename Real>
void sgd_step(ModelParams<Real> *params, const ModelParams<Real> &grads, Real lr);

/// Seed for the shuffle of `epoch` on data stream `stream` (0 for plain SGD,
/// the shard id under ASGD). Independent of any earlier draws, so a resumed
/// run shuffles exactly as an uninterrupted one.
std::uint64_t EpochShuffleSeed(std::uint64_t seed, std::size_t epoch,
                               std::size_t stream);

/// `indices` permuted with EpochShuffleSeed(seed, epoch, stream).
std::vector<std::size_t> ShuffledOrder(std::vector<std::size_t> indices,
                                       std::uint64_t seed, std::size_t epoch,
                                       std::size_t stream);

/// Consecutive minibatches of `order`; the final short batch is kept.
std::vector<std::vector<std::size_t>> Minibatches(const std::vector<std::size_t> &order,
                                                  std::size_t size);

struct MinibatchResult {
  float loss = 0;
  ModelParams<float> grads;
};

/// Mean loss and gradient over the selected rows. With threads > 1 the rows
/// are split into contiguous chunks and the chunk gradients are combined in
/// worker order, so the result is reproducible for a fixed thread count.
MinibatchResult MinibatchGradient(const ModelParams<float> &params,
                                  const ModelConfig &config,
                                  const WindowDataset &data,
                                  std::span<const std::size_t> rows,
                                  std::size_t threads);

struct EpochLog {
  std::size_t epoch = 0;
  double lr = 0;
  double train_loss = 0;
  double dev_loss = 0;
  double dev_acc = 0;
  double seconds = 0;
  // ASGD only.
  std::size_t messages_applied = 0;
  double mean_staleness = 0;
};

/// Tab-separated: epoch lr train_loss dev_loss dev_acc seconds
/// [messages_applied mean_staleness].
std::string FormatLogLine(const EpochLog &log, bool asgd);
std::string LogHeader(bool asgd);
/// The same line without the wall-clock column, for reproducibility checks.
std::string DeterministicLogLine(const EpochLog &log, bool asgd);

struct TrainResult {
  ModelParams<float> best;  // parameters with the lowest dev loss seen
  ModelParams<float> last;  // parameters after the final epoch
  TrainState state;
  std::vector<EpochLog> log;
  bool aborted = false;
  std::string error;
};

/// State needed to continue a run from a completed epoch.
struct ResumePoint {
  TrainState state;
  ModelParams<float> current;
  ModelParams<float> best;
};

struct EpochUpdate {
  double train_loss = 0;
  std::size_t messages_applied = 0;
  double mean_staleness = 0;
};

/// One epoch of parameter updates at a fixed learning rate. Implemented by
/// plain SGD and by the ASGD driver; returns the frame-weighted train loss.
using EpochRunner =
    std::function<EpochUpdate(std::size_t epoch, double lr, ModelParams<float> *params)>;

using EpochCallback =
    std::function<void(const EpochLog &, const TrainState &, const ModelParams<float> &current,
                       const ModelParams<float> &best)>;

/// The shared epoch loop: learning-rate schedule, dev evaluation, early
/// stopping and best-checkpoint tracking around an EpochRunner.
TrainResult RunEpochs(const ModelConfig &model, ModelParams<float> initial,
                      const WindowDataset &dev, const OptimConfig &optim,
                      const EpochRunner &runner, const ResumePoint *resume,
                      const EpochCallback &on_epoch);

/// Minibatch SGD over `train_set`, monitored on `dev_set`.
TrainResult train(const ModelConfig &model, ModelParams<float> initial,
                  const WindowDataset &train_set, const WindowDataset &dev_set,
                  const OptimConfig &optim, const ResumePoint *resume = nullptr,
                  const EpochCallback &on_epoch = {});

}  // namespace tcblstm

#endif  // TCBLSTM_OPTIMIZER_H_
