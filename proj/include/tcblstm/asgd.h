// include/tcblstm/asgd.h

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

#ifndef TCBLSTM_ASGD_H_
#define TCBLSTM_ASGD_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <vector>

#include "tcblstm/optimizer.h"
#include "tcblstm/wire.h"

namespace tcblstm {

enum class Transport { kInProcess, kSocket };

struct AsgdConfig {
  std::size_t num_shards = 3;
  OptimConfig optim;  // same schedule, minibatch and seed as plain SGD
  // Shards take turns one minibatch at a time on the calling thread instead
  // of running concurrently. Deterministic for any shard count; with one
  // shard it is exactly plain SGD.
  bool synchronous = false;
  Transport transport = Transport::kInProcess;
  std::size_t fetch_retries = 3;  // attempts before a shard reports failure

  void Validate() const;
  bool operator==(const AsgdConfig &) const = default;
};

/// w <- w - lr * g, version + 1. No staleness scaling. ProtocolError on a
/// block mismatch, with the snapshot left untouched.
void server_apply(ParamSnapshot *snapshot, const GradMessage &msg);

struct AppliedRecord {
  std::uint32_t shard_id = 0;
  std::uint64_t step_stamp = 0;
  std::uint64_t applied_at = 0;  // version before the update
  double lr = 0;
};

/// The single authoritative copy of the weights. Applies are serialised;
/// fetches return a consistent copy taken between applies.
class ParameterServer {
 public:
  ParameterServer(ModelParams<float> initial, double lr);

  ParamSnapshot Fetch() const;
  /// Returns false (and counts a drop) if the message does not match.
  bool Apply(const GradMessage &msg);
  void SetLr(double lr);

  std::uint64_t version() const;
  std::size_t dropped() const;
  std::vector<AppliedRecord> Log() const;
  /// Keep every applied message so the update sequence can be replayed.
  void RecordMessages(bool on);
  std::vector<GradMessage> RecordedMessages() const;
  ModelParams<float> Shape() const;

 private:
  mutable std::mutex mu_;
  ParamSnapshot state_;
  std::size_t dropped_ = 0;
  bool record_ = false;
  std::vector<AppliedRecord> log_;
  std::vector<GradMessage> messages_;
};

/// A shard's connection to the server.
class ShardLink {
 public:
  virtual ~ShardLink() = default;
  /// Throws on an unreachable server; the shard retries.
  virtual ParamSnapshot Fetch(std::uint32_t shard_id) = 0;
  virtual void Push(const GradMessage &msg) = 0;
};

/// Direct calls into the server object.
std::unique_ptr<ShardLink> MakeInProcessLink(ParameterServer *server);
/// A socketpair per shard, with a server-side thread speaking the framed
/// protocol. Closing the link stops the thread.
std::unique_ptr<ShardLink> MakeSocketLink(ParameterServer *server);

/// Row ranges owned by each shard: contiguous, cut on minibatch boundaries
/// so the shards' minibatch counts sum to the single-worker epoch's count.
/// InputError if some shard would receive no rows.
std::vector<std::vector<std::size_t>> PartitionRows(std::size_t rows,
                                                    std::size_t minibatch,
                                                    std::size_t num_shards);

/// Test hooks.
struct AsgdHooks {
  // Replaces the transport for one shard.
  std::function<std::unique_ptr<ShardLink>(std::size_t shard, ParameterServer *)> make_link;
  // Observes every minibatch a shard computes (shard, window indices).
  std::function<void(std::size_t shard, const std::vector<std::size_t> &rows)> on_batch;
  // Receives the server after each epoch.
  std::function<void(const ParameterServer &)> on_server;
  bool record_messages = false;
};

/// Parameter-server training. Same log schema as train() plus messages
/// applied and mean staleness. A shard failure aborts with a partial log.
TrainResult asgd_train(const ModelConfig &model, ModelParams<float> initial,
                       const WindowDataset &train_set, const WindowDataset &dev_set,
                       const AsgdConfig &config, const ResumePoint *resume = nullptr,
                       const EpochCallback &on_epoch = {},
                       const AsgdHooks &hooks = {});

}  // namespace tcblstm

#endif  // TCBLSTM_ASGD_H_
