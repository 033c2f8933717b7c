// src/asgd.cc

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

#include "tcblstm/asgd.h"

#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <exception>
#include <numeric>
#include <thread>

namespace tcblstm {

void AsgdConfig::Validate() const {
  if (num_shards < 1) throw ConfigError("asgd.num_shards must be >= 1");
  if (fetch_retries < 1) throw ConfigError("asgd.fetch_retries must be >= 1");
  optim.Validate();
}

void server_apply(ParamSnapshot *snapshot, const GradMessage &msg) {
  auto p = snapshot->params.Blocks();
  auto g = msg.grads.Blocks();
  if (p.size() != g.size())
    throw ProtocolError("gradient from shard " + std::to_string(msg.shard_id) + " has " +
                        std::to_string(g.size()) + " blocks, server has " +
                        std::to_string(p.size()));
  for (std::size_t b = 0; b < p.size(); ++b)
    if (p[b].name != g[b].name || !p[b].tensor->SameShape(*g[b].tensor))
      throw ProtocolError("gradient block " + g[b].name + " " +
                          g[b].tensor->ShapeString() + " does not match " + p[b].name +
                          " " + p[b].tensor->ShapeString());
  sgd_step(&snapshot->params, msg.grads, static_cast<float>(snapshot->lr));
  ++snapshot->version;
}

ParameterServer::ParameterServer(ModelParams<float> initial, double lr) {
  state_.params = std::move(initial);
  state_.lr = lr;
}

ParamSnapshot ParameterServer::Fetch() const {
  std::lock_guard<std::mutex> lock(mu_);
  return state_;
}

bool ParameterServer::Apply(const GradMessage &msg) {
  std::lock_guard<std::mutex> lock(mu_);
  const std::uint64_t before = state_.version;
  try {
    server_apply(&state_, msg);
  } catch (const ProtocolError &) {
    ++dropped_;
    return false;
  }
  log_.push_back({msg.shard_id, msg.step_stamp, before, state_.lr});
  if (record_) messages_.push_back(msg);
  return true;
}

void ParameterServer::SetLr(double lr) {
  std::lock_guard<std::mutex> lock(mu_);
  state_.lr = lr;
}

std::uint64_t ParameterServer::version() const {
  std::lock_guard<std::mutex> lock(mu_);
  return state_.version;
}

std::size_t ParameterServer::dropped() const {
  std::lock_guard<std::mutex> lock(mu_);
  return dropped_;
}

std::vector<AppliedRecord> ParameterServer::Log() const {
  std::lock_guard<std::mutex> lock(mu_);
  return log_;
}

void ParameterServer::RecordMessages(bool on) {
  std::lock_guard<std::mutex> lock(mu_);
  record_ = on;
}

std::vector<GradMessage> ParameterServer::RecordedMessages() const {
  std::lock_guard<std::mutex> lock(mu_);
  return messages_;
}

ModelParams<float> ParameterServer::Shape() const {
  std::lock_guard<std::mutex> lock(mu_);
  return state_.params.ZerosLike();
}

namespace {

class InProcessLink : public ShardLink {
 public:
  explicit InProcessLink(ParameterServer *server) : server_(server) {}
  ParamSnapshot Fetch(std::uint32_t) override { return server_->Fetch(); }
  void Push(const GradMessage &msg) override { server_->Apply(msg); }

 private:
  ParameterServer *server_;
};

// Every gradient frame is acknowledged with a zero-block snapshot frame
// carrying the post-apply version, so a returned Push means "applied".
class SocketLink : public ShardLink {
 public:
  explicit SocketLink(ParameterServer *server) : shape_(server->Shape()) {
    int fds[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0)
      throw ProtocolError("socketpair failed");
    shard_fd_ = fds[0];
    server_fd_ = fds[1];
    thread_ = std::thread([this, server] { Serve(server); });
  }

  ~SocketLink() override {
    ::shutdown(shard_fd_, SHUT_RDWR);
    thread_.join();
    ::close(shard_fd_);
    ::close(server_fd_);
  }

  ParamSnapshot Fetch(std::uint32_t shard_id) override {
    SendFrame(shard_fd_, FetchFrame(shard_id));
    return SnapshotFromFrame(ReceiveFrame(shard_fd_), shape_);
  }

  void Push(const GradMessage &msg) override {
    SendFrame(shard_fd_, GradientFrame(msg));
    const Frame ack = ReceiveFrame(shard_fd_);
    if (ack.type != MessageType::kSnapshot || !ack.blocks.empty())
      throw ProtocolError("expected a gradient acknowledgement");
  }

 private:
  void Serve(ParameterServer *server) {
    try {
      for (;;) {
        const Frame f = ReceiveFrame(server_fd_);
        if (f.type == MessageType::kFetch) {
          SendFrame(server_fd_, SnapshotFrame(server->Fetch()));
        } else if (f.type == MessageType::kGradient) {
          server->Apply(GradientFromFrame(f, shape_));
          Frame ack;
          ack.type = MessageType::kSnapshot;
          ack.stamp = server->version();
          SendFrame(server_fd_, ack);
        } else {
          throw ProtocolError("unexpected snapshot frame from a shard");
        }
      }
    } catch (const Error &) {
      // Peer closed or sent garbage; the shard side sees the failure.
      ::shutdown(server_fd_, SHUT_RDWR);
    }
  }

  ModelParams<float> shape_;
  int shard_fd_ = -1, server_fd_ = -1;
  std::thread thread_;
};

}  // namespace

std::unique_ptr<ShardLink> MakeInProcessLink(ParameterServer *server) {
  return std::make_unique<InProcessLink>(server);
}

std::unique_ptr<ShardLink> MakeSocketLink(ParameterServer *server) {
  return std::make_unique<SocketLink>(server);
}

std::vector<std::vector<std::size_t>> PartitionRows(std::size_t rows,
                                                    std::size_t minibatch,
                                                    std::size_t num_shards) {
  if (minibatch < 1) throw ConfigError("optim.minibatch must be >= 1");
  if (num_shards < 1) throw ConfigError("asgd.num_shards must be >= 1");
  const std::size_t batches = (rows + minibatch - 1) / minibatch;
  std::vector<std::vector<std::size_t>> parts(num_shards);
  std::size_t begin_batch = 0;
  for (std::size_t s = 0; s < num_shards; ++s) {
    const std::size_t count = batches / num_shards + (s < batches % num_shards ? 1 : 0);
    const std::size_t begin = std::min(rows, begin_batch * minibatch);
    const std::size_t end = std::min(rows, (begin_batch + count) * minibatch);
    if (begin == end)
      throw InputError("shard " + std::to_string(s) + " of " +
                       std::to_string(num_shards) + " has an empty partition (" +
                       std::to_string(rows) + " rows, minibatch " +
                       std::to_string(minibatch) + ")");
    parts[s].resize(end - begin);
    std::iota(parts[s].begin(), parts[s].end(), begin);
    begin_batch += count;
  }
  return parts;
}

namespace {

ParamSnapshot FetchWithRetry(ShardLink *link, std::uint32_t shard, std::size_t attempts) {
  std::string last;
  for (std::size_t a = 0; a < attempts; ++a) {
    try {
      return link->Fetch(shard);
    } catch (const Error &e) {
      last = e.what();
      std::this_thread::sleep_for(std::chrono::milliseconds(1 << std::min<std::size_t>(a, 6)));
    }
  }
  throw ProtocolError("shard " + std::to_string(shard) + " could not reach the server after " +
                      std::to_string(attempts) + " attempts: " + last);
}

struct ShardWork {
  std::vector<std::vector<std::size_t>> batches;
  std::unique_ptr<ShardLink> link;
  double loss_sum = 0;
  std::size_t rows = 0;
};

}  // namespace

TrainResult asgd_train(const ModelConfig &model, ModelParams<float> initial,
                       const WindowDataset &train_set, const WindowDataset &dev_set,
                       const AsgdConfig &config, const ResumePoint *resume,
                       const EpochCallback &on_epoch, const AsgdHooks &hooks) {
  model.Validate();
  config.Validate();
  if (train_set.size() == 0) throw InputError("training set is empty");
  if (dev_set.size() == 0) throw InputError("dev set is empty");
  if (train_set.width() != model.window_width() ||
      dev_set.width() != model.window_width())
    throw ConfigError("dataset window width does not match the model");
  const OptimConfig &optim = config.optim;
  const auto partitions = PartitionRows(train_set.size(), optim.minibatch, config.num_shards);

  std::unique_ptr<ParameterServer> server;
  EpochRunner runner = [&](std::size_t epoch, double lr, ModelParams<float> *params) {
    if (!server) {
      server = std::make_unique<ParameterServer>(*params, lr);
      server->RecordMessages(hooks.record_messages);
    }
    server->SetLr(lr);
    const std::size_t log_start = server->Log().size();

    std::vector<ShardWork> shards(config.num_shards);
    for (std::size_t s = 0; s < config.num_shards; ++s) {
      const auto order = ShuffledOrder(partitions[s], optim.seed, epoch, s);
      shards[s].batches = Minibatches(order, optim.minibatch);
      if (hooks.make_link)
        shards[s].link = hooks.make_link(s, server.get());
      else if (config.transport == Transport::kSocket)
        shards[s].link = MakeSocketLink(server.get());
      else
        shards[s].link = MakeInProcessLink(server.get());
    }

    auto step = [&](std::size_t s, std::size_t b) {
      ShardWork &w = shards[s];
      const auto &rows = w.batches[b];
      if (hooks.on_batch) hooks.on_batch(s, rows);
      const ParamSnapshot snap =
          FetchWithRetry(w.link.get(), static_cast<std::uint32_t>(s), config.fetch_retries);
      MinibatchResult r = MinibatchGradient(snap.params, model, train_set, rows, optim.threads);
      GradMessage msg{static_cast<std::uint32_t>(s), snap.version, std::move(r.grads), r.loss,
                      static_cast<std::uint32_t>(rows.size())};
      w.link->Push(msg);
      w.loss_sum += static_cast<double>(r.loss) * static_cast<double>(rows.size());
      w.rows += rows.size();
    };

    if (config.synchronous) {
      std::size_t longest = 0;
      for (const auto &w : shards) longest = std::max(longest, w.batches.size());
      for (std::size_t b = 0; b < longest; ++b)
        for (std::size_t s = 0; s < shards.size(); ++s)
          if (b < shards[s].batches.size()) step(s, b);
    } else {
      std::atomic<bool> stop{false};
      std::vector<std::exception_ptr> errors(shards.size());
      std::vector<std::thread> threads;
      for (std::size_t s = 0; s < shards.size(); ++s)
        threads.emplace_back([&, s] {
          try {
            for (std::size_t b = 0; b < shards[s].batches.size() && !stop; ++b) step(s, b);
          } catch (...) {
            errors[s] = std::current_exception();
            stop = true;
          }
        });
      for (auto &t : threads) t.join();
      for (auto &e : errors)
        if (e) std::rethrow_exception(e);
    }
    double loss_sum = 0;
    std::size_t rows = 0;
    for (const auto &w : shards) {
      loss_sum += w.loss_sum;
      rows += w.rows;
    }
    shards.clear();  // closes the links

    const auto log = server->Log();
    EpochUpdate update;
    update.train_loss = rows ? loss_sum / static_cast<double>(rows) : 0;
    update.messages_applied = log.size() - log_start;
    double staleness = 0;
    for (std::size_t k = log_start; k < log.size(); ++k)
      staleness += static_cast<double>(log[k].applied_at - log[k].step_stamp);
    update.mean_staleness =
        update.messages_applied ? staleness / static_cast<double>(update.messages_applied) : 0;
    *params = server->Fetch().params;
    if (hooks.on_server) hooks.on_server(*server);
    return update;
  };

  // Keep a running copy so an abort can still report what was completed.
  TrainResult partial;
  if (resume) {
    partial.state = resume->state;
    partial.last = resume->current;
    partial.best = resume->best;
  } else {
    partial.last = initial;
    partial.best = initial;
  }
  EpochCallback track = [&](const EpochLog &log, const TrainState &state,
                            const ModelParams<float> &current, const ModelParams<float> &best) {
    partial.log.push_back(log);
    partial.state = state;
    partial.last = current;
    partial.best = best;
    if (on_epoch) on_epoch(log, state, current, best);
  };
  try {
    return RunEpochs(model, std::move(initial), dev_set, optim, runner, resume, track);
  } catch (const ProtocolError &e) {
    partial.aborted = true;
    partial.error = e.what();
    return partial;
  }
}

}  // namespace tcblstm
