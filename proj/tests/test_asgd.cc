// tests/test_asgd.cc

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

#include <atomic>
#include <map>
#include <mutex>
#include <random>
#include <set>

#include "tcblstm/asgd.h"
#include "tcblstm/synthetic.h"
#include "tcblstm/verify.h"

using namespace tcblstm;

namespace {

ModelConfig TinyDnn() {
  ModelConfig c;
  c.variant = Variant::kDnn;
  c.feat_dim = 16;
  c.num_classes = 4;
  c.tc = {5, 1, true};
  c.input_dnn_layers = {8};
  c.output_dnn_layers = {};
  c.dnn_init_std = 0.1;
  return c;
}

struct Split {
  WindowDataset train, dev;
};

Split Task(std::size_t train_utts, std::size_t frames, std::size_t context) {
  SyntheticSpec s;
  s.train_utterances = train_utts;
  s.dev_utterances = 2;
  s.test_utterances = 1;
  s.utterance_length = frames;
  const SyntheticData d = generate_synthetic(s);
  return {extract_windows(d.train.utts, context), extract_windows(d.dev.utts, context)};
}

OptimConfig Optim(std::size_t epochs, std::size_t minibatch) {
  OptimConfig o;
  o.initial_lr = 0.5;
  o.decay = 0.7;
  o.max_epochs = epochs;
  o.minibatch = minibatch;
  o.patience = 100;
  return o;
}

template <typename T>
ModelParams<float> Filled(const ModelParams<float> &shape, T fn) {
  ModelParams<float> p = shape.ZerosLike();
  std::size_t k = 0;
  for (auto &b : p.Blocks())
    for (auto &v : b.tensor->data()) v = fn(k++);
  return p;
}

// Counts every fetch and forwards to a wrapped link; fails on demand.
class ProbeLink : public ShardLink {
 public:
  ProbeLink(std::unique_ptr<ShardLink> inner, std::function<void(const ParamSnapshot &)> seen,
            std::function<bool()> fail)
      : inner_(std::move(inner)), seen_(std::move(seen)), fail_(std::move(fail)) {}
  ParamSnapshot Fetch(std::uint32_t shard) override {
    if (fail_ && fail_()) throw ProtocolError("injected: server unreachable");
    ParamSnapshot s = inner_->Fetch(shard);
    if (seen_) seen_(s);
    return s;
  }
  void Push(const GradMessage &msg) override { inner_->Push(msg); }

 private:
  std::unique_ptr<ShardLink> inner_;
  std::function<void(const ParamSnapshot &)> seen_;
  std::function<bool()> fail_;
};

}  // namespace

TEST_SUITE("server apply") {
  TEST_CASE("zero gradient changes only the version") {
    const ModelConfig c = TinyDnn();
    ParamSnapshot s{4, init_params(c), 0.1};
    const auto before = s.params;
    server_apply(&s, {0, 4, before.ZerosLike(), 0, 1});
    CHECK(s.params == before);
    CHECK(s.version == 5);
  }

  TEST_CASE("update is w minus lr times g with no staleness scaling") {
    const ModelConfig c = TinyDnn();
    const auto shape = ShapeParams<float>(c);
    ParamSnapshot s{10, Filled(shape, [](std::size_t k) { return 0.01f * float(k % 7); }), 0.25};
    const auto g = Filled(shape, [](std::size_t k) { return float(k % 3) - 1.0f; });
    const auto w0 = s.params.Flatten();
    server_apply(&s, {1, 0, g, 0, 1});  // ten versions stale
    const auto w1 = s.params.Flatten(), gf = g.Flatten();
    for (std::size_t k = 0; k < w0.size(); ++k) CHECK(w1[k] == w0[k] - 0.25f * gf[k]);
  }

  TEST_CASE("applying two messages commutes up to rounding") {
    const ModelConfig c = TinyDnn();
    const auto shape = ShapeParams<float>(c);
    std::mt19937 rng(1);
    std::uniform_real_distribution<float> d(-1, 1);
    const auto w = Filled(shape, [&](std::size_t) { return d(rng); });
    const auto g1 = Filled(shape, [&](std::size_t) { return d(rng); });
    const auto g2 = Filled(shape, [&](std::size_t) { return d(rng); });
    ParamSnapshot a{0, w, 0.1}, b{0, w, 0.1};
    server_apply(&a, {0, 0, g1, 0, 1});
    server_apply(&a, {1, 0, g2, 0, 1});
    server_apply(&b, {1, 0, g2, 0, 1});
    server_apply(&b, {0, 0, g1, 0, 1});
    CHECK(a.version == b.version);
    const auto fa = a.params.Flatten(), fb = b.params.Flatten();
    for (std::size_t k = 0; k < fa.size(); ++k) CHECK(fa[k] == doctest::Approx(fb[k]).epsilon(1e-6));
  }

  TEST_CASE("mismatched gradient is rejected and leaves the snapshot intact") {
    ParamSnapshot s{0, init_params(TinyDnn()), 0.1};
    ModelConfig other = TinyDnn();
    other.input_dnn_layers = {9};
    const auto before = s.params;
    CHECK_THROWS_AS(server_apply(&s, {0, 0, ShapeParams<float>(other), 0, 1}), ProtocolError);
    CHECK(s.params == before);
    CHECK(s.version == 0);

    ParameterServer server(init_params(TinyDnn()), 0.1);
    CHECK(!server.Apply({0, 0, ShapeParams<float>(other), 0, 1}));
    CHECK(server.dropped() == 1);
    CHECK(server.version() == 0);
  }
}

TEST_SUITE("partition") {
  TEST_CASE("disjoint, covering and cut on minibatch boundaries") {
    for (std::size_t rows : {100u, 128u, 1000u, 4001u}) {
      for (std::size_t shards : {1u, 2u, 3u}) {
        const auto parts = PartitionRows(rows, 16, shards);
        REQUIRE(parts.size() == shards);
        std::set<std::size_t> seen;
        std::size_t batches = 0;
        for (const auto &p : parts) {
          CHECK(!p.empty());
          for (std::size_t r : p) CHECK(seen.insert(r).second);
          batches += (p.size() + 15) / 16;
        }
        CHECK(seen.size() == rows);
        CHECK(*seen.rbegin() == rows - 1);
        CHECK(batches == (rows + 15) / 16);
      }
    }
  }

  TEST_CASE("too few minibatches for the shards is an input error") {
    CHECK_THROWS_AS(PartitionRows(20, 16, 3), InputError);
    CHECK_THROWS_AS(PartitionRows(0, 16, 1), InputError);
  }

  TEST_CASE("config validation") {
    AsgdConfig a;
    CHECK_NOTHROW(a.Validate());
    a.num_shards = 0;
    CHECK_THROWS_AS(a.Validate(), ConfigError);
    a = {};
    a.fetch_retries = 0;
    CHECK_THROWS_AS(a.Validate(), ConfigError);
  }
}

TEST_SUITE("wire") {
  TEST_CASE("frame layout is bit exact") {
    Frame f{MessageType::kGradient, 0x0102030405060708ull, {{"ab", Tensor{{1.0f, -2.0f}}}}};
    const auto bytes = EncodeFrame(f);
    // length, type, stamp, count, name len, name, rows, cols, 2 floats
    const std::vector<std::uint8_t> want = {
        35,   0,    0,    0,    2,    8,    7,    6,    5,    4,    3,    2,    1,
        1,    0,    0,    0,    2,    0,    0,    0,    'a',  'b',  1,    0,    0,
        0,    2,    0,    0,    0,    0x00, 0x00, 0x80, 0x3f, 0x00, 0x00, 0x00, 0xc0};
    CHECK(bytes == want);
    CHECK(DecodeFrame(bytes) == f);
  }

  TEST_CASE("snapshot and gradient frames round trip") {
    const ModelConfig c = TinyDnn();
    const auto p = init_params(c);
    const ParamSnapshot s{77, p, 0.0125};
    const ParamSnapshot s2 = SnapshotFromFrame(DecodeFrame(EncodeFrame(SnapshotFrame(s))), p);
    CHECK(s2.version == 77);
    CHECK(s2.lr == doctest::Approx(0.0125));
    CHECK(s2.params == p);

    const GradMessage g{2, 41, p, 1.5f, 128};
    const GradMessage g2 = GradientFromFrame(DecodeFrame(EncodeFrame(GradientFrame(g))), p);
    CHECK(g2.shard_id == 2);
    CHECK(g2.step_stamp == 41);
    CHECK(g2.loss == 1.5f);
    CHECK(g2.rows == 128);
    CHECK(g2.grads == p);

    const Frame fetch = DecodeFrame(EncodeFrame(FetchFrame(3)));
    CHECK(fetch.type == MessageType::kFetch);
    CHECK(fetch.stamp == 3);
    CHECK(fetch.blocks.empty());
  }

  TEST_CASE("malformed frames are rejected") {
    const auto good = EncodeFrame(FetchFrame(1));
    auto bad_type = good;
    bad_type[4] = 9;
    CHECK_THROWS_AS(DecodeFrame(bad_type), FormatError);
    auto trailing = good;
    trailing.push_back(0);
    CHECK_THROWS_AS(DecodeFrame(trailing), FormatError);
    const std::vector<std::uint8_t> cut(good.begin(), good.end() - 2);
    CHECK_THROWS_AS(DecodeFrame(cut), UserError);

    const auto p = init_params(TinyDnn());
    ModelConfig other = TinyDnn();
    other.input_dnn_layers = {9};
    const auto q = init_params(other);
    CHECK_THROWS_AS(SnapshotFromFrame(SnapshotFrame({0, q, 0.1}), p), ProtocolError);
    CHECK_THROWS_AS(GradientFromFrame(SnapshotFrame({0, p, 0.1}), p), ProtocolError);
  }
}

TEST_SUITE("asgd training") {
  TEST_CASE("one synchronous shard reproduces plain SGD bitwise") {
    const Split s = Task(6, 100, 5);
    const ModelConfig c = TinyDnn();
    const OptimConfig o = Optim(3, 32);
    const TrainResult sgd = train(c, init_params(c), s.train, s.dev, o);
    for (Transport t : {Transport::kInProcess, Transport::kSocket}) {
      AsgdConfig a;
      a.num_shards = 1;
      a.synchronous = true;
      a.transport = t;
      a.optim = o;
      const TrainResult r = asgd_train(c, init_params(c), s.train, s.dev, a);
      CHECK(!r.aborted);
      CHECK(r.last == sgd.last);
      CHECK(r.best == sgd.best);
      REQUIRE(r.log.size() == sgd.log.size());
      for (std::size_t k = 0; k < r.log.size(); ++k) {
        CHECK(DeterministicLogLine(r.log[k], false) == DeterministicLogLine(sgd.log[k], false));
        CHECK(r.log[k].mean_staleness == 0.0);
      }
    }
  }

  TEST_CASE("synchronous multi-shard runs are deterministic across transports") {
    const Split s = Task(6, 100, 5);
    const ModelConfig c = TinyDnn();
    AsgdConfig a;
    a.synchronous = true;
    a.optim = Optim(2, 32);
    const TrainResult x = asgd_train(c, init_params(c), s.train, s.dev, a);
    a.transport = Transport::kSocket;
    const TrainResult y = asgd_train(c, init_params(c), s.train, s.dev, a);
    CHECK(x.last == y.last);
    REQUIRE(x.log.size() == 2);
    // Each shard fetches immediately before its push, so nothing is stale.
    CHECK(x.log[0].mean_staleness == 0.0);
    CHECK(x.log[0].messages_applied == (s.train.size() + 31) / 32);
  }

  TEST_CASE("concurrent shards never observe a torn snapshot") {
    const Split s = Task(20, 200, 5);  // 4000 windows
    const ModelConfig c = TinyDnn();
    AsgdConfig a;
    a.optim = Optim(2, 4);  // 1000 messages per epoch
    const ModelParams<float> initial = init_params(c);

    std::mutex mu;
    std::map<std::uint64_t, std::vector<float>> fetched;  // version -> weights
    std::size_t fetches = 0;
    AsgdHooks hooks;
    hooks.record_messages = true;
    hooks.make_link = [&](std::size_t, ParameterServer *server) {
      return std::make_unique<ProbeLink>(
          MakeInProcessLink(server),
          [&](const ParamSnapshot &snap) {
            std::lock_guard<std::mutex> lock(mu);
            ++fetches;
            auto flat = snap.params.Flatten();
            auto [it, fresh] = fetched.emplace(snap.version, flat);
            if (!fresh) CHECK(it->second == flat);
          },
          nullptr);
    };
    std::vector<GradMessage> messages;
    std::vector<AppliedRecord> records;
    ModelParams<float> final_server;
    std::uint64_t final_version = 0;
    hooks.on_server = [&](const ParameterServer &server) {
      messages = server.RecordedMessages();
      records = server.Log();
      const ParamSnapshot snap = server.Fetch();
      final_server = snap.params;
      final_version = snap.version;
    };
    const TrainResult r = asgd_train(c, initial, s.train, s.dev, a, nullptr, {}, hooks);
    REQUIRE(!r.aborted);
    REQUIRE(messages.size() >= 1000);
    CHECK(final_version == messages.size());
    CHECK(records.size() == messages.size());
    std::size_t per_epoch = 0;
    for (const auto &e : r.log) per_epoch += e.messages_applied;
    CHECK(per_epoch == messages.size());
    CHECK(fetches >= messages.size());
    MESSAGE(messages.size() << " messages, " << fetched.size() << " distinct versions fetched");

    // Replay the applied sequence from the initial weights; every snapshot a
    // shard fetched must equal the replayed state at its version.
    ParamSnapshot replay{0, initial, 0};
    std::size_t matched = 0;
    auto check_version = [&] {
      auto it = fetched.find(replay.version);
      if (it != fetched.end()) {
        CHECK(it->second == replay.params.Flatten());
        ++matched;
      }
    };
    for (std::size_t k = 0; k < messages.size(); ++k) {
      check_version();
      CHECK(records[k].applied_at == replay.version);
      CHECK(records[k].step_stamp <= records[k].applied_at);
      CHECK(records[k].shard_id < 3);
      replay.lr = records[k].lr;
      server_apply(&replay, messages[k]);
    }
    check_version();
    CHECK(matched == fetched.size());
    CHECK(replay.params == final_server);
    CHECK(r.last == final_server);
    for (const auto &e : r.log) CHECK(e.mean_staleness >= 0.0);
  }

  TEST_CASE("every shard trains only on its own partition") {
    const Split s = Task(6, 100, 5);
    const ModelConfig c = TinyDnn();
    AsgdConfig a;
    a.optim = Optim(1, 32);
    const auto parts = PartitionRows(s.train.size(), 32, 3);
    std::mutex mu;
    std::vector<std::multiset<std::size_t>> seen(3);
    AsgdHooks hooks;
    hooks.on_batch = [&](std::size_t shard, const std::vector<std::size_t> &rows) {
      std::lock_guard<std::mutex> lock(mu);
      seen[shard].insert(rows.begin(), rows.end());
    };
    asgd_train(c, init_params(c), s.train, s.dev, a, nullptr, {}, hooks);
    for (std::size_t k = 0; k < 3; ++k)
      CHECK(seen[k] == std::multiset<std::size_t>(parts[k].begin(), parts[k].end()));
  }

  TEST_CASE("an unreachable server aborts the run with a partial log") {
    const Split s = Task(6, 100, 5);
    const ModelConfig c = TinyDnn();
    AsgdConfig a;
    a.optim = Optim(4, 32);
    a.fetch_retries = 2;
    std::atomic<int> calls{0};
    AsgdHooks hooks;
    hooks.make_link = [&](std::size_t shard, ParameterServer *server) {
      std::function<bool()> fail;
      // Shard 1 loses the server partway through the second epoch.
      if (shard == 1) fail = [&] { return ++calls > 9; };
      return std::make_unique<ProbeLink>(MakeInProcessLink(server), nullptr, fail);
    };
    std::size_t callbacks = 0;
    const TrainResult r = asgd_train(
        c, init_params(c), s.train, s.dev, a, nullptr,
        [&](const EpochLog &, const TrainState &, const ModelParams<float> &,
            const ModelParams<float> &) { ++callbacks; },
        hooks);
    CHECK(r.aborted);
    CHECK(r.error.find("shard 1") != std::string::npos);
    CHECK(r.log.size() == 1);
    CHECK(callbacks == 1);
  }
}
