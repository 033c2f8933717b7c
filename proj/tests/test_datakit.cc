// tests/test_datakit.cc

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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>

#include "tcblstm/byte_io.h"
#include "tcblstm/checkpoint.h"
#include "tcblstm/dataset.h"
#include "tcblstm/optimizer.h"
#include "tcblstm/synthetic.h"

using namespace tcblstm;
namespace fs = std::filesystem;

namespace {

UtteranceSet RandomSet(std::uint64_t seed, std::size_t utts, std::size_t feat,
                       std::size_t classes) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> d(0, 3);
  std::uniform_int_distribution<std::size_t> len(1, 30);
  UtteranceSet s;
  s.num_classes = classes;
  s.feat_dim = feat;
  for (std::size_t u = 0; u < utts; ++u) {
    Utterance x;
    x.id = "utt" + std::string(u % 3 + 1, 'x') + std::to_string(u);
    const std::size_t n = len(rng);
    x.frames = Tensor(n, feat);
    for (auto &v : x.frames.data()) v = d(rng);
    for (std::size_t t = 0; t < n; ++t)
      x.labels.push_back(static_cast<std::int32_t>(rng() % classes));
    s.utterances.push_back(std::move(x));
  }
  return s;
}

std::string TempPath(const std::string &name) {
  const fs::path dir = fs::temp_directory_path() / "tcblstm_test_datakit";
  fs::create_directories(dir);
  return (dir / name).string();
}

// Independent best-achievable accuracy from the latent level alone: plug-in
// Bayes rule over quantile bins of the level, fitted on train, scored on dev.
// Anything computed from the centre frame sees at most the level plus noise.
double LevelOnlyAccuracy(const SyntheticData &d, std::size_t bins) {
  std::vector<double> levels;
  for (const auto &lat : d.train.latents) levels.insert(levels.end(), lat.begin(), lat.end());
  std::sort(levels.begin(), levels.end());
  std::vector<double> edges;
  for (std::size_t b = 1; b < bins; ++b) edges.push_back(levels[b * levels.size() / bins]);
  auto bin = [&](double v) {
    return static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin());
  };
  const std::size_t classes = d.train.utts.num_classes;
  std::vector<std::vector<std::size_t>> counts(bins, std::vector<std::size_t>(classes, 0));
  for (std::size_t u = 0; u < d.train.latents.size(); ++u)
    for (std::size_t t = 0; t < d.train.latents[u].size(); ++t)
      ++counts[bin(d.train.latents[u][t])][d.train.utts.utterances[u].labels[t]];
  std::size_t right = 0, total = 0;
  for (std::size_t u = 0; u < d.dev.latents.size(); ++u)
    for (std::size_t t = 0; t < d.dev.latents[u].size(); ++t) {
      const auto &c = counts[bin(d.dev.latents[u][t])];
      const std::size_t guess = std::max_element(c.begin(), c.end()) - c.begin();
      right += guess == static_cast<std::size_t>(d.dev.utts.utterances[u].labels[t]);
      ++total;
    }
  return static_cast<double>(right) / static_cast<double>(total);
}

// Accuracy of relabelling each frame from its true latent slope.
double SlopeOracleAccuracy(const SyntheticSplit &split, const std::vector<double> &edges) {
  std::size_t right = 0, total = 0;
  for (std::size_t u = 0; u < split.latents.size(); ++u) {
    const auto &lat = split.latents[u];
    for (std::size_t t = 0; t < lat.size(); ++t) {
      // Slope recomputed here: difference across +/-5 frames, truncated.
      const std::size_t lo = t >= 5 ? t - 5 : 0, hi = std::min(lat.size() - 1, t + 5);
      const double slope = lat[hi] - lat[lo];
      std::int32_t b = 0;
      while (b < static_cast<std::int32_t>(edges.size()) && !(slope < edges[b])) ++b;
      right += b == split.utts.utterances[u].labels[t];
      ++total;
    }
  }
  return static_cast<double>(right) / static_cast<double>(total);
}

}  // namespace

TEST_SUITE("windows") {
  TEST_CASE("context 1 returns the frames themselves") {
    const UtteranceSet s = RandomSet(1, 3, 4, 3);
    const WindowDataset w = extract_windows(s, 1);
    std::size_t row = 0;
    for (const auto &u : s.utterances)
      for (std::size_t t = 0; t < u.frames.rows(); ++t, ++row) {
        for (std::size_t k = 0; k < 4; ++k) CHECK(w.windows(row, k) == u.frames(t, k));
        CHECK(w.targets[row] == u.labels[t]);
        CHECK(w.provenance[row] == std::make_pair(u.id, static_cast<std::uint32_t>(t)));
      }
    CHECK(row == w.size());
  }

  TEST_CASE("five frames with context 21 pad by repetition") {
    UtteranceSet s;
    s.num_classes = 2;
    s.feat_dim = 2;
    Utterance u{"a", Tensor(5, 2), {0, 1, 0, 1, 1}};
    for (std::size_t t = 0; t < 5; ++t) {
      u.frames(t, 0) = static_cast<float>(t);
      u.frames(t, 1) = static_cast<float>(10 + t);
    }
    s.utterances.push_back(u);
    const WindowDataset w = extract_windows(s, 21);
    REQUIRE(w.size() == 5);
    CHECK(w.width() == 42);
    for (std::size_t t = 0; t < 5; ++t)
      for (std::size_t j = 0; j < 21; ++j) {
        // Slot j holds frame clamp(t + j - 10, 0, 4).
        const long src = std::clamp<long>(static_cast<long>(t + j) - 10, 0, 4);
        CHECK(w.windows(t, 2 * j) == static_cast<float>(src));
        CHECK(w.windows(t, 2 * j + 1) == static_cast<float>(10 + src));
      }
    for (std::size_t j = 0; j < 10; ++j) CHECK(w.windows(0, 2 * j) == 0.0f);
  }

  TEST_CASE("window count equals total frames and the centre is the frame") {
    const UtteranceSet s = RandomSet(2, 12, 3, 4);
    std::size_t frames = 0;
    for (const auto &u : s.utterances) frames += u.labels.size();
    const WindowDataset w = extract_windows(s, 7);
    CHECK(w.size() == frames);
    CHECK(s.total_frames() == frames);
    std::size_t row = 0;
    for (const auto &u : s.utterances)
      for (std::size_t t = 0; t < u.frames.rows(); ++t, ++row)
        for (std::size_t k = 0; k < 3; ++k) CHECK(w.windows(row, 3 * 3 + k) == u.frames(t, k));
  }

  TEST_CASE("even context is a config error") {
    CHECK_THROWS_AS(extract_windows(RandomSet(1, 1, 2, 2), 4), ConfigError);
  }

  TEST_CASE("broken utterances are rejected") {
    UtteranceSet s = RandomSet(3, 2, 2, 3);
    s.utterances[1].labels.back() = 3;
    CHECK_THROWS_AS(s.Validate(), LabelError);
    s = RandomSet(3, 2, 2, 3);
    s.utterances[0].labels.pop_back();
    CHECK_THROWS_AS(s.Validate(), ShapeError);
  }
}

TEST_SUITE("dataset file") {
  TEST_CASE("randomised round trip is exact") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const UtteranceSet s = RandomSet(seed, 1 + seed * 3, 1 + seed, 2 + seed);
      CHECK(DecodeDataset(EncodeDataset(s)) == s);
    }
    const UtteranceSet s = RandomSet(9, 4, 5, 3);
    const std::string path = TempPath("rt.tcbd");
    save_dataset(path, s);
    CHECK(load_dataset(path) == s);
  }

  TEST_CASE("size follows the closed form and the header is literal") {
    UtteranceSet s;
    s.num_classes = 3;
    s.feat_dim = 2;
    s.utterances.push_back({"ab", Tensor{{1, 2}, {3, 4}, {5, 6}}, {0, 1, 2}});
    s.utterances.push_back({"c", Tensor{{7, 8}}, {2}});
    // header 4 + 4*4, then per utterance 4 + id + 4 + frames*(feat*4 + 4)
    const std::size_t want = 20 + (4 + 2 + 4 + 3 * 12) + (4 + 1 + 4 + 1 * 12);
    const auto bytes = EncodeDataset(s);
    CHECK(bytes.size() == want);
    const std::vector<std::uint8_t> head = {'T', 'C', 'B', 'D', 1, 0, 0, 0, 3, 0, 0, 0,
                                            2,   0,   0,   0,   2, 0, 0, 0};
    CHECK(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 20) == head);
    const std::string path = TempPath("size.tcbd");
    save_dataset(path, s);
    CHECK(fs::file_size(path) == want);
  }

  TEST_CASE("bad magic and version are format errors") {
    auto bytes = EncodeDataset(RandomSet(1, 2, 2, 2));
    auto bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(DecodeDataset(bad), FormatError);
    bad = bytes;
    bad[4] = 2;
    try {
      DecodeDataset(bad);
      FAIL("expected FormatError");
    } catch (const FormatError &e) {
      CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
  }

  TEST_CASE("truncation reports the byte offset of the missing field") {
    UtteranceSet s;
    s.num_classes = 2;
    s.feat_dim = 2;
    s.utterances.push_back({"abc", Tensor{{1, 2}, {3, 4}}, {0, 1}});
    const auto bytes = EncodeDataset(s);
    // Frames start after the header (20), id length (4), id (3), count (4).
    const std::size_t frames_at = 20 + 4 + 3 + 4;
    const std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + frames_at + 5);
    try {
      DecodeDataset(cut);
      FAIL("expected CorruptionError");
    } catch (const CorruptionError &e) {
      CHECK(e.offset() == frames_at);
      CHECK(std::string(e.what()).find("offset " + std::to_string(frames_at)) != std::string::npos);
    }
    for (std::size_t n = 0; n < bytes.size(); ++n)
      CHECK_THROWS_AS(DecodeDataset(std::span(bytes.data(), n)), UserError);
  }

  TEST_CASE("summary lists counts, dims and the histogram") {
    const UtteranceSet s = RandomSet(4, 3, 5, 3);
    const auto hist = LabelHistogram(s);
    REQUIRE(hist.size() == 3);
    std::size_t total = 0;
    for (auto h : hist) total += h;
    CHECK(total == s.total_frames());
    const std::string text = DatasetSummary(s);
    CHECK(text.find(std::to_string(s.total_frames())) != std::string::npos);
    CHECK(text.find("feat_dim") != std::string::npos);
  }
}

TEST_SUITE("synthetic") {
  TEST_CASE("same seed gives identical data, another seed differs") {
    SyntheticSpec s;
    s.train_utterances = 5;
    s.dev_utterances = 2;
    s.test_utterances = 2;
    const auto a = generate_synthetic(s), b = generate_synthetic(s);
    CHECK(EncodeDataset(a.train.utts) == EncodeDataset(b.train.utts));
    CHECK(EncodeDataset(a.test.utts) == EncodeDataset(b.test.utts));
    s.seed = 8;
    CHECK(!(generate_synthetic(s).train.utts == a.train.utts));
  }

  TEST_CASE("default spec shape and near-uniform training histogram") {
    const SyntheticData d = generate_synthetic({});
    CHECK(d.train.utts.utterances.size() == 200);
    CHECK(d.dev.utts.utterances.size() == 40);
    CHECK(d.test.utts.utterances.size() == 40);
    CHECK(d.train.utts.feat_dim == 16);
    CHECK(d.bin_edges.size() == 3);
    const auto hist = LabelHistogram(d.train.utts);
    const double n = static_cast<double>(d.train.utts.total_frames()) / 4.0;
    for (auto h : hist) CHECK(std::abs(static_cast<double>(h) - n) <= 0.1 * n);
  }

  TEST_CASE("labels are the quantile bucket of the latent slope") {
    const SyntheticData d = generate_synthetic({});
    CHECK(SlopeOracleAccuracy(d.train, d.bin_edges) == 1.0);
    CHECK(SlopeOracleAccuracy(d.dev, d.bin_edges) == 1.0);
    const auto &lat = d.dev.latents[0];
    for (std::size_t t : {0u, 3u, 100u, 199u})
      CHECK(BucketOf(LatentSlope(lat, t), d.bin_edges) == d.dev.utts.utterances[0].labels[t]);
  }

  TEST_CASE("centre frame alone falls at least 10 points short of the oracle") {
    const SyntheticData d = generate_synthetic({});
    const double level = LevelOnlyAccuracy(d, 40);
    MESSAGE("level-only accuracy " << level);
    CHECK(SlopeOracleAccuracy(d.dev, d.bin_edges) - level >= 0.10);
  }

  TEST_CASE("noise-free two-class task: a frame classifier is imperfect, the oracle is exact") {
    SyntheticSpec s;
    s.noise_sigma = 0;
    s.num_classes = 2;
    s.train_utterances = 60;
    s.dev_utterances = 20;
    const SyntheticData d = generate_synthetic(s);
    CHECK(SlopeOracleAccuracy(d.dev, d.bin_edges) == 1.0);
    ModelConfig c;
    c.variant = Variant::kDnn;
    c.num_classes = 2;
    c.tc = {1, 1, true};
    c.input_dnn_layers = {32};
    c.output_dnn_layers = {};
    c.dnn_init_std = 0.1;
    OptimConfig o;
    o.initial_lr = 1.0;
    o.decay = 0.7;
    o.max_epochs = 5;
    o.patience = 5;
    const auto train_w = extract_windows(d.train.utts, 1), dev_w = extract_windows(d.dev.utts, 1);
    const auto r = train(c, init_params(c), train_w, dev_w, o);
    const auto m = Evaluate(r.best, c, dev_w.windows, dev_w.targets);
    MESSAGE("single-frame accuracy " << m.accuracy);
    CHECK(m.accuracy < 1.0);
    CHECK(LevelOnlyAccuracy(d, 40) < 1.0);
  }

  TEST_CASE("degenerate specs are config errors") {
    SyntheticSpec s;
    s.utterance_length = 5;
    CHECK_THROWS_AS(generate_synthetic(s), ConfigError);
    s = {};
    s.num_classes = 1;
    CHECK_THROWS_AS(generate_synthetic(s), ConfigError);
    s = {};
    s.noise_sigma = -1;
    CHECK_THROWS_AS(generate_synthetic(s), ConfigError);
  }
}

TEST_SUITE("checkpoint") {
  ModelConfig SmallConfig(Variant v = Variant::kTcDnnBlstmDnn) {
    ModelConfig c;
    c.variant = v;
    c.cell_dim = 8;
    c.input_dnn_layers = {16};
    c.output_dnn_layers = {16};
    c.dnn_init_std = 0.1;
    c.lstm_init_range = 0.1;
    if (v == Variant::kDnn) c.output_dnn_layers = {};
    return c;
  }

  TEST_CASE("round trip is bitwise with and without a best copy") {
    const ModelConfig c = SmallConfig();
    const TrainState st{3, 0.025, 0.75, 1, 1234567890123ull};
    auto best = init_params(c);
    best.classifier.bias(0, 1) = 42.5f;
    const Checkpoint with{c, st, init_params(c), best};
    CHECK(DecodeCheckpoint(EncodeCheckpoint(with)) == with);
    const Checkpoint without{c, st, init_params(c), std::nullopt};
    const std::string path = TempPath("a.tckp");
    save_checkpoint(path, without);
    const Checkpoint back = load_checkpoint(path);
    CHECK(back == without);
    CHECK(back.params.Flatten() == without.params.Flatten());
    CHECK(ToResumePoint(back).best == back.params);
  }

  TEST_CASE("version mismatch names both versions") {
    auto bytes = EncodeCheckpoint({SmallConfig(), {}, init_params(SmallConfig()), std::nullopt});
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "TCKP");
    bytes[4] = 7;
    try {
      DecodeCheckpoint(bytes);
      FAIL("expected FormatError");
    } catch (const FormatError &e) {
      const std::string msg = e.what();
      CHECK(msg.find("7") != std::string::npos);
      CHECK(msg.find("1") != std::string::npos);
    }
    bytes[0] = 'Z';
    CHECK_THROWS_AS(DecodeCheckpoint(bytes), FormatError);
  }

  TEST_CASE("loading for another variant is a config error") {
    const std::string path = TempPath("b.tckp");
    save_checkpoint(path, {SmallConfig(), {}, init_params(SmallConfig()), std::nullopt});
    CHECK_NOTHROW(load_checkpoint(path, SmallConfig()));
    CHECK_THROWS_AS(load_checkpoint(path, SmallConfig(Variant::kDnnBlstmDnn)), ConfigError);
    ModelConfig wider = SmallConfig();
    wider.cell_dim = 9;
    CHECK_THROWS_AS(load_checkpoint(path, wider), ConfigError);
  }

  TEST_CASE("truncated checkpoint is a corruption error") {
    const auto bytes =
        EncodeCheckpoint({SmallConfig(), {}, init_params(SmallConfig()), std::nullopt});
    CHECK_THROWS_AS(DecodeCheckpoint(std::span(bytes.data(), bytes.size() - 3)), CorruptionError);
  }

  TEST_CASE("resuming reproduces the uninterrupted run's next log line") {
    SyntheticSpec spec;
    spec.train_utterances = 6;
    spec.dev_utterances = 2;
    const SyntheticData d = generate_synthetic(spec);
    for (Variant v : {Variant::kDnn, Variant::kTcDnnBlstmDnn}) {
      CAPTURE(VariantName(v));
      const ModelConfig c = SmallConfig(v);
      const auto tr = extract_windows(d.train.utts, c.tc.context_frames);
      const auto dv = extract_windows(d.dev.utts, c.tc.context_frames);
      OptimConfig o;
      o.initial_lr = 0.5;
      o.max_epochs = 3;
      o.patience = 10;

      const std::string path = TempPath("resume.tckp");
      const TrainResult full = train(
          c, init_params(c), tr, dv, o, nullptr,
          [&](const EpochLog &e, const TrainState &st, const ModelParams<float> &cur,
              const ModelParams<float> &best) {
            if (e.epoch == 2) save_checkpoint(path, {c, st, cur, best});
          });
      REQUIRE(full.log.size() == 3);

      const ResumePoint point = ToResumePoint(load_checkpoint(path, c));
      CHECK(point.state.epoch == 2);
      const TrainResult resumed = train(c, init_params(c), tr, dv, o, &point);
      REQUIRE(resumed.log.size() == 1);
      CHECK(DeterministicLogLine(resumed.log[0], false) ==
            DeterministicLogLine(full.log[2], false));
      CHECK(resumed.last == full.last);
      CHECK(resumed.best == full.best);
      CHECK(resumed.state == full.state);
    }
  }
}
