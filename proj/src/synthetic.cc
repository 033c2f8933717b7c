// src/synthetic.cc

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

#include "tcblstm/synthetic.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace tcblstm {

namespace {

// Random-walk increment scale and sinusoid frequency band. Chosen so that a
// +/-5 frame slope spans a few radians of phase in the fastest channels.
constexpr double kStepStd = 0.35;
constexpr double kMinFreq = 0.5;
constexpr double kMaxFreq = 2.5;

struct Bank {
  std::vector<double> freq, phase;
};

std::vector<double> DrawLatent(std::size_t length, std::size_t smoothing,
                               std::mt19937_64 &rng) {
  std::normal_distribution<double> step(0.0, kStepStd);
  std::vector<double> walk(length + smoothing - 1);
  double z = 0;
  for (auto &w : walk) {
    z += step(rng);
    w = z;
  }
  std::vector<double> latent(length);
  double window = 0;
  for (std::size_t k = 0; k < smoothing; ++k) window += walk[k];
  for (std::size_t t = 0; t < length; ++t) {
    latent[t] = window / static_cast<double>(smoothing);
    if (t + smoothing < walk.size()) window += walk[t + smoothing] - walk[t];
  }
  return latent;
}

SyntheticSplit DrawSplit(const SyntheticSpec &spec, const Bank &bank,
                         std::size_t count, const char *prefix,
                         std::mt19937_64 &rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  SyntheticSplit split;
  split.utts.num_classes = spec.num_classes;
  split.utts.feat_dim = spec.feat_dim;
  for (std::size_t u = 0; u < count; ++u) {
    std::vector<double> latent =
        DrawLatent(spec.utterance_length, spec.latent_smoothing, rng);
    Utterance utt;
    utt.id = std::string(prefix) + "_" + std::to_string(u);
    utt.frames = Tensor(spec.utterance_length, spec.feat_dim);
    for (std::size_t t = 0; t < spec.utterance_length; ++t)
      for (std::size_t k = 0; k < spec.feat_dim; ++k)
        utt.frames(t, k) = static_cast<float>(
            std::sin(bank.freq[k] * latent[t] + bank.phase[k]) +
            spec.noise_sigma * noise(rng));
    utt.labels.assign(spec.utterance_length, 0);
    split.utts.utterances.push_back(std::move(utt));
    split.latents.push_back(std::move(latent));
  }
  return split;
}

void Label(SyntheticSplit *split, const std::vector<double> &edges) {
  for (std::size_t u = 0; u < split->latents.size(); ++u) {
    auto &labels = split->utts.utterances[u].labels;
    for (std::size_t t = 0; t < labels.size(); ++t)
      labels[t] = BucketOf(LatentSlope(split->latents[u], t), edges);
  }
}

}  // namespace

void SyntheticSpec::Validate() const {
  if (num_classes < 2)
    throw ConfigError("data.num_classes must be >= 2, got " +
                      std::to_string(num_classes));
  if (feat_dim == 0) throw ConfigError("data.feat_dim must be positive");
  if (!(noise_sigma >= 0))
    throw ConfigError("data.noise_sigma must be >= 0");
  if (latent_smoothing == 0)
    throw ConfigError("data.latent_smoothing must be positive");
  if (utterance_length < latent_smoothing)
    throw ConfigError("data.utterance_length (" + std::to_string(utterance_length) +
                      ") is shorter than data.latent_smoothing (" +
                      std::to_string(latent_smoothing) + ")");
  if (train_utterances == 0)
    throw ConfigError("data.train_utterances must be positive");
}

double LatentSlope(const std::vector<double> &latent, std::size_t t) {
  const std::size_t lo = t >= kSlopeHalfSpan ? t - kSlopeHalfSpan : 0;
  const std::size_t hi = std::min(t + kSlopeHalfSpan, latent.size() - 1);
  return latent[hi] - latent[lo];
}

std::int32_t BucketOf(double slope, const std::vector<double> &edges) {
  return static_cast<std::int32_t>(
      std::upper_bound(edges.begin(), edges.end(), slope) - edges.begin());
}

SyntheticData generate_synthetic(const SyntheticSpec &spec) {
  spec.Validate();
  std::mt19937_64 rng(spec.seed);
  Bank bank;
  std::uniform_real_distribution<double> freq(kMinFreq, kMaxFreq);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  for (std::size_t k = 0; k < spec.feat_dim; ++k) {
    bank.freq.push_back(freq(rng));
    bank.phase.push_back(phase(rng));
  }

  SyntheticData data;
  data.train = DrawSplit(spec, bank, spec.train_utterances, "train", rng);
  data.dev = DrawSplit(spec, bank, spec.dev_utterances, "dev", rng);
  data.test = DrawSplit(spec, bank, spec.test_utterances, "test", rng);

  std::vector<double> slopes;
  for (const auto &latent : data.train.latents)
    for (std::size_t t = 0; t < latent.size(); ++t)
      slopes.push_back(LatentSlope(latent, t));
  std::sort(slopes.begin(), slopes.end());
  for (std::size_t c = 1; c < spec.num_classes; ++c)
    data.bin_edges.push_back(slopes[c * slopes.size() / spec.num_classes]);

  Label(&data.train, data.bin_edges);
  Label(&data.dev, data.bin_edges);
  Label(&data.test, data.bin_edges);
  return data;
}

}  // namespace tcblstm
