// include/tcblstm/synthetic.h

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

#ifndef TCBLSTM_SYNTHETIC_H_
#define TCBLSTM_SYNTHETIC_H_

#include <cstdint>
#include <vector>

#include "tcblstm/dataset.h"

namespace tcblstm {

/// Desk-scale temporal classification task. Each utterance follows a hidden
/// smooth latent path; a frame's label is the quantile bucket of the latent's
/// slope over +/-5 frames, while the observed features only encode the
/// latent's current level (a sinusoid bank plus noise). A single frame is
/// therefore ambiguous and the label is recoverable only from context.
struct SyntheticSpec {
  std::size_t num_classes = 4;
  std::size_t feat_dim = 16;
  std::size_t utterance_length = 200;
  std::size_t train_utterances = 200;
  std::size_t dev_utterances = 40;
  std::size_t test_utterances = 40;
  double noise_sigma = 0.5;
  std::size_t latent_smoothing = 11;
  std::uint64_t seed = 7;

  void Validate() const;  // ConfigError on degenerate settings
  bool operator==(const SyntheticSpec &) const = default;
};

inline constexpr std::size_t kSlopeHalfSpan = 5;

struct SyntheticSplit {
  UtteranceSet utts;
  std::vector<std::vector<double>> latents;  // hidden path per utterance
};

struct SyntheticData {
  SyntheticSplit train, dev, test;
  std::vector<double> bin_edges;  // num_classes - 1 interior edges, from train
};

SyntheticData generate_synthetic(const SyntheticSpec &spec);

/// Local slope of a latent path at frame t (difference across +/-5 frames,
/// truncated at the utterance edges).
double LatentSlope(const std::vector<double> &latent, std::size_t t);

/// Quantile bucket of a slope given the interior edges.
std::int32_t BucketOf(double slope, const std::vector<double> &edges);

}  // namespace tcblstm

#endif  // TCBLSTM_SYNTHETIC_H_
