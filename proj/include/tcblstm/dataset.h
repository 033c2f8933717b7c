// include/tcblstm/dataset.h

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

#ifndef TCBLSTM_DATASET_H_
#define TCBLSTM_DATASET_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tcblstm/tensor.h"

namespace tcblstm {

struct Utterance {
  std::string id;
  Tensor frames;                     // num_frames x feat_dim
  std::vector<std::int32_t> labels;  // one per frame

  bool operator==(const Utterance &) const = default;
};

struct UtteranceSet {
  std::size_t num_classes = 0;
  std::size_t feat_dim = 0;
  std::vector<Utterance> utterances;

  std::size_t total_frames() const;
  // Throws LabelError / ShapeError on a broken invariant.
  void Validate() const;

  bool operator==(const UtteranceSet &) const = default;
};

/// One centred context window per labelled frame.
struct WindowDataset {
  std::size_t context_frames = 0;
  std::size_t feat_dim = 0;
  std::size_t num_classes = 0;
  Tensor windows;                     // N x context_frames*feat_dim
  std::vector<std::int32_t> targets;  // N
  std::vector<std::pair<std::string, std::uint32_t>> provenance;

  std::size_t size() const { return targets.size(); }
  std::size_t width() const { return windows.cols(); }

  // Rows of `windows` / `targets` selected by index, in the given order.
  Tensor GatherWindows(std::span<const std::size_t> rows) const;
  std::vector<std::int32_t> GatherTargets(std::span<const std::size_t> rows) const;
};

/// Edges are padded by repeating the first/last frame. context_frames must be odd.
WindowDataset extract_windows(const UtteranceSet &utts, std::size_t context_frames);

// Binary dataset file: "TCBD", u32 version, u32 num_classes, u32 feat_dim,
// u32 utterance count, then per utterance: u32 id length, id bytes,
// u32 frame count, f32 frames (row-major), u32 labels. All little-endian.
inline constexpr std::uint32_t kDatasetVersion = 1;

void save_dataset(const std::string &path, const UtteranceSet &utts);
UtteranceSet load_dataset(const std::string &path);

std::vector<std::uint8_t> EncodeDataset(const UtteranceSet &utts);
UtteranceSet DecodeDataset(std::span<const std::uint8_t> bytes);

/// Human-readable counts, dims and label histogram.
std::string DatasetSummary(const UtteranceSet &utts);

std::vector<std::size_t> LabelHistogram(const UtteranceSet &utts);

}  // namespace tcblstm

#endif  // TCBLSTM_DATASET_H_
