// include/tcblstm/checkpoint.h

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

#ifndef TCBLSTM_CHECKPOINT_H_
#define TCBLSTM_CHECKPOINT_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tcblstm/model.h"
#include "tcblstm/optimizer.h"

namespace tcblstm {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Layout, little-endian: "TCKP", u32 version, string model config text,
/// u32 epoch, f64 lr, f64 best_dev_loss, u32 epochs_since_improvement,
/// u64 rng_seed, params, u8 has_best, [best params]. Params are a u32 block
/// count followed by (string name, u32 rows, u32 cols, f32 data) per block.
struct Checkpoint {
  ModelConfig config;
  TrainState state;
  ModelParams<float> params;
  std::optional<ModelParams<float>> best;

  bool operator==(const Checkpoint &) const = default;
};

std::vector<std::uint8_t> EncodeCheckpoint(const Checkpoint &ckpt);
/// FormatError on bad magic or version, CorruptionError on truncation,
/// ShapeError if the stored blocks disagree with the stored config.
Checkpoint DecodeCheckpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::string &path, const Checkpoint &ckpt);
Checkpoint load_checkpoint(const std::string &path);
/// As above, but ConfigError unless the stored model matches `expected`.
Checkpoint load_checkpoint(const std::string &path, const ModelConfig &expected);

/// The ResumePoint a checkpoint encodes (best defaults to params).
ResumePoint ToResumePoint(const Checkpoint &ckpt);

}  // namespace tcblstm

#endif  // TCBLSTM_CHECKPOINT_H_
