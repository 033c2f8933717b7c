// include/tcblstm/wire.h

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

#ifndef TCBLSTM_WIRE_H_
#define TCBLSTM_WIRE_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tcblstm/model.h"

namespace tcblstm {

// Framed byte protocol shared by the parameter server and its shards:
//   u32 frame length (bytes that follow), u8 message type,
//   u64 version or step stamp, u32 block count,
//   per block: u32 name length, name bytes, u32 rows, u32 cols, f32 data.
// All fields little-endian.
enum class MessageType : std::uint8_t { kFetch = 0, kSnapshot = 1, kGradient = 2 };

struct WireBlock {
  std::string name;
  Tensor tensor;
  bool operator==(const WireBlock &) const = default;
};

struct Frame {
  MessageType type = MessageType::kFetch;
  std::uint64_t stamp = 0;
  std::vector<WireBlock> blocks;
  bool operator==(const Frame &) const = default;
};

/// The full frame including its length prefix.
std::vector<std::uint8_t> EncodeFrame(const Frame &frame);

/// Decodes exactly one frame. FormatError on an unknown type or a length
/// that disagrees with the payload, CorruptionError on truncation.
Frame DecodeFrame(std::span<const std::uint8_t> bytes);

struct ParamSnapshot {
  std::uint64_t version = 0;
  ModelParams<float> params;
  double lr = 0;
};

struct GradMessage {
  std::uint32_t shard_id = 0;
  std::uint64_t step_stamp = 0;
  ModelParams<float> grads;
  float loss = 0;
  std::uint32_t rows = 0;  // minibatch size behind `loss`
};

// Metadata travels as trailing 1 x n blocks so the frame layout stays
// uniform: "lr" [lr] on snapshots, "meta" [shard_id, loss, rows] on gradients.
Frame SnapshotFrame(const ParamSnapshot &snapshot);
Frame GradientFrame(const GradMessage &msg);
Frame FetchFrame(std::uint32_t shard_id);

/// Inverse conversions; `shape` supplies the expected block layout and any
/// disagreement raises ProtocolError.
ParamSnapshot SnapshotFromFrame(const Frame &frame, const ModelParams<float> &shape);
GradMessage GradientFromFrame(const Frame &frame, const ModelParams<float> &shape);

/// Blocking frame I/O on a stream socket. ProtocolError when the peer has
/// closed or the read fails.
void SendFrame(int fd, const Frame &frame);
Frame ReceiveFrame(int fd);

}  // namespace tcblstm

#endif  // TCBLSTM_WIRE_H_
