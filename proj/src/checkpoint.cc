// src/checkpoint.cc

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

#include "tcblstm/checkpoint.h"

#include "tcblstm/byte_io.h"
#include "tcblstm/config.h"

namespace tcblstm {

namespace {

void WriteParams(const ModelParams<float> &params, ByteWriter *w) {
  const auto blocks = params.Blocks();
  w->U32(static_cast<std::uint32_t>(blocks.size()));
  for (const auto &b : blocks) {
    w->String(b.name);
    w->U32(static_cast<std::uint32_t>(b.tensor->rows()));
    w->U32(static_cast<std::uint32_t>(b.tensor->cols()));
    w->F32Array(b.tensor->data());
  }
}

ModelParams<float> ReadParams(const ModelConfig &config, ByteReader *r) {
  ModelParams<float> params = ShapeParams<float>(config);
  auto blocks = params.Blocks();
  const std::size_t at = r->offset();
  const std::uint32_t count = r->U32();
  if (count != blocks.size())
    throw ShapeError("checkpoint holds " + std::to_string(count) +
                     " parameter blocks at byte offset " + std::to_string(at) +
                     ", its config implies " + std::to_string(blocks.size()));
  for (auto &b : blocks) {
    const std::string name = r->String();
    const std::uint32_t rows = r->U32(), cols = r->U32();
    if (name != b.name || rows != b.tensor->rows() || cols != b.tensor->cols())
      throw ShapeError("checkpoint block " + name + " " + std::to_string(rows) + "x" +
                       std::to_string(cols) + " does not match " + b.name + " " +
                       b.tensor->ShapeString());
    r->F32Array(b.tensor->data());
  }
  return params;
}

}  // namespace

std::vector<std::uint8_t> EncodeCheckpoint(const Checkpoint &ckpt) {
  ByteWriter w;
  w.Bytes("TCKP", 4);
  w.U32(kCheckpointVersion);
  w.String(FormatModelConfig(ckpt.config));
  w.U32(ckpt.state.epoch);
  w.F64(ckpt.state.lr);
  w.F64(ckpt.state.best_dev_loss);
  w.U32(ckpt.state.epochs_since_improvement);
  w.U64(ckpt.state.rng_seed);
  WriteParams(ckpt.params, &w);
  w.U8(ckpt.best ? 1 : 0);
  if (ckpt.best) WriteParams(*ckpt.best, &w);
  return w.Take();
}

Checkpoint DecodeCheckpoint(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.remaining() < 4 || r.Fixed(4) != "TCKP")
    throw FormatError("not a checkpoint file (bad magic)");
  const std::uint32_t version = r.U32();
  if (version != kCheckpointVersion)
    throw FormatError("checkpoint format version " + std::to_string(version) +
                      " is not supported (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  Checkpoint c;
  c.config = ParseModelConfig(r.String());
  c.config.Validate();
  c.state.epoch = r.U32();
  c.state.lr = r.F64();
  c.state.best_dev_loss = r.F64();
  c.state.epochs_since_improvement = r.U32();
  c.state.rng_seed = r.U64();
  c.params = ReadParams(c.config, &r);
  const std::uint8_t has_best = r.U8();
  if (has_best > 1)
    throw FormatError("bad best-params flag " + std::to_string(has_best));
  if (has_best) c.best = ReadParams(c.config, &r);
  if (r.remaining() != 0)
    throw FormatError(std::to_string(r.remaining()) + " trailing bytes after checkpoint");
  return c;
}

void save_checkpoint(const std::string &path, const Checkpoint &ckpt) {
  WriteFileBytes(path, EncodeCheckpoint(ckpt));
}

Checkpoint load_checkpoint(const std::string &path) {
  return DecodeCheckpoint(ReadFileBytes(path));
}

Checkpoint load_checkpoint(const std::string &path, const ModelConfig &expected) {
  Checkpoint c = load_checkpoint(path);
  if (c.config.variant != expected.variant)
    throw ConfigError("checkpoint '" + path + "' holds variant " +
                      VariantName(c.config.variant) + ", requested " +
                      VariantName(expected.variant));
  if (!(c.config == expected))
    throw ConfigError("checkpoint '" + path +
                      "' was trained with a different model configuration");
  return c;
}

ResumePoint ToResumePoint(const Checkpoint &ckpt) {
  return {ckpt.state, ckpt.params, ckpt.best ? *ckpt.best : ckpt.params};
}

}  // namespace tcblstm
