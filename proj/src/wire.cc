// src/wire.cc

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

#include "tcblstm/wire.h"

#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "tcblstm/byte_io.h"

namespace tcblstm {

std::vector<std::uint8_t> EncodeFrame(const Frame &frame) {
  ByteWriter body;
  body.U8(static_cast<std::uint8_t>(frame.type));
  body.U64(frame.stamp);
  body.U32(static_cast<std::uint32_t>(frame.blocks.size()));
  for (const auto &b : frame.blocks) {
    body.String(b.name);
    body.U32(static_cast<std::uint32_t>(b.tensor.rows()));
    body.U32(static_cast<std::uint32_t>(b.tensor.cols()));
    body.F32Array(b.tensor.data());
  }
  ByteWriter out;
  out.U32(static_cast<std::uint32_t>(body.bytes().size()));
  out.Bytes(body.bytes().data(), body.bytes().size());
  return out.Take();
}

Frame DecodeFrame(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const std::uint32_t length = r.U32();
  if (length != r.remaining())
    throw FormatError("frame length field says " + std::to_string(length) +
                      " bytes but " + std::to_string(r.remaining()) + " follow");
  Frame f;
  const std::uint8_t type = r.U8();
  if (type > 2) throw FormatError("unknown message type " + std::to_string(type));
  f.type = static_cast<MessageType>(type);
  f.stamp = r.U64();
  const std::uint32_t count = r.U32();
  for (std::uint32_t k = 0; k < count; ++k) {
    WireBlock b;
    b.name = r.String();
    const std::uint32_t rows = r.U32(), cols = r.U32();
    const std::uint64_t n = static_cast<std::uint64_t>(rows) * cols;
    if (n * 4 > r.remaining())
      throw CorruptionError("block " + b.name + " needs " + std::to_string(n * 4) +
                                " bytes",
                            r.offset());
    b.tensor = Tensor(rows, cols);
    r.F32Array(b.tensor.data());
    f.blocks.push_back(std::move(b));
  }
  if (r.remaining() != 0)
    throw FormatError(std::to_string(r.remaining()) + " trailing bytes in frame");
  return f;
}

namespace {

void AppendParams(const ModelParams<float> &params, Frame *f) {
  for (const auto &b : params.Blocks()) f->blocks.push_back({b.name, *b.tensor});
}

// Copies the leading blocks of `frame` into a params object shaped like
// `shape`; returns the index of the first unconsumed block.
std::size_t FillParams(const Frame &frame, const ModelParams<float> &shape,
                       ModelParams<float> *out) {
  *out = shape.ZerosLike();
  auto blocks = out->Blocks();
  if (frame.blocks.size() < blocks.size())
    throw ProtocolError("message has " + std::to_string(frame.blocks.size()) +
                        " blocks, model has " + std::to_string(blocks.size()));
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const WireBlock &w = frame.blocks[k];
    if (w.name != blocks[k].name || !w.tensor.SameShape(*blocks[k].tensor))
      throw ProtocolError("block " + std::to_string(k) + " is " + w.name + " " +
                          w.tensor.ShapeString() + ", expected " + blocks[k].name +
                          " " + blocks[k].tensor->ShapeString());
    *blocks[k].tensor = w.tensor;
  }
  return blocks.size();
}

const WireBlock &Trailer(const Frame &frame, std::size_t index, const char *name,
                         std::size_t cols) {
  if (frame.blocks.size() != index + 1 || frame.blocks[index].name != name ||
      frame.blocks[index].tensor.rows() != 1 ||
      frame.blocks[index].tensor.cols() != cols)
    throw ProtocolError(std::string("missing or malformed trailing block ") + name);
  return frame.blocks[index];
}

}  // namespace

Frame SnapshotFrame(const ParamSnapshot &snapshot) {
  Frame f;
  f.type = MessageType::kSnapshot;
  f.stamp = snapshot.version;
  AppendParams(snapshot.params, &f);
  f.blocks.push_back({"lr", Tensor({{static_cast<float>(snapshot.lr)}})});
  return f;
}

Frame GradientFrame(const GradMessage &msg) {
  Frame f;
  f.type = MessageType::kGradient;
  f.stamp = msg.step_stamp;
  AppendParams(msg.grads, &f);
  f.blocks.push_back({"meta", Tensor({{static_cast<float>(msg.shard_id), msg.loss,
                                       static_cast<float>(msg.rows)}})});
  return f;
}

Frame FetchFrame(std::uint32_t shard_id) {
  Frame f;
  f.type = MessageType::kFetch;
  f.stamp = shard_id;
  return f;
}

ParamSnapshot SnapshotFromFrame(const Frame &frame, const ModelParams<float> &shape) {
  if (frame.type != MessageType::kSnapshot)
    throw ProtocolError("expected a snapshot message");
  ParamSnapshot s;
  s.version = frame.stamp;
  const std::size_t next = FillParams(frame, shape, &s.params);
  s.lr = Trailer(frame, next, "lr", 1).tensor(0, 0);
  return s;
}

GradMessage GradientFromFrame(const Frame &frame, const ModelParams<float> &shape) {
  if (frame.type != MessageType::kGradient)
    throw ProtocolError("expected a gradient message");
  GradMessage m;
  m.step_stamp = frame.stamp;
  const std::size_t next = FillParams(frame, shape, &m.grads);
  const Tensor &meta = Trailer(frame, next, "meta", 3).tensor;
  m.shard_id = static_cast<std::uint32_t>(meta(0, 0));
  m.loss = meta(0, 1);
  m.rows = static_cast<std::uint32_t>(meta(0, 2));
  return m;
}

namespace {

void WriteAll(int fd, const std::uint8_t *p, std::size_t n) {
  while (n > 0) {
    const ssize_t k = ::send(fd, p, n, MSG_NOSIGNAL);
    if (k < 0 && errno == EINTR) continue;
    if (k <= 0)
      throw ProtocolError(std::string("socket send failed: ") + std::strerror(errno));
    p += k;
    n -= static_cast<std::size_t>(k);
  }
}

void ReadAll(int fd, std::uint8_t *p, std::size_t n) {
  while (n > 0) {
    const ssize_t k = ::recv(fd, p, n, 0);
    if (k < 0 && errno == EINTR) continue;
    if (k == 0) throw ProtocolError("peer closed the connection");
    if (k < 0)
      throw ProtocolError(std::string("socket receive failed: ") + std::strerror(errno));
    p += k;
    n -= static_cast<std::size_t>(k);
  }
}

}  // namespace

void SendFrame(int fd, const Frame &frame) {
  const auto bytes = EncodeFrame(frame);
  WriteAll(fd, bytes.data(), bytes.size());
}

Frame ReceiveFrame(int fd) {
  std::vector<std::uint8_t> bytes(4);
  ReadAll(fd, bytes.data(), 4);
  std::uint32_t length;
  std::memcpy(&length, bytes.data(), 4);
  bytes.resize(4 + static_cast<std::size_t>(length));
  ReadAll(fd, bytes.data() + 4, length);
  return DecodeFrame(bytes);
}

}  // namespace tcblstm
