// src/dataset.cc

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

#include "tcblstm/dataset.h"

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "tcblstm/byte_io.h"

namespace tcblstm {

std::vector<std::uint8_t> ReadFileBytes(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "': " + std::strerror(errno));
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void WriteFileBytes(const std::string &path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path + "': " + std::strerror(errno));
  out.write(reinterpret_cast<const char *>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("write to '" + path + "' failed");
}

std::size_t UtteranceSet::total_frames() const {
  std::size_t n = 0;
  for (const auto &u : utterances) n += u.frames.rows();
  return n;
}

void UtteranceSet::Validate() const {
  for (const auto &u : utterances) {
    if (u.frames.cols() != feat_dim)
      throw ShapeError("utterance '" + u.id + "' has " +
                       std::to_string(u.frames.cols()) + " features, expected " +
                       std::to_string(feat_dim));
    if (u.labels.size() != u.frames.rows())
      throw ShapeError("utterance '" + u.id + "' has " +
                       std::to_string(u.labels.size()) + " labels for " +
                       std::to_string(u.frames.rows()) + " frames");
    for (std::size_t t = 0; t < u.labels.size(); ++t)
      if (u.labels[t] < 0 || static_cast<std::size_t>(u.labels[t]) >= num_classes)
        throw LabelError("utterance '" + u.id + "' frame " + std::to_string(t) +
                         " has label " + std::to_string(u.labels[t]) +
                         " outside [0, " + std::to_string(num_classes) + ")");
  }
}

Tensor WindowDataset::GatherWindows(std::span<const std::size_t> rows) const {
  Tensor out(rows.size(), windows.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    auto src = windows.row(rows[k]);
    std::copy(src.begin(), src.end(), out.row(k).begin());
  }
  return out;
}

std::vector<std::int32_t> WindowDataset::GatherTargets(
    std::span<const std::size_t> rows) const {
  std::vector<std::int32_t> out(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) out[k] = targets.at(rows[k]);
  return out;
}

WindowDataset extract_windows(const UtteranceSet &utts, std::size_t context_frames) {
  if (context_frames == 0 || context_frames % 2 == 0)
    throw ConfigError("extract_windows: context_frames must be odd, got " +
                      std::to_string(context_frames));
  utts.Validate();
  const std::size_t feat = utts.feat_dim;
  const std::size_t half = context_frames / 2;
  WindowDataset ds;
  ds.context_frames = context_frames;
  ds.feat_dim = feat;
  ds.num_classes = utts.num_classes;
  ds.windows = Tensor(utts.total_frames(), context_frames * feat);
  ds.targets.reserve(utts.total_frames());
  ds.provenance.reserve(utts.total_frames());
  std::size_t row = 0;
  for (const auto &u : utts.utterances) {
    const std::size_t n = u.frames.rows();
    for (std::size_t center = 0; center < n; ++center, ++row) {
      auto dst = ds.windows.row(row);
      for (std::size_t k = 0; k < context_frames; ++k) {
        const std::ptrdiff_t want = static_cast<std::ptrdiff_t>(center + k) -
                                    static_cast<std::ptrdiff_t>(half);
        const std::size_t src = static_cast<std::size_t>(
            std::clamp<std::ptrdiff_t>(want, 0, static_cast<std::ptrdiff_t>(n) - 1));
        auto f = u.frames.row(src);
        std::copy(f.begin(), f.end(), dst.begin() + k * feat);
      }
      ds.targets.push_back(u.labels[center]);
      ds.provenance.emplace_back(u.id, static_cast<std::uint32_t>(center));
    }
  }
  return ds;
}

std::vector<std::uint8_t> EncodeDataset(const UtteranceSet &utts) {
  utts.Validate();
  ByteWriter w;
  w.Bytes("TCBD", 4);
  w.U32(kDatasetVersion);
  w.U32(static_cast<std::uint32_t>(utts.num_classes));
  w.U32(static_cast<std::uint32_t>(utts.feat_dim));
  w.U32(static_cast<std::uint32_t>(utts.utterances.size()));
  for (const auto &u : utts.utterances) {
    w.String(u.id);
    w.U32(static_cast<std::uint32_t>(u.frames.rows()));
    w.F32Array(u.frames.data());
    for (std::int32_t l : u.labels) w.U32(static_cast<std::uint32_t>(l));
  }
  return w.Take();
}

UtteranceSet DecodeDataset(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const std::string magic = r.Fixed(4);
  if (magic != "TCBD") throw FormatError("not a dataset file (bad magic)");
  const std::uint32_t version = r.U32();
  if (version != kDatasetVersion)
    throw FormatError("dataset version " + std::to_string(version) +
                      " unsupported (expected " + std::to_string(kDatasetVersion) +
                      ")");
  UtteranceSet set;
  set.num_classes = r.U32();
  set.feat_dim = r.U32();
  const std::uint32_t count = r.U32();
  for (std::uint32_t k = 0; k < count; ++k) {
    Utterance u;
    u.id = r.String();
    const std::uint32_t frames = r.U32();
    const std::size_t values = static_cast<std::size_t>(frames) * set.feat_dim;
    if (values * 4 > r.remaining())
      throw CorruptionError("truncated frames for utterance '" + u.id + "'",
                            r.offset());
    u.frames = Tensor(frames, set.feat_dim);
    r.F32Array(u.frames.data());
    u.labels.resize(frames);
    for (auto &l : u.labels) l = static_cast<std::int32_t>(r.U32());
    set.utterances.push_back(std::move(u));
  }
  if (r.remaining() != 0)
    throw CorruptionError("trailing bytes after dataset", r.offset());
  set.Validate();
  return set;
}

void save_dataset(const std::string &path, const UtteranceSet &utts) {
  WriteFileBytes(path, EncodeDataset(utts));
}

UtteranceSet load_dataset(const std::string &path) {
  return DecodeDataset(ReadFileBytes(path));
}

std::vector<std::size_t> LabelHistogram(const UtteranceSet &utts) {
  std::vector<std::size_t> h(utts.num_classes, 0);
  for (const auto &u : utts.utterances)
    for (std::int32_t l : u.labels) ++h.at(static_cast<std::size_t>(l));
  return h;
}

std::string DatasetSummary(const UtteranceSet &utts) {
  std::ostringstream os;
  os << "utterances\t" << utts.utterances.size() << "\n"
     << "frames\t" << utts.total_frames() << "\n"
     << "feat_dim\t" << utts.feat_dim << "\n"
     << "num_classes\t" << utts.num_classes << "\n";
  auto h = LabelHistogram(utts);
  for (std::size_t c = 0; c < h.size(); ++c)
    os << "label_" << c << "\t" << h[c] << "\n";
  return os.str();
}

}  // namespace tcblstm
