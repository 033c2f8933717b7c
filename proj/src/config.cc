// src/config.cc

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

#include "tcblstm/config.h"

#include <charconv>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <vector>

#include "tcblstm/byte_io.h"

namespace tcblstm {

AsgdConfig RunConfig::Asgd() const {
  AsgdConfig a = asgd;
  a.optim = optim;
  return a;
}

namespace {

std::string Trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Parse helpers throw std::invalid_argument; the caller adds key and line.
template <typename T>
T ParseInt(const std::string &v) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw std::invalid_argument("expected a non-negative integer, got '" + v + "'");
  return out;
}

double ParseDouble(const std::string &v) {
  std::size_t used = 0;
  double d;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (used == 0 || used != v.size())
    throw std::invalid_argument("expected a number, got '" + v + "'");
  return d;
}

bool ParseBool(const std::string &v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("expected true or false, got '" + v + "'");
}

std::vector<std::size_t> ParseList(const std::string &v) {
  std::vector<std::size_t> out;
  if (v.empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(ParseInt<std::size_t>(Trim(item)));
  return out;
}

std::string Num(double d) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", d);
  return buf;
}

std::string List(const std::vector<std::size_t> &v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + std::to_string(v[k]);
  return s;
}

struct Key {
  std::string name;
  std::function<void(RunConfig &, const std::string &)> set;
  std::function<std::string(const RunConfig &)> get;
};

#define TCB_SIZE(key, field)                                                     \
  Key {                                                                          \
    key, [](RunConfig &c, const std::string &v) { c.field = ParseInt<std::size_t>(v); }, \
        [](const RunConfig &c) { return std::to_string(c.field); }              \
  }
#define TCB_U64(key, field)                                                        \
  Key {                                                                            \
    key, [](RunConfig &c, const std::string &v) { c.field = ParseInt<std::uint64_t>(v); }, \
        [](const RunConfig &c) { return std::to_string(c.field); }                \
  }
#define TCB_REAL(key, field)                                                    \
  Key {                                                                         \
    key, [](RunConfig &c, const std::string &v) { c.field = ParseDouble(v); }, \
        [](const RunConfig &c) { return Num(c.field); }                        \
  }
#define TCB_BOOL(key, field)                                                  \
  Key {                                                                       \
    key, [](RunConfig &c, const std::string &v) { c.field = ParseBool(v); }, \
        [](const RunConfig &c) { return std::string(c.field ? "true" : "false"); } \
  }
#define TCB_LIST(key, field)                                                  \
  Key {                                                                       \
    key, [](RunConfig &c, const std::string &v) { c.field = ParseList(v); }, \
        [](const RunConfig &c) { return List(c.field); }                     \
  }

const std::vector<Key> &Keys() {
  static const std::vector<Key> keys = {
      Key{"model.variant",
          [](RunConfig &c, const std::string &v) { c.model.variant = ParseVariant(v); },
          [](const RunConfig &c) { return VariantName(c.model.variant); }},
      TCB_LIST("model.input_dnn", model.input_dnn_layers),
      TCB_SIZE("model.cell_dim", model.cell_dim),
      TCB_SIZE("model.blstm_layers", model.blstm_layers),
      TCB_LIST("model.output_dnn", model.output_dnn_layers),
      TCB_SIZE("model.num_classes", model.num_classes),
      TCB_SIZE("model.feat_dim", model.feat_dim),
      TCB_SIZE("model.context_frames", model.tc.context_frames),
      TCB_SIZE("model.tc_width", model.tc.tc_width),
      TCB_BOOL("model.tied_columns", model.tc.tied_columns),
      TCB_U64("model.seed", model.seed),
      TCB_REAL("model.lstm_init_range", model.lstm_init_range),
      TCB_REAL("model.dnn_init_std", model.dnn_init_std),
      TCB_REAL("model.cell_clip", model.cell_clip),
      TCB_REAL("optim.initial_lr", optim.initial_lr),
      TCB_REAL("optim.decay", optim.decay),
      TCB_REAL("optim.lr_floor", optim.lr_floor),
      TCB_SIZE("optim.minibatch", optim.minibatch),
      TCB_REAL("optim.momentum", optim.momentum),
      TCB_SIZE("optim.patience", optim.patience),
      TCB_SIZE("optim.max_epochs", optim.max_epochs),
      TCB_SIZE("optim.threads", optim.threads),
      TCB_U64("optim.seed", optim.seed),
      TCB_SIZE("asgd.num_shards", asgd.num_shards),
      TCB_BOOL("asgd.synchronous", asgd.synchronous),
      Key{"asgd.transport",
          [](RunConfig &c, const std::string &v) {
            if (v == "inprocess")
              c.asgd.transport = Transport::kInProcess;
            else if (v == "socket")
              c.asgd.transport = Transport::kSocket;
            else
              throw std::invalid_argument("expected inprocess or socket, got '" + v + "'");
          },
          [](const RunConfig &c) {
            return std::string(c.asgd.transport == Transport::kSocket ? "socket"
                                                                       : "inprocess");
          }},
      TCB_SIZE("asgd.fetch_retries", asgd.fetch_retries),
      TCB_SIZE("data.num_classes", data.num_classes),
      TCB_SIZE("data.feat_dim", data.feat_dim),
      TCB_SIZE("data.utterance_length", data.utterance_length),
      TCB_SIZE("data.train_utterances", data.train_utterances),
      TCB_SIZE("data.dev_utterances", data.dev_utterances),
      TCB_SIZE("data.test_utterances", data.test_utterances),
      TCB_REAL("data.noise_sigma", data.noise_sigma),
      TCB_SIZE("data.latent_smoothing", data.latent_smoothing),
      TCB_U64("data.seed", data.seed),
      Key{"data.dir", [](RunConfig &c, const std::string &v) { c.data_dir = v; },
          [](const RunConfig &c) { return c.data_dir; }},
  };
  return keys;
}

#undef TCB_SIZE
#undef TCB_U64
#undef TCB_REAL
#undef TCB_BOOL
#undef TCB_LIST

const Key *FindKey(const std::string &name) {
  for (const auto &k : Keys())
    if (k.name == name) return &k;
  return nullptr;
}

// Applies the lines of `text` to `config`; `allowed_prefix` restricts keys.
void Apply(const std::string &text, const std::string &allowed_prefix, RunConfig *config) {
  std::stringstream ss(text);
  std::string raw;
  std::set<std::string> seen;
  for (std::size_t line_no = 1; std::getline(ss, raw); ++line_no) {
    const auto hash = raw.find('#');
    const std::string line = Trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = " at line " + std::to_string(line_no);
    if (eq == std::string::npos)
      throw ConfigError("expected key = value" + where + ", got '" + line + "'");
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    const Key *k = FindKey(key);
    if (!k || key.rfind(allowed_prefix, 0) != 0)
      throw ConfigError("unknown config key '" + key + "'" + where);
    if (!seen.insert(key).second)
      throw ConfigError("duplicate config key '" + key + "'" + where);
    try {
      k->set(*config, value);
    } catch (const std::invalid_argument &e) {
      throw ConfigError("bad value for '" + key + "'" + where + ": " + e.what());
    } catch (const ConfigError &e) {
      throw ConfigError("bad value for '" + key + "'" + where + ": " + e.what());
    }
  }
}

std::string Format(const RunConfig &config, const std::string &prefix) {
  std::string out;
  for (const auto &k : Keys())
    if (k.name.rfind(prefix, 0) == 0) out += k.name + " = " + k.get(config) + "\n";
  return out;
}

}  // namespace

RunConfig ParseConfig(const std::string &text) {
  RunConfig c;
  Apply(text, "", &c);
  return c;
}

RunConfig LoadConfig(const std::string &path) {
  const auto bytes = ReadFileBytes(path);
  return ParseConfig(std::string(bytes.begin(), bytes.end()));
}

std::string FormatConfig(const RunConfig &config) { return Format(config, ""); }

std::string FormatModelConfig(const ModelConfig &config) {
  RunConfig c;
  c.model = config;
  return Format(c, "model.");
}

ModelConfig ParseModelConfig(const std::string &text) {
  RunConfig c;
  Apply(text, "model.", &c);
  return c.model;
}

}  // namespace tcblstm
