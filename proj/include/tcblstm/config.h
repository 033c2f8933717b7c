// include/tcblstm/config.h

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

#ifndef TCBLSTM_CONFIG_H_
#define TCBLSTM_CONFIG_H_

#include <string>

#include "tcblstm/asgd.h"
#include "tcblstm/model.h"
#include "tcblstm/optimizer.h"
#include "tcblstm/synthetic.h"

namespace tcblstm {

/// Everything one CLI invocation needs. Text form is flat key = value with
/// the prefixes model., optim., asgd. and data.; '#' starts a comment.
struct RunConfig {
  ModelConfig model;
  OptimConfig optim;
  AsgdConfig asgd;  // its optim member is ignored; Asgd() fills it from optim
  SyntheticSpec data;
  std::string data_dir = "data";  // where gen writes and train reads

  AsgdConfig Asgd() const;
  bool operator==(const RunConfig &) const = default;
};

/// Unknown keys, duplicate keys and unparsable values raise ConfigError
/// naming the key and the 1-based line.
RunConfig ParseConfig(const std::string &text);
RunConfig LoadConfig(const std::string &path);

/// Every key, one per line, in a fixed order; ParseConfig inverts it exactly.
std::string FormatConfig(const RunConfig &config);

/// The model.* subset, as stored inside checkpoints.
std::string FormatModelConfig(const ModelConfig &config);
ModelConfig ParseModelConfig(const std::string &text);

}  // namespace tcblstm

#endif  // TCBLSTM_CONFIG_H_
