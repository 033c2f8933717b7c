// include/tcblstm/cli.h

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

#ifndef TCBLSTM_CLI_H_
#define TCBLSTM_CLI_H_

#include <ostream>
#include <string>

#include "tcblstm/config.h"
#include "tcblstm/verify.h"

namespace tcblstm {

/// Writes train.tcbd, dev.tcbd, test.tcbd and summary.txt into out_dir,
/// which must already exist.
void cmd_gen(const RunConfig &config, const std::string &out_dir, std::ostream &log);

/// Trains on data_dir/{train,dev}.tcbd; writes best.tckp, last.tckp and
/// train.log (asgd.log for ASGD) into out_dir. `resume` names a checkpoint
/// written by an earlier run, or is empty.
TrainResult cmd_train(const RunConfig &config, const std::string &out_dir,
                      const std::string &resume, std::ostream &log);
TrainResult cmd_asgd(const RunConfig &config, const std::string &out_dir,
                     const std::string &resume, std::ostream &log);

/// Frame accuracy and mean cross-entropy of a checkpoint's best parameters.
EvalMetrics cmd_eval(const std::string &checkpoint, const std::string &dataset,
                     std::ostream &out);

/// Prints one line per check; returns true when every check passes.
bool cmd_verify(const VerifyOptions &options, std::ostream &out);

/// Full command line: gen|train|asgd|eval|verify. Returns the exit code:
/// 0 success, 1 user or configuration error, 2 internal or oracle failure.
int RunCli(int argc, char **argv, std::ostream &out, std::ostream &err);

}  // namespace tcblstm

#endif  // TCBLSTM_CLI_H_
