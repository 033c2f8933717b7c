// src/cli.cc

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

#include "tcblstm/cli.h"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>

#include "tcblstm/byte_io.h"
#include "tcblstm/checkpoint.h"
#include "tcblstm/dataset.h"

namespace tcblstm {

namespace fs = std::filesystem;

namespace {

void RequireDir(const std::string &dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec))
    throw InputError("output directory '" + dir + "' does not exist");
}

std::string Join(const std::string &dir, const char *name) {
  return (fs::path(dir) / name).string();
}

void CheckData(const ModelConfig &model, const UtteranceSet &utts, const std::string &path) {
  if (utts.feat_dim != model.feat_dim || utts.num_classes != model.num_classes)
    throw ConfigError("dataset '" + path + "' has feat_dim " + std::to_string(utts.feat_dim) +
                      " and " + std::to_string(utts.num_classes) +
                      " classes; model.feat_dim is " + std::to_string(model.feat_dim) +
                      " and model.num_classes " + std::to_string(model.num_classes));
}

WindowDataset LoadWindows(const ModelConfig &model, const std::string &path) {
  const UtteranceSet utts = load_dataset(path);
  CheckData(model, utts, path);
  return extract_windows(utts, model.tc.context_frames);
}

using Trainer = std::function<TrainResult(const ModelConfig &, ModelParams<float>,
                                          const WindowDataset &, const WindowDataset &,
                                          const ResumePoint *, const EpochCallback &)>;

TrainResult RunTraining(const RunConfig &config, const std::string &out_dir,
                        const std::string &resume, std::ostream &log, bool asgd,
                        const Trainer &trainer) {
  config.model.Validate();
  config.optim.Validate();
  if (asgd) config.Asgd().Validate();
  RequireDir(out_dir);
  const WindowDataset train_set = LoadWindows(config.model, Join(config.data_dir, "train.tcbd"));
  const WindowDataset dev_set = LoadWindows(config.model, Join(config.data_dir, "dev.tcbd"));

  std::unique_ptr<ResumePoint> point;
  if (!resume.empty())
    point = std::make_unique<ResumePoint>(ToResumePoint(load_checkpoint(resume, config.model)));

  const std::string log_path = Join(out_dir, asgd ? "asgd.log" : "train.log");
  std::ofstream file(log_path, point ? std::ios::app : std::ios::trunc);
  if (!file) throw InputError("cannot write '" + log_path + "'");
  if (!point) file << LogHeader(asgd) << "\n";
  log << LogHeader(asgd) << "\n";

  const std::string last_path = Join(out_dir, "last.tckp");
  EpochCallback on_epoch = [&](const EpochLog &entry, const TrainState &state,
                               const ModelParams<float> &current,
                               const ModelParams<float> &best) {
    const std::string line = FormatLogLine(entry, asgd);
    log << line << std::endl;
    file << line << std::endl;
    save_checkpoint(last_path, {config.model, state, current, best});
  };
  const ModelParams<float> initial = init_params(config.model);
  TrainResult result = trainer(config.model, initial, train_set, dev_set, point.get(), on_epoch);
  save_checkpoint(Join(out_dir, "best.tckp"),
                  {config.model, result.state, result.best, std::nullopt});
  if (result.log.empty() && !point)
    save_checkpoint(last_path, {config.model, result.state, result.last, result.best});
  return result;
}

}  // namespace

void cmd_gen(const RunConfig &config, const std::string &out_dir, std::ostream &log) {
  RequireDir(out_dir);
  const SyntheticData data = generate_synthetic(config.data);
  std::string summary;
  const std::pair<const char *, const SyntheticSplit *> splits[] = {
      {"train", &data.train}, {"dev", &data.dev}, {"test", &data.test}};
  for (const auto &[name, split] : splits) {
    save_dataset(Join(out_dir, (std::string(name) + ".tcbd").c_str()), split->utts);
    summary += std::string("[") + name + "]\n" + DatasetSummary(split->utts);
  }
  const std::string path = Join(out_dir, "summary.txt");
  WriteFileBytes(path, std::span(reinterpret_cast<const std::uint8_t *>(summary.data()),
                                 summary.size()));
  log << summary;
}

TrainResult cmd_train(const RunConfig &config, const std::string &out_dir,
                      const std::string &resume, std::ostream &log) {
  return RunTraining(config, out_dir, resume, log, false,
                     [&](const ModelConfig &m, ModelParams<float> init, const WindowDataset &tr,
                         const WindowDataset &dv, const ResumePoint *rp,
                         const EpochCallback &cb) {
                       return train(m, std::move(init), tr, dv, config.optim, rp, cb);
                     });
}

TrainResult cmd_asgd(const RunConfig &config, const std::string &out_dir,
                     const std::string &resume, std::ostream &log) {
  TrainResult r = RunTraining(
      config, out_dir, resume, log, true,
      [&](const ModelConfig &m, ModelParams<float> init, const WindowDataset &tr,
          const WindowDataset &dv, const ResumePoint *rp, const EpochCallback &cb) {
        return asgd_train(m, std::move(init), tr, dv, config.Asgd(), rp, cb);
      });
  if (r.aborted) throw ProtocolError("ASGD aborted: " + r.error);
  return r;
}

EvalMetrics cmd_eval(const std::string &checkpoint, const std::string &dataset,
                     std::ostream &out) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  const WindowDataset data = LoadWindows(ckpt.config, dataset);
  const ModelParams<float> &params = ckpt.best ? *ckpt.best : ckpt.params;
  const EvalMetrics m = Evaluate(params, ckpt.config, data.windows, data.targets);
  char buf[128];
  std::snprintf(buf, sizeof(buf), "frames\t%zu\naccuracy\t%.6f\ncross_entropy\t%.9g\n",
                m.frames, m.accuracy, m.loss);
  out << buf;
  return m;
}

bool cmd_verify(const VerifyOptions &options, std::ostream &out) {
  bool all = true;
  for (const CheckResult &r : RunVerifySuite(options)) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%s\t%-28s\terror=%.3e\ttolerance=%.0e\t",
                  r.passed ? "PASS" : "FAIL", r.name.c_str(), r.max_rel_error, r.tolerance);
    out << buf << r.detail << "\n";
    all = all && r.passed;
  }
  out << (all ? "all checks passed" : "some checks FAILED") << "\n";
  return all;
}

int RunCli(int argc, char **argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"TC-DNN-BLSTM-DNN sequence classification toolkit"};
  app.require_subcommand(1);
  std::string config_path, out_dir = ".", resume, checkpoint, dataset, fault_block;
  std::int64_t seed = -1;

  auto add_common = [&](CLI::App *cmd) {
    cmd->add_option("--config", config_path, "key = value configuration file");
    cmd->add_option("--seed", seed, "overrides every seed in the configuration")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--out", out_dir, "output directory (must exist)");
  };
  CLI::App *gen = app.add_subcommand("gen", "generate the synthetic datasets");
  add_common(gen);
  CLI::App *trn = app.add_subcommand("train", "minibatch SGD training");
  add_common(trn);
  trn->add_option("--resume", resume, "continue from a last.tckp checkpoint");
  CLI::App *asg = app.add_subcommand("asgd", "parameter-server ASGD training");
  add_common(asg);
  asg->add_option("--resume", resume, "continue from a last.tckp checkpoint");
  CLI::App *evl = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  evl->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  evl->add_option("--data", dataset, "dataset file")->required();
  CLI::App *ver = app.add_subcommand("verify", "gradient and oracle checks");
  ver->add_option("--inject-sign-error", fault_block,
                  "negate the analytic gradient of every block with this name");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    RunConfig config;
    if (!config_path.empty()) config = LoadConfig(config_path);
    if (seed >= 0) {
      config.model.seed = config.optim.seed = config.data.seed =
          static_cast<std::uint64_t>(seed);
    }
    if (*gen) {
      cmd_gen(config, out_dir, out);
    } else if (*trn) {
      cmd_train(config, out_dir, resume, out);
    } else if (*asg) {
      cmd_asgd(config, out_dir, resume, out);
    } else if (*evl) {
      cmd_eval(checkpoint, dataset, out);
    } else if (*ver) {
      VerifyOptions options;
      if (!fault_block.empty())
        options.corrupt = [&](const std::string &, const std::string &block, Tensor64 *g) {
          const auto dot = block.rfind('.');
          const std::string leaf = dot == std::string::npos ? block : block.substr(dot + 1);
          if (block == fault_block || leaf == fault_block)
            for (auto &v : g->data()) v = -v;
        };
      if (!cmd_verify(options, out)) return 2;
    }
  } catch (const UserError &e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception &e) {
    err << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace tcblstm
