// Copyright 2026 The Tabgen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: discover, pretrain, train, generate, audit.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data error,
// 3 training or generation abort.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "tabgen/common.h"
#include "tabgen/config.h"
#include "tabgen/pipeline.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitAbort = 3;

struct Overrides {
  std::string config_path;
  std::optional<std::string> input;
  std::optional<double> delta_thresh;
  std::optional<int> k;
  std::optional<double> alpha;
  std::optional<int> epochs;
  std::optional<uint64_t> seed;
};

tabgen::RunConfig ResolveConfig(const Overrides& o) {
  tabgen::RunConfig c = o.config_path.empty() ? tabgen::RunConfig{} : tabgen::LoadRunConfig(o.config_path);
  if (o.input) c.paths.input = *o.input;
  if (o.delta_thresh) c.discovery.delta_thresh = *o.delta_thresh;
  if (o.k) c.discovery.k = *o.k;
  if (o.alpha) c.ppo.alpha = *o.alpha;
  if (o.epochs) c.ppo.epochs = *o.epochs;
  if (o.seed) c.seed = *o.seed;
  if (const char* dir = std::getenv("TABGEN_OUTPUT_DIR"); dir && *dir) c.paths.output_dir = dir;
  c.Validate();
  return c;
}

void PrintAudit(const tabgen::AuditReport& rep) {
  std::cout << "mean KS " << (rep.mean_ks ? std::to_string(*rep.mean_ks) : "n/a") << ", mean JSD "
            << rep.mean_jsd << ", mean Hellinger " << rep.mean_hellinger << "\n";
  std::cout << "correlation fidelity "
            << (rep.correlation_fidelity ? std::to_string(*rep.correlation_fidelity) : "NOT-APPLICABLE")
            << "\n";
  if (rep.tstr) std::cout << "TSTR macro-F1 " << rep.tstr->mean_f1 << "\n";
  std::cout << "FAITH " << rep.faith.composite << " (fact " << rep.faith.fact << ", align "
            << rep.faith.align << ", integ " << rep.faith.integ << ", track " << rep.faith.track
            << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constraint-aware synthetic tabular data generator"};
  app.require_subcommand(1);
  Overrides o;
  app.add_option("-c,--config", o.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("-i,--input", o.input, "Input CSV (overrides paths.input)");
  app.add_option("--delta-thresh", o.delta_thresh, "Association threshold for critical pairs");
  app.add_option("--k", o.k, "Maximum number of critical pairs");
  app.add_option("--alpha", o.alpha, "Inverse-frequency reward scale");
  app.add_option("--epochs", o.epochs, "Adversarial training epochs");
  app.add_option("--seed", o.seed, "Master seed");
  app.footer("Environment: TABGEN_OUTPUT_DIR overrides paths.output_dir.");

  auto* discover = app.add_subcommand("discover", "Write pcrit.json and the association matrix");
  auto* pretrain = app.add_subcommand("pretrain", "Maximum-likelihood pretraining of the generator");
  auto* train = app.add_subcommand("train", "Adversarial fine-tuning from the pretrain checkpoint");

  auto* generate = app.add_subcommand("generate", "Sample well-formed synthetic rows");
  size_t count = 1000;
  std::optional<std::string> checkpoint, output;
  generate->add_option("-n,--count", count, "Rows to write")->capture_default_str();
  generate->add_option("--checkpoint", checkpoint, "Checkpoint (default: train.ckpt)");
  generate->add_option("-o,--output", output, "Output CSV (default: synthetic.csv)");

  auto* audit = app.add_subcommand("audit", "Fidelity, utility, privacy and FAITH report");
  app.add_subcommand("evaluate", "Alias of audit")->alias("eval");
  std::string synthetic;
  std::optional<std::string> real;
  for (auto* cmd : {audit, app.get_subcommand("evaluate")}) {
    cmd->add_option("-s,--synthetic", synthetic, "Synthetic CSV")->required()->check(CLI::ExistingFile);
    cmd->add_option("-r,--real", real, "Real CSV (default: training split)")->check(CLI::ExistingFile);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    const tabgen::RunConfig config = ResolveConfig(o);
    if (*discover) {
      const auto r = tabgen::RunDiscover(config);
      std::cout << r.pairs.pairs.size() << " critical pair(s) written to "
                << tabgen::OutputPath(config, tabgen::kPcritFile) << "\n";
    } else if (*pretrain) {
      tabgen::RunPretrain(config);
      std::cout << "checkpoint written to " << tabgen::OutputPath(config, tabgen::kPretrainCheckpoint)
                << "\n";
    } else if (*train) {
      tabgen::RunTrain(config);
      std::cout << "checkpoint written to " << tabgen::OutputPath(config, tabgen::kTrainCheckpoint)
                << "\n";
    } else if (*generate) {
      const auto r = tabgen::RunGenerate(config, count, checkpoint, output);
      std::cout << r.rows.num_rows() << " rows written; malformed rate "
                << (r.attempts ? static_cast<double>(r.malformed) / static_cast<double>(r.attempts) : 0.0)
                << "\n";
    } else {
      PrintAudit(tabgen::RunAudit(config, synthetic, real));
    }
  } catch (const tabgen::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const tabgen::NonFiniteError& e) {
    std::cerr << "training aborted (" << e.component() << "): " << e.what() << "\n";
    return kExitAbort;
  } catch (const tabgen::GenerationError& e) {
    std::cerr << "generation aborted: " << e.what() << "\n";
    return kExitAbort;
  } catch (const tabgen::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}
