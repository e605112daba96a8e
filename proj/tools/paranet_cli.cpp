// Copyright 2026 The ParaNet Desk Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// paranet: command-line front end.
//
// Exit codes: 0 success, 1 internal failure, 2 configuration or usage
// error, 3 data error.

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "paranet/harness/commands.hpp"

namespace {

namespace fs = std::filesystem;
using namespace paranet;

constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct Common {
  std::optional<fs::path> config;
  std::uint64_t seed = 1;
  std::string preset = "mini";
  fs::path out = "out";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Key = value configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Random seed");
  cmd->add_option("--preset", c.preset, "Hyperparameter preset")->check(CLI::IsMember({"full", "mini"}));
  cmd->add_option("--out", c.out, "Output directory");
}

harness::RunContext context(const Common& c) {
  harness::RunContext ctx;
  ctx.h = harness::load_hyperparams(c.preset, c.config);
  ctx.seed = c.seed;
  ctx.out = c.out;
  std::filesystem::create_directories(ctx.out);
  return ctx;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ParaNet text-to-speech toolkit"};
  app.require_subcommand(1);
  Common common;
  std::function<void()> action;

  fs::path corpus;
  auto* ingest = app.add_subcommand("ingest", "Extract features from a corpus into a dataset cache");
  add_common(ingest, common);
  ingest->add_option("--corpus", corpus, "Corpus directory with metadata.csv")->required();
  ingest->callback([&] { action = [&] { harness::run_ingest(context(common), corpus); }; });

  auto* toy = app.add_subcommand("make-toy-corpus", "Write the built-in synthetic corpus");
  add_common(toy, common);
  toy->callback([&] { action = [&] { harness::run_make_toy_corpus(context(common)); }; });

  harness::TrainOptions train_opts;
  auto* train = app.add_subcommand("train", "Train a teacher, ParaNet or WaveVAE model");
  add_common(train, common);
  train->add_option("--model", train_opts.model, "teacher, paranet or wavevae")
      ->check(CLI::IsMember({"teacher", "paranet", "wavevae"}));
  train->add_option("--data", train_opts.data, "Dataset cache from ingest")->required();
  train->add_option("--teacher", train_opts.teacher, "Teacher checkpoint (paranet only)");
  train->add_option("--steps", train_opts.steps, "Optimizer steps (default: preset value)");
  train->callback([&] {
    action = [&] {
      const auto s = harness::run_train(context(common), train_opts);
      spdlog::info("trained {} steps, total loss {:.4f} -> {:.4f}; checkpoint {}", s.steps, s.initial_total,
                   s.final_total, s.checkpoint.string());
    };
  });

  harness::SynthOptions synth_opts;
  std::string text;
  fs::path test_set;
  double speed = 0.0;
  bool no_mask = false;
  auto* synth = app.add_subcommand("synthesize", "Generate spectrograms, alignments and audio");
  add_common(synth, common);
  synth->add_option("--checkpoint", synth_opts.checkpoint, "Teacher or ParaNet checkpoint")->required();
  auto* text_opt = synth->add_option("--text", text, "Sentence to synthesize");
  auto* set_opt = synth->add_option("--test-set", test_set, "Numbered sentence list")->excludes(text_opt);
  synth->add_flag("--no-mask{true},--mask{false}", no_mask, "Toggle the inference attention mask");
  synth->add_option("--speed", speed, "Speaking-rate multiplier for ParaNet")->check(CLI::PositiveNumber);
  synth->add_option("--vocoder", synth_opts.vocoder, "griffinlim or wavevae")
      ->check(CLI::IsMember({"griffinlim", "wavevae"}));
  synth->add_option("--vocoder-checkpoint", synth_opts.vocoder_checkpoint, "WaveVAE checkpoint");
  synth->add_option("--griffin-lim-iterations", synth_opts.griffin_lim_iterations, "Griffin-Lim iterations");
  synth->callback([&] {
    if (text_opt->count()) synth_opts.text = text;
    if (set_opt->count()) synth_opts.test_set = test_set;
    if (speed > 0.0) synth_opts.speed = speed;
    synth_opts.mask = !no_mask;
    action = [&] { harness::run_synthesize(context(common), synth_opts); };
  });

  harness::BenchOptions bench_opts;
  bool bench_mask = false;
  auto* bench = app.add_subcommand("bench", "Time teacher and ParaNet inference");
  add_common(bench, common);
  bench->add_option("--teacher", bench_opts.teacher, "Teacher checkpoint")->required();
  bench->add_option("--paranet", bench_opts.paranet, "ParaNet checkpoint")->required();
  bench->add_option("--test-set", bench_opts.test_set, "Numbered sentence list")->required();
  bench->add_option("--runs", bench_opts.runs, "Timed runs per sentence")->check(CLI::PositiveNumber);
  bench->add_option("--limit", bench_opts.limit, "Use only the first N sentences");
  bench->add_flag("--mask", bench_mask, "Enable the inference attention mask");
  bench->callback([&] {
    bench_opts.mask = bench_mask;
    action = [&] { harness::run_bench(context(common), bench_opts); };
  });

  harness::AttentionOptions attn_opts;
  auto* attn = app.add_subcommand("analyze-attention", "Count attention errors with and without masking");
  add_common(attn, common);
  attn->add_option("--checkpoint", attn_opts.checkpoint, "Teacher or ParaNet checkpoint")->required();
  attn->add_option("--test-set", attn_opts.test_set, "Numbered sentence list")->required();
  attn->add_option("--limit", attn_opts.limit, "Use only the first N sentences");
  attn->callback([&] { action = [&] { harness::run_analyze_attention(context(common), attn_opts); }; });

  harness::AblateOptions ablate_opts;
  auto* ablate = app.add_subcommand("ablate", "Train ablation variants and report validation loss");
  add_common(ablate, common);
  ablate->add_option("--data", ablate_opts.data, "Dataset cache (default: built-in toy corpus)");
  ablate->add_option("--teacher-steps", ablate_opts.teacher_steps, "Teacher training steps");
  ablate->add_option("--paranet-steps", ablate_opts.paranet_steps, "ParaNet training steps per variant");
  ablate->add_flag("--layer-sweep", ablate_opts.layer_sweep, "Also sweep attention-block counts");
  ablate->callback([&] { action = [&] { harness::run_ablate(context(common), ablate_opts); }; });

  auto* params = app.add_subcommand("params", "Report parameter counts");
  add_common(params, common);
  params->callback([&] { action = [&] { harness::run_params(context(common)); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    action();
  } catch (const ConfigError& e) {
    spdlog::error("configuration error: {}", e.what());
    return kExitConfig;
  } catch (const DataError& e) {
    spdlog::error("data error: {}", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitInternal;
  }
  return 0;
}
