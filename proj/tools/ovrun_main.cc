// ovrun: generate overrun corpora, train the memory network, evaluate and
// inspect it.
//
// Settings resolve as: config file (--config, INI) < OVRUN_* environment
// variables < command-line flags.

#include <cctype>
#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "commands.h"
#include "ovrun/errors.h"

namespace {

using ovrun::cli::ExitCodeForCurrentException;

// Environment name for a long option, e.g. --learning-rate on train becomes
// OVRUN_TRAIN_LEARNING_RATE.
std::string EnvName(const std::string& sub, const std::string& flag) {
  std::string out = "OVRUN_" + sub + "_" + flag;
  for (char& c : out) {
    c = (c == '-') ? '_' : static_cast<char>(std::toupper(c));
  }
  return out;
}

// Attaches env lookup to every long option of `sub` that has one.
void BindEnv(CLI::App* sub) {
  for (CLI::Option* opt : sub->get_options()) {
    const auto& names = opt->get_lnames();
    if (names.empty() || names.front() == "help" ||
        names.front() == "config") {
      continue;
    }
    opt->envname(EnvName(sub->get_name(), names.front()));
  }
}

// Applies `[section] key = value` entries of the config file to options that
// neither the command line nor the environment set. Top-level keys apply to
// every subcommand.
void ApplyConfig(CLI::App* sub, const std::string& path) {
  if (path.empty()) return;
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_file(path);
  } catch (const CLI::FileError& e) {
    throw ovrun::ConfigError(e.what());
  }
  for (const CLI::ConfigItem& item : items) {
    if (!item.parents.empty() &&
        (item.parents.size() != 1 || item.parents[0] != sub->get_name())) {
      continue;
    }
    if (item.name == "++" || item.name == "--") continue;
    CLI::Option* opt = sub->get_option_no_throw("--" + item.name);
    if (opt == nullptr) {
      std::string key = item.name;
      for (char& c : key) {
        if (c == '_') c = '-';
      }
      opt = sub->get_option_no_throw("--" + key);
    }
    if (opt == nullptr) {
      if (item.parents.empty()) continue;
      throw ovrun::ConfigError(path + ": unknown key '" + item.name +
                               "' for " + sub->get_name());
    }
    if (opt->count() > 0) continue;
    for (const std::string& v : item.inputs) opt->add_result(v);
    try {
      opt->run_callback();
    } catch (const CLI::ParseError& e) {
      throw ovrun::ConfigError(path + ": " + item.name + ": " + e.what());
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Buffer-overrun benchmark generator and memory network"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ovrun::cli::kToolVersion));
  std::string config_path;
  app.add_option("--config", config_path, "INI file with default settings")
      ->check(CLI::ExistingFile);

  ovrun::cli::GenOptions gen;
  CLI::App* gen_cmd = app.add_subcommand("gen", "Generate a labelled corpus");
  gen_cmd->add_option("--preset", gen.preset,
                      "'paper': train mixture plus four test levels");
  gen_cmd->add_option("--run-dir", gen.run_dir, "Run directory for presets");
  gen_cmd->add_option("--out", gen.out, "Output JSONL file");
  gen_cmd->add_option("--level", gen.level, "Difficulty level")
      ->check(CLI::Range(1, 4));
  gen_cmd->add_option("--n", gen.n, "Number of samples");
  gen_cmd->add_option("--seed", gen.seed, "Random seed");
  gen_cmd->add_flag("--mixed-levels", gen.mixed_levels,
                    "Draw each sample's level uniformly from 1..level");
  gen_cmd->add_option("--max-entities", gen.max_entities);
  gen_cmd->add_option("--max-dummy-vars", gen.max_dummy_vars);
  gen_cmd->add_option("--int-lo", gen.int_lo);
  gen_cmd->add_option("--int-hi", gen.int_hi);
  gen_cmd->add_option("--safe-ratio", gen.safe_ratio);
  gen_cmd->add_option("--train-n", gen.train_n, "Preset train size");
  gen_cmd->add_option("--test-n", gen.test_n, "Preset size per test level");

  ovrun::cli::TrainOptions train;
  double grad_clip = 0.0;
  CLI::App* train_cmd = app.add_subcommand("train", "Train the model");
  train_cmd->add_option("--preset", train.preset, "'paper' (the defaults)");
  train_cmd->add_option("--run-dir", train.run_dir)->required();
  train_cmd->add_option("--train", train.train_path,
                        "Train corpus (default <run-dir>/data/train.jsonl)");
  train_cmd->add_option("--dim", train.dim, "Embedding size d");
  train_cmd->add_option("--hops", train.hops, "Hops K");
  train_cmd->add_option("--capacity", train.capacity, "Memory slots N");
  train_cmd->add_option("--learning-rate,--lr", train.learning_rate);
  train_cmd->add_option("--batch-size", train.batch_size);
  train_cmd->add_option("--epochs", train.epochs);
  train_cmd->add_option("--seed", train.seed);
  train_cmd->add_option("--top-k", train.top_k,
                        "Snapshots kept for averaging");
  auto* clip_opt = train_cmd->add_option("--grad-clip", grad_clip,
                                         "Global gradient-norm clip");
  train_cmd->add_option("--init-sigma", train.init_sigma);
  train_cmd->add_flag("--mask-empty-slots", train.mask_empty_slots);
  train_cmd->add_option("--runs", train.runs,
                        "Independent seeds; keeps each run's best epoch");
  train_cmd->add_flag("--quiet", train.quiet);

  ovrun::cli::EvalOptions eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Score retained snapshots");
  eval_cmd->add_option("--run-dir", eval.run_dir)->required();
  eval_cmd->add_option("--levels", eval.levels)->delimiter(',');
  eval_cmd->add_flag("--compare-paper", eval.compare_paper,
                     "Print the published numbers alongside");

  ovrun::cli::TraceOptions trace;
  CLI::App* trace_cmd =
      app.add_subcommand("trace", "Per-hop attention over one program");
  trace_cmd->add_option("--ckpt", trace.ckpt)->required();
  trace_cmd->add_option("--sample-id", trace.sample_id);
  trace_cmd->add_option("--corpus", trace.corpus);
  trace_cmd->add_option("--vocab", trace.vocab);
  trace_cmd->add_flag("--json", trace.json);

  ovrun::cli::ExportOptions exp;
  CLI::App* export_cmd = app.add_subcommand(
      "export-embeddings", "Dump embeddings and number geometry");
  export_cmd->add_option("--ckpt", exp.ckpt)->required();
  export_cmd->add_option("--out", exp.out)->required();
  export_cmd->add_option("--vocab", exp.vocab);
  export_cmd->add_option("--table", exp.table, "address | value");
  export_cmd->add_flag("--numeric-only", exp.numeric_only);

  for (CLI::App* sub : {gen_cmd, train_cmd, eval_cmd, trace_cmd, export_cmd}) {
    BindEnv(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return ovrun::cli::kExitConfig;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    ApplyConfig(sub, config_path);
    if (sub == gen_cmd) {
      ovrun::cli::RunGen(gen, std::cout);
    } else if (sub == train_cmd) {
      if (clip_opt->count() > 0) train.grad_clip = grad_clip;
      ovrun::cli::RunTrain(train, std::cout);
    } else if (sub == eval_cmd) {
      ovrun::cli::RunEval(eval, std::cout);
    } else if (sub == trace_cmd) {
      ovrun::cli::RunTrace(trace, std::cout);
    } else {
      ovrun::cli::RunExportEmbeddings(exp, std::cout);
    }
  } catch (...) {
    return ExitCodeForCurrentException(std::cerr);
  }
  return ovrun::cli::kExitOk;
}
