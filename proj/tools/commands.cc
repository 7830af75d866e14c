#include "commands.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "json.hpp"
#include "ovrun/checkpoint.h"
#include "ovrun/corpus.h"
#include "ovrun/corpus_io.h"
#include "ovrun/encoding.h"
#include "ovrun/errors.h"
#include "ovrun/introspection.h"
#include "ovrun/metrics.h"
#include "ovrun/model.h"
#include "ovrun/training.h"

namespace ovrun::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

fs::path TrainCorpusPath(const fs::path& run_dir) {
  return run_dir / "data" / "train.jsonl";
}

fs::path TestCorpusPath(const fs::path& run_dir, int level) {
  return run_dir / "data" / ("test_l" + std::to_string(level) + ".jsonl");
}

fs::path VocabPath(const fs::path& run_dir) { return run_dir / "vocab.txt"; }

fs::path CheckpointDir(const fs::path& run_dir) {
  return run_dir / "checkpoints";
}

namespace {

void EnsureDir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir.string());
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

// Everything needed to redo a command: tool version plus resolved options.
void WriteProvenance(const fs::path& run_dir, const std::string& command,
                     ordered_json options) {
  EnsureDir(run_dir / "provenance");
  ordered_json j;
  j["tool"] = kToolVersion;
  j["command"] = command;
  j["options"] = std::move(options);
  j["notes"] = {
      {"f1_positive_class", "safe (label 1)"},
      {"train_level_mixture",
       "paper preset trains on a uniform mixture of levels 1-4"},
      {"snapshot_averaging",
       "metrics averaged over the top-k epochs by training error"}};
  WriteText(run_dir / "provenance" / (command + ".json"), j.dump(2) + "\n");
}

GenConfig MakeGenConfig(const GenOptions& o, Level level, std::size_t n,
                        std::uint64_t seed, bool mixed) {
  GenConfig cfg;
  cfg.level = level;
  cfg.num_samples = n;
  cfg.seed = seed;
  cfg.mixed_levels = mixed;
  cfg.max_entities = o.max_entities;
  cfg.max_dummy_vars = o.max_dummy_vars;
  cfg.int_range = {o.int_lo, o.int_hi};
  cfg.safe_ratio = o.safe_ratio;
  cfg.Validate();
  return cfg;
}

void PrintStats(std::ostream& log, const std::string& name,
                const std::vector<ProgramSample>& corpus) {
  const CorpusStats st = Summarize(corpus);
  const Vocabulary vocab = Vocabulary::FromCorpus(corpus);
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "%-10s n=%zu lines min/mean/max=%zu/%.2f/%zu vocab=%zu "
                "unsafe=%.3f\n",
                name.c_str(), st.num_samples, st.min_lines, st.mean_lines,
                st.max_lines, vocab.size(), st.unsafe_fraction());
  log << buf;
}

ordered_json GenOptionsJson(const GenOptions& o) {
  return {{"preset", o.preset},
          {"level", o.level},
          {"n", o.n},
          {"seed", o.seed},
          {"mixed_levels", o.mixed_levels},
          {"max_entities", o.max_entities},
          {"max_dummy_vars", o.max_dummy_vars},
          {"int_range", {o.int_lo, o.int_hi}},
          {"safe_ratio", o.safe_ratio},
          {"train_n", o.train_n},
          {"test_n", o.test_n}};
}

}  // namespace

void RunGen(const GenOptions& o, std::ostream& log) {
  if (o.preset.empty()) {
    if (o.out.empty()) throw ConfigError("gen needs --out FILE or --preset");
    const GenConfig cfg =
        MakeGenConfig(o, LevelFromInt(o.level), o.n, o.seed, o.mixed_levels);
    const auto corpus = GenerateCorpus(cfg);
    if (o.out.has_parent_path()) EnsureDir(o.out.parent_path());
    WriteCorpus(o.out, corpus);
    PrintStats(log, o.out.filename().string(), corpus);
    return;
  }
  if (o.preset != "paper") {
    throw ConfigError("unknown preset '" + o.preset + "' (known: paper)");
  }
  if (o.run_dir.empty()) throw ConfigError("--preset paper needs --run-dir");
  EnsureDir(o.run_dir / "data");

  // Train: one mixture corpus covering all levels. Tests: one corpus per
  // level with its own seed.
  ordered_json stats;
  const GenConfig train_cfg =
      MakeGenConfig(o, Level::kL4, o.train_n, o.seed, /*mixed=*/true);
  const auto train = GenerateCorpus(train_cfg);
  WriteCorpus(TrainCorpusPath(o.run_dir), train);
  PrintStats(log, "train", train);
  stats["train"] = ordered_json::parse(StatsToJson(Summarize(train)));
  stats["train"]["seed"] = train_cfg.seed;
  stats["train"]["vocab_size"] = Vocabulary::FromCorpus(train).size();
  for (int level = 1; level <= 4; ++level) {
    const GenConfig cfg = MakeGenConfig(o, LevelFromInt(level), o.test_n,
                                        o.seed + 1000 * level, false);
    const auto test = GenerateCorpus(cfg);
    WriteCorpus(TestCorpusPath(o.run_dir, level), test);
    const std::string name = "test_l" + std::to_string(level);
    PrintStats(log, name, test);
    stats[name] = ordered_json::parse(StatsToJson(Summarize(test)));
    stats[name]["seed"] = cfg.seed;
  }
  WriteText(o.run_dir / "data" / "corpus_stats.json", stats.dump(2) + "\n");
  WriteProvenance(o.run_dir, "gen", GenOptionsJson(o));
}

namespace {

std::string CheckpointName(std::size_t run, std::size_t epoch, double err) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "run%02zu_epoch%04zu_err%.4f.ckpt", run,
                epoch, err);
  return buf;
}

ordered_json TrainOptionsJson(const TrainOptions& o) {
  ordered_json j = {{"preset", o.preset},
                    {"train_path", o.train_path.string()},
                    {"dim", o.dim},
                    {"hops", o.hops},
                    {"capacity", o.capacity},
                    {"learning_rate", o.learning_rate},
                    {"batch_size", o.batch_size},
                    {"epochs", o.epochs},
                    {"seed", o.seed},
                    {"top_k", o.top_k},
                    {"init_sigma", o.init_sigma},
                    {"mask_empty_slots", o.mask_empty_slots},
                    {"runs", o.runs},
                    {"adam", {{"beta1", 0.9}, {"beta2", 0.999}, {"eps", 1e-8}}},
                    {"loss", "binary cross-entropy"}};
  j["grad_clip"] = o.grad_clip ? ordered_json(*o.grad_clip) : ordered_json();
  return j;
}

}  // namespace

void RunTrain(const TrainOptions& opts, std::ostream& log) {
  TrainOptions o = opts;
  if (!o.preset.empty() && o.preset != "paper") {
    throw ConfigError("unknown preset '" + o.preset + "' (known: paper)");
  }
  if (o.run_dir.empty()) throw ConfigError("train needs --run-dir");
  if (o.runs < 1) throw ConfigError("--runs must be >= 1");
  if (o.train_path.empty()) o.train_path = TrainCorpusPath(o.run_dir);
  if (!fs::exists(o.train_path)) {
    throw DataError("training corpus not found at " + o.train_path.string() +
                    " (create it with: ovrun gen --preset paper --run-dir " +
                    o.run_dir.string() + ")");
  }
  const auto corpus = ReadCorpus(o.train_path);
  if (corpus.empty()) throw DataError("training corpus is empty");
  const Vocabulary vocab = Vocabulary::FromCorpus(corpus);
  vocab.Save(VocabPath(o.run_dir));
  const auto data =
      EncodeAll(corpus, vocab, o.capacity, MaxLineWidth(corpus));

  TrainConfig tc;
  tc.learning_rate = o.learning_rate;
  tc.batch_size = o.batch_size;
  tc.epochs = o.epochs;
  tc.snapshot_top_k = o.top_k;
  tc.grad_clip = o.grad_clip;
  tc.init_sigma = o.init_sigma;
  tc.Validate();
  const ModelDims dims{vocab.size(), o.dim, o.capacity, o.hops,
                       o.mask_empty_slots};

  const fs::path ckpt_dir = CheckpointDir(o.run_dir);
  fs::remove_all(ckpt_dir);
  EnsureDir(ckpt_dir);
  std::ofstream train_log(o.run_dir / "train_log.jsonl", std::ios::binary);
  WriteProvenance(o.run_dir, "train", TrainOptionsJson(o));
  log << "train: " << corpus.size() << " samples, V=" << vocab.size()
      << " d=" << o.dim << " K=" << o.hops << " N=" << o.capacity
      << " lr=" << o.learning_rate << "\n";

  ordered_json index = ordered_json::array();
  bool diverged = false;
  std::string divergence;
  for (std::size_t run = 0; run < o.runs; ++run) {
    tc.seed = o.seed + run;
    const ModelParams init = ModelParams::Random(dims, tc.seed, tc.init_sigma);
    const TrainResult result =
        Train(data, init, tc, [&](const EpochRecord& r) {
          ordered_json rec = {{"run", run},
                              {"epoch", r.epoch},
                              {"train_loss", r.train_loss},
                              {"train_acc", r.train_accuracy},
                              {"wall_seconds", r.seconds}};
          train_log << rec.dump() << '\n';
          train_log.flush();
          if (!o.quiet) {
            char buf[128];
            std::snprintf(buf, sizeof(buf),
                          "run %zu epoch %3zu loss %.4f acc %.4f (%.2fs)\n",
                          run, r.epoch, r.train_loss, r.train_accuracy,
                          r.seconds);
            log << buf << std::flush;
          }
        });
    // With several runs only each run's best snapshot is kept, so the
    // reported spread is across independent seeds.
    const std::size_t keep = o.runs > 1 ? 1 : result.snapshots.size();
    for (std::size_t i = 0; i < keep && i < result.snapshots.size(); ++i) {
      const Snapshot& s = result.snapshots[i];
      const std::string name = CheckpointName(run, s.epoch, s.train_error);
      SaveCheckpoint(ckpt_dir / name, s.params);
      index.push_back({{"file", name},
                       {"run", run},
                       {"seed", tc.seed},
                       {"epoch", s.epoch},
                       {"train_error", s.train_error},
                       {"train_loss", s.train_loss}});
    }
    if (result.diverged) {
      diverged = true;
      divergence = result.divergence_message;
      break;
    }
  }
  WriteText(ckpt_dir / "index.json", index.dump(2) + "\n");
  log << "kept " << index.size() << " snapshot(s) in " << ckpt_dir.string()
      << "\n";
  if (diverged) {
    throw NumericError("training diverged (" + divergence +
                       "); last good snapshots saved");
  }
}

std::vector<fs::path> ListSnapshots(const fs::path& run_dir) {
  const fs::path index_path = CheckpointDir(run_dir) / "index.json";
  std::ifstream in(index_path);
  if (!in) {
    throw DataError("no checkpoints at " + index_path.string() +
                    " (run: ovrun train --run-dir " + run_dir.string() + ")");
  }
  std::vector<fs::path> out;
  try {
    const auto j = ordered_json::parse(in);
    for (const auto& e : j) {
      out.push_back(CheckpointDir(run_dir) / e.at("file").get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(index_path.string() + ": " + e.what());
  }
  if (out.empty()) throw DataError(index_path.string() + " lists no snapshots");
  return out;
}

void RunEval(const EvalOptions& o, std::ostream& log) {
  if (o.run_dir.empty()) throw ConfigError("eval needs --run-dir");
  std::vector<ModelParams> snapshots;
  for (const fs::path& p : ListSnapshots(o.run_dir)) {
    snapshots.push_back(LoadCheckpoint(p));
  }
  const Vocabulary vocab = Vocabulary::Load(VocabPath(o.run_dir));
  EnsureDir(o.run_dir / "eval");
  std::vector<EvalReport> reports;
  for (int level : o.levels) {
    const fs::path path = TestCorpusPath(o.run_dir, level);
    if (!fs::exists(path)) {
      throw DataError("test corpus not found at " + path.string());
    }
    const auto test = ReadCorpus(path);
    EvalReport r = Evaluate(snapshots, test, vocab, LevelFromInt(level));
    WriteText(o.run_dir / "eval" / ("report_l" + std::to_string(level) +
                                    ".json"),
              ReportToJson(r) + "\n");
    reports.push_back(std::move(r));
  }
  const std::string table = FormatTable(reports, o.compare_paper);
  WriteText(o.run_dir / "eval" / "table.txt", table);
  log << "snapshots averaged: " << snapshots.size() << "\n" << table;
}

void RunTrace(const TraceOptions& opts, std::ostream& log) {
  TraceOptions o = opts;
  if (o.ckpt.empty()) throw ConfigError("trace needs --ckpt");
  const fs::path run_dir = o.ckpt.parent_path().parent_path();
  if (o.vocab.empty()) o.vocab = VocabPath(run_dir);
  if (o.corpus.empty()) o.corpus = TestCorpusPath(run_dir, 3);
  const ModelParams params = LoadCheckpoint(o.ckpt);
  const Vocabulary vocab = Vocabulary::Load(o.vocab);
  const auto corpus = ReadCorpus(o.corpus);
  if (o.sample_id >= corpus.size()) {
    throw ConfigError("--sample-id " + std::to_string(o.sample_id) +
                      " out of range; " + o.corpus.string() + " has " +
                      std::to_string(corpus.size()) + " samples");
  }
  const TraceReport report = Trace(corpus[o.sample_id], params, vocab);
  log << (o.json ? TraceToJson(report) + "\n" : FormatTrace(report));
}

void RunExportEmbeddings(const ExportOptions& opts, std::ostream& log) {
  ExportOptions o = opts;
  if (o.ckpt.empty() || o.out.empty()) {
    throw ConfigError("export-embeddings needs --ckpt and --out");
  }
  if (o.vocab.empty()) o.vocab = VocabPath(o.ckpt.parent_path().parent_path());
  const ModelParams params = LoadCheckpoint(o.ckpt);
  const Vocabulary vocab = Vocabulary::Load(o.vocab);
  const EmbeddingTable table = EmbeddingTableFromString(o.table);
  const EmbeddingAtlas atlas = EmbeddingAtlas::Build(vocab, params, table);
  EnsureDir(o.out);
  ExportEmbeddings(atlas, o.out / "embeddings.csv", o.numeric_only);

  ordered_json meta = {{"checkpoint", o.ckpt.string()},
                       {"table", ToString(table)},
                       {"numeric_only", o.numeric_only},
                       {"colormap", "blue (low) - white - red (high)"},
                       {"image_format", "binary PPM (P6)"}};
  if (atlas.numeric_subset.size() >= 2) {
    const NumberGeometry g = ComputeNumberGeometry(atlas);
    std::vector<std::string> labels;
    for (long v : g.values) labels.push_back(std::to_string(v));
    WriteMatrixCsv(o.out / "number_cosine.csv", labels, labels, g.cosine);
    WriteMatrixCsv(o.out / "number_l2.csv", labels, labels, g.l2);
    double max_l2 = 0.0;
    for (double x : g.l2.values()) max_l2 = std::max(max_l2, x);
    WriteHeatmapPpm(o.out / "number_cosine.ppm", g.cosine, -1.0, 1.0);
    WriteHeatmapPpm(o.out / "number_l2.ppm", g.l2, 0.0, max_l2);

    Matrix numbers(atlas.numeric_subset.size(), atlas.vectors.cols());
    double lo = 0.0, hi = 0.0;
    for (std::size_t r = 0; r < atlas.numeric_subset.size(); ++r) {
      std::ranges::copy(atlas.vectors.row(atlas.numeric_subset[r]),
                        numbers.row(r).begin());
    }
    for (double x : numbers.values()) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    const double bound = std::max(-lo, hi);
    WriteHeatmapPpm(o.out / "number_embeddings.ppm", numbers, -bound, bound);
    std::vector<std::string> comps;
    for (std::size_t k = 0; k < numbers.cols(); ++k) {
      comps.push_back("c" + std::to_string(k));
    }
    WriteMatrixCsv(o.out / "number_embeddings.csv", labels, comps, numbers);

    const double rho = DistanceRankCorrelation(g);
    meta["numeric_tokens"] = g.values.size();
    meta["spearman_gap_vs_l2"] = rho;
    meta["undefined_cosine_entries"] = g.undefined_cosine.size();
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", rho);
    log << "numeric tokens: " << g.values.size()
        << ", spearman(|a-b|, L2) = " << buf << "\n";
  }
  WriteText(o.out / "metadata.json", meta.dump(2) + "\n");
  log << "wrote " << (o.numeric_only ? atlas.numeric_subset.size()
                                     : atlas.tokens.size())
      << " embedding rows (" << ToString(table) << " table) to "
      << o.out.string() << "\n";
}

int ExitCodeForCurrentException(std::ostream& err) {
  try {
    throw;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitOther;
  }
}

}  // namespace ovrun::cli
