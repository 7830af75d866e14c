#ifndef OVRUN_TOOLS_COMMANDS_H_
#define OVRUN_TOOLS_COMMANDS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ovrun::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitOther = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

inline constexpr std::string_view kToolVersion = "ovrun 0.1.0";

struct GenOptions {
  std::string preset;  // "" or "paper"
  std::filesystem::path run_dir;
  std::filesystem::path out;
  int level = 1;
  std::size_t n = 10;
  std::uint64_t seed = 1;
  bool mixed_levels = false;
  int max_entities = 10;
  int max_dummy_vars = 4;
  int int_lo = 1;
  int int_hi = 100;
  double safe_ratio = 0.5;
  std::size_t train_n = 10000;
  std::size_t test_n = 1000;
};

struct TrainOptions {
  std::string preset;
  std::filesystem::path run_dir;
  std::filesystem::path train_path;  // defaults to <run_dir>/data/train.jsonl
  std::size_t dim = 32;
  std::size_t hops = 3;
  std::size_t capacity = 30;
  double learning_rate = 1e-2;
  std::size_t batch_size = 32;
  std::size_t epochs = 100;
  std::uint64_t seed = 1;
  std::size_t top_k = 10;
  std::optional<double> grad_clip;
  double init_sigma = 0.1;
  bool mask_empty_slots = false;
  std::size_t runs = 1;
  bool quiet = false;
};

struct EvalOptions {
  std::filesystem::path run_dir;
  std::vector<int> levels = {1, 2, 3, 4};
  bool compare_paper = false;
};

struct TraceOptions {
  std::filesystem::path ckpt;
  std::size_t sample_id = 0;
  std::filesystem::path corpus;  // defaults to <run>/data/test_l3.jsonl
  std::filesystem::path vocab;   // defaults to <run>/vocab.txt
  bool json = false;
};

struct ExportOptions {
  std::filesystem::path ckpt;
  std::filesystem::path out;
  std::filesystem::path vocab;
  std::string table = "address";
  bool numeric_only = false;
};

// Each command writes its artifacts to disk and progress to `log`. Errors
// surface as ovrun exceptions; see ExitCodeFor.
void RunGen(const GenOptions& opts, std::ostream& log);
void RunTrain(const TrainOptions& opts, std::ostream& log);
void RunEval(const EvalOptions& opts, std::ostream& log);
void RunTrace(const TraceOptions& opts, std::ostream& log);
void RunExportEmbeddings(const ExportOptions& opts, std::ostream& log);

// Maps the active exception onto an exit code and writes its message.
int ExitCodeForCurrentException(std::ostream& err);

// Run directory layout.
std::filesystem::path TrainCorpusPath(const std::filesystem::path& run_dir);
std::filesystem::path TestCorpusPath(const std::filesystem::path& run_dir,
                                     int level);
std::filesystem::path VocabPath(const std::filesystem::path& run_dir);
std::filesystem::path CheckpointDir(const std::filesystem::path& run_dir);

// Retained snapshot files listed in <run>/checkpoints/index.json, best
// first.
std::vector<std::filesystem::path> ListSnapshots(
    const std::filesystem::path& run_dir);

}  // namespace ovrun::cli

#endif  // OVRUN_TOOLS_COMMANDS_H_
