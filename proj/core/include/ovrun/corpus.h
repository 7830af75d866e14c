#ifndef OVRUN_CORPUS_H_
#define OVRUN_CORPUS_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace ovrun {

// Cumulative difficulty tiers of the generated benchmark:
//   L1  direct index access only
//   L2  + strcpy / memcpy access
//   L3  + char arrays sized through an int variable
//   L4  + reassignment of that sizing variable before or after its use
enum class Level : int { kL1 = 1, kL2 = 2, kL3 = 3, kL4 = 4 };

Level LevelFromInt(int level);
inline int ToInt(Level level) { return static_cast<int>(level); }

// Wire encoding follows the corpus file: 0 = unsafe, 1 = safe.
enum class Label : int { kUnsafe = 0, kSafe = 1 };

inline int ToInt(Label label) { return static_cast<int>(label); }

enum class AccessForm { kDirect, kStrcpy, kMemcpy };

std::string_view ToString(AccessForm form);
AccessForm AccessFormFromString(std::string_view name);

struct IntRange {
  int lo = 1;
  int hi = 100;
};

struct GenConfig {
  Level level = Level::kL1;
  std::size_t num_samples = 1;
  std::uint64_t seed = 0;
  // Identifiers are entity_0 .. entity_<max_entities>.
  int max_entities = 10;
  int max_dummy_vars = 4;
  IntRange int_range;
  double safe_ratio = 0.5;
  // Pre-query line count target is drawn uniformly from this interval and
  // reached by adding dummy variables (capped by max_dummy_vars).
  int min_target_lines = 10;
  int max_target_lines = 30;
  // When set, every sample draws its own level uniformly from L1..level.
  bool mixed_levels = false;

  // Throws ConfigError.
  void Validate() const;
};

struct SampleMeta {
  Level level = Level::kL1;
  int dest_size = 0;
  // Index for direct access, source size for strcpy, length for memcpy.
  int access_size = 0;
  int dest_entity = 0;
  AccessForm access_form = AccessForm::kDirect;
  bool used_indirect_alloc = false;
  bool used_realloc = false;
  // 0-based story line of the destination array's malloc.
  int dest_alloc_line = -1;
  int num_dummies = 0;

  bool operator==(const SampleMeta&) const = default;
};

struct ProgramSample {
  std::vector<std::string> story_lines;
  std::string query_line;
  Label label = Label::kSafe;
  SampleMeta meta;

  std::size_t line_count() const { return story_lines.size() + 1; }
  bool operator==(const ProgramSample&) const = default;
};

// Independent, reproducible random stream for sample `index` of a corpus.
std::mt19937_64 SampleStream(std::uint64_t seed, std::size_t index);

// Builds one program: a header, an initialization stage of declarations,
// an allocation stage of assignments/mallocs, then the query access.
ProgramSample GenerateSample(const GenConfig& cfg, std::mt19937_64& rng);

// Sample i is drawn from SampleStream(cfg.seed, i); output is a pure
// function of cfg.
std::vector<ProgramSample> GenerateCorpus(const GenConfig& cfg);

struct CorpusStats {
  std::size_t num_samples = 0;
  std::size_t num_safe = 0;
  std::size_t num_unsafe = 0;
  std::size_t min_lines = 0;
  std::size_t max_lines = 0;
  double mean_lines = 0.0;
  // total line count (story + query) -> number of samples
  std::map<std::size_t, std::size_t> line_histogram;
  std::map<std::string, std::size_t> access_form_counts;

  double unsafe_fraction() const {
    return num_samples == 0 ? 0.0
                            : static_cast<double>(num_unsafe) / num_samples;
  }
};

CorpusStats Summarize(const std::vector<ProgramSample>& corpus);

// Straight-line interpreter over the generated statement subset. Tracks int
// values and buffer sizes top to bottom and decides whether the query
// access stays within the destination buffer. Never consults sample.meta.
// Throws UnsupportedConstructError on anything outside the subset.
Label OracleLabel(const std::vector<std::string>& story,
                  const std::string& query);
inline Label OracleLabel(const ProgramSample& sample) {
  return OracleLabel(sample.story_lines, sample.query_line);
}

}  // namespace ovrun

#endif  // OVRUN_CORPUS_H_
