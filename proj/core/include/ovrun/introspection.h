#ifndef OVRUN_INTROSPECTION_H_
#define OVRUN_INTROSPECTION_H_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ovrun/corpus.h"
#include "ovrun/encoding.h"
#include "ovrun/matrix.h"
#include "ovrun/model.h"

namespace ovrun {

// Our definition of prediction confidence: distance of the score from the
// 0.5 decision boundary, rescaled to [0, 1].
inline double PredictionConfidence(double score) {
  return std::abs(score - 0.5) * 2.0;
}

struct TraceReport {
  std::vector<std::string> story;
  std::string query;
  HopTrace trace;  // attention[k][i] belongs to story[i] for i < story.size()
  int label = 0;
  int prediction = 0;
  double confidence = 0.0;

  // Most attended story line per hop (0-based).
  std::vector<std::size_t> ArgmaxLines() const;
};

TraceReport Trace(const ProgramSample& sample, const ModelParams& params,
                  const Vocabulary& vocab);

// Source listing with one attention column per hop; all-padding slots are
// folded into a trailing "<empty>" row so every column sums to 1.
std::string FormatTrace(const TraceReport& report);
std::string TraceToJson(const TraceReport& report);

enum class EmbeddingTable { kValue, kAddress };

std::string_view ToString(EmbeddingTable table);
EmbeddingTable EmbeddingTableFromString(std::string_view name);

// Decimal integer literal tokens map to their value; everything else to
// nullopt.
std::optional<long> NumericValue(std::string_view token);

struct EmbeddingAtlas {
  EmbeddingTable table = EmbeddingTable::kAddress;
  std::vector<std::string> tokens;  // vocabulary order without padding
  Matrix vectors;                   // tokens.size() x d
  // Rows of integer tokens, sorted ascending by numeric value.
  std::vector<std::size_t> numeric_subset;
  std::vector<long> numeric_values;

  static EmbeddingAtlas Build(const Vocabulary& vocab,
                              const ModelParams& params, EmbeddingTable table);
};

struct NumberGeometry {
  std::vector<long> values;  // ascending
  Matrix cosine;             // NaN where a zero vector makes it undefined
  Matrix l2;
  std::vector<std::pair<std::size_t, std::size_t>> undefined_cosine;
};

// Pairwise cosine similarity and Euclidean distance over the atlas's
// numeric tokens. Throws ContractError with fewer than two numbers.
NumberGeometry ComputeNumberGeometry(const EmbeddingAtlas& atlas);

// Spearman rank correlation with average ranks for ties.
double Spearman(std::span<const double> x, std::span<const double> y);

// Spearman correlation between |a - b| and L2(a, b) over all pairs a < b.
double DistanceRankCorrelation(const NumberGeometry& geometry);

// CSV with a header row of `labels` and one labelled row per matrix row.
void WriteMatrixCsv(const std::filesystem::path& path,
                    const std::vector<std::string>& row_labels,
                    const std::vector<std::string>& col_labels,
                    const Matrix& m);

// Binary PPM heatmap, one square of `cell` pixels per entry, blue (lo)
// through white to red (hi). NaN renders black.
void WriteHeatmapPpm(const std::filesystem::path& path, const Matrix& m,
                     double lo, double hi, std::size_t cell = 4);

// token,value,c0..c{d-1} per row; value empty for non-numeric tokens.
// With numeric_only, just the integer tokens in ascending order.
void ExportEmbeddings(const EmbeddingAtlas& atlas,
                      const std::filesystem::path& path, bool numeric_only);

}  // namespace ovrun

#endif  // OVRUN_INTROSPECTION_H_
