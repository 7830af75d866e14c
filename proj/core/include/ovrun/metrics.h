#ifndef OVRUN_METRICS_H_
#define OVRUN_METRICS_H_

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ovrun/corpus.h"
#include "ovrun/encoding.h"
#include "ovrun/model.h"

namespace ovrun {

// Fraction of exact matches. Throws ContractError on empty or mismatched
// inputs.
double Accuracy(std::span<const int> preds, std::span<const int> labels);

// F1 of `positive_class`; 0 when precision + recall is 0.
double F1(std::span<const int> preds, std::span<const int> labels,
          int positive_class = 1);

// Mann-Whitney AUC: probability that a random positive (label 1) scores
// above a random negative, ties counted 1/2. Throws UndefinedMetricError
// unless both classes are present.
double Auc(std::span<const double> scores, std::span<const int> labels);

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation over snapshots
};

MetricSummary Summarize(std::span<const double> values);

struct SnapshotMetrics {
  double accuracy = 0.0;
  double f1 = 0.0;
  double auc = 0.0;
};

struct EvalReport {
  Level level = Level::kL1;
  std::size_t n = 0;
  int positive_class = 1;
  MetricSummary accuracy;
  MetricSummary f1;
  MetricSummary auc;
  std::vector<SnapshotMetrics> per_snapshot;
};

SnapshotMetrics ScoreSnapshot(const std::vector<EncodedSample>& test,
                              const ModelParams& params, int positive_class);

// Scores every snapshot on the test set and reports mean / std across them.
EvalReport Evaluate(std::span<const ModelParams> snapshots,
                    const std::vector<EncodedSample>& test, Level level,
                    int positive_class = 1);
EvalReport Evaluate(std::span<const ModelParams> snapshots,
                    const std::vector<ProgramSample>& test,
                    const Vocabulary& vocab, Level level,
                    int positive_class = 1);

std::string ReportToJson(const EvalReport& report);

// Published memory-network results per level (acc, F1, AUC), used only for
// side-by-side drift tracking.
struct ReferenceRow {
  double accuracy;
  double f1;
  double auc;
};
inline constexpr std::array<ReferenceRow, 4> kReferenceMemoryNetwork = {{
    {0.84, 0.84, 0.92},
    {0.86, 0.85, 0.93},
    {0.83, 0.83, 0.90},
    {0.82, 0.82, 0.90},
}};

// acc / F1 / auc per level, one column group per level; optionally a
// second row with the reference numbers.
std::string FormatTable(const std::vector<EvalReport>& reports,
                        bool compare_reference);

}  // namespace ovrun

#endif  // OVRUN_METRICS_H_
