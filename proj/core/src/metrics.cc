#include "ovrun/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "ovrun/errors.h"

namespace ovrun {
namespace {

void CheckLengths(std::size_t a, std::size_t b) {
  if (a != b) {
    throw ContractError("length mismatch: " + std::to_string(a) + " vs " +
                        std::to_string(b));
  }
  if (a == 0) throw ContractError("metrics need at least one sample");
}

}  // namespace

double Accuracy(std::span<const int> preds, std::span<const int> labels) {
  CheckLengths(preds.size(), labels.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double F1(std::span<const int> preds, std::span<const int> labels,
          int positive_class) {
  CheckLengths(preds.size(), labels.size());
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] == positive_class;
    const bool y = labels[i] == positive_class;
    tp += p && y;
    fp += p && !y;
    fn += !p && y;
  }
  const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double Auc(std::span<const double> scores, std::span<const int> labels) {
  CheckLengths(scores.size(), labels.size());
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::ranges::sort(idx, [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });
  // Rank-sum with midranks for ties.
  double pos_rank_sum = 0.0;
  double positives = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (labels[idx[t]] == 1) {
        pos_rank_sum += midrank;
        positives += 1.0;
      }
    }
    i = j;
  }
  const double negatives = static_cast<double>(scores.size()) - positives;
  if (positives == 0.0 || negatives == 0.0) {
    throw UndefinedMetricError("AUC needs both positive and negative labels");
  }
  return (pos_rank_sum - positives * (positives + 1.0) / 2.0) /
         (positives * negatives);
}

MetricSummary Summarize(std::span<const double> values) {
  MetricSummary s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(var / n);
  return s;
}

SnapshotMetrics ScoreSnapshot(const std::vector<EncodedSample>& test,
                              const ModelParams& params, int positive_class) {
  const std::vector<double> scores = PredictScores(test, params);
  std::vector<int> preds(test.size());
  std::vector<int> labels(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    preds[i] = scores[i] >= 0.5 ? 1 : 0;
    labels[i] = test[i].label;
  }
  SnapshotMetrics m;
  m.accuracy = Accuracy(preds, labels);
  m.f1 = F1(preds, labels, positive_class);
  if (positive_class == 1) {
    m.auc = Auc(scores, labels);
  } else {
    // AUC is symmetric under swapping the positive class and negating scores.
    std::vector<double> flipped(scores.size());
    std::vector<int> flipped_labels(labels.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
      flipped[i] = -scores[i];
      flipped_labels[i] = labels[i] == positive_class ? 1 : 0;
    }
    m.auc = Auc(flipped, flipped_labels);
  }
  return m;
}

EvalReport Evaluate(std::span<const ModelParams> snapshots,
                    const std::vector<EncodedSample>& test, Level level,
                    int positive_class) {
  if (snapshots.empty()) throw ContractError("no snapshots to evaluate");
  EvalReport report;
  report.level = level;
  report.n = test.size();
  report.positive_class = positive_class;
  std::vector<double> acc, f1, auc;
  for (const ModelParams& p : snapshots) {
    const SnapshotMetrics m = ScoreSnapshot(test, p, positive_class);
    report.per_snapshot.push_back(m);
    acc.push_back(m.accuracy);
    f1.push_back(m.f1);
    auc.push_back(m.auc);
  }
  report.accuracy = Summarize(acc);
  report.f1 = Summarize(f1);
  report.auc = Summarize(auc);
  return report;
}

EvalReport Evaluate(std::span<const ModelParams> snapshots,
                    const std::vector<ProgramSample>& test,
                    const Vocabulary& vocab, Level level, int positive_class) {
  if (snapshots.empty()) throw ContractError("no snapshots to evaluate");
  const std::vector<EncodedSample> encoded =
      EncodeAll(test, vocab, snapshots.front().capacity, MaxLineWidth(test));
  return Evaluate(snapshots, encoded, level, positive_class);
}

std::string ReportToJson(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["level"] = ToInt(r.level);
  j["n"] = r.n;
  j["positive_class"] = r.positive_class == 1 ? "safe" : "unsafe";
  auto summary = [](const MetricSummary& s) {
    return nlohmann::ordered_json{{"mean", s.mean}, {"std", s.stddev}};
  };
  j["accuracy"] = summary(r.accuracy);
  j["f1"] = summary(r.f1);
  j["auc"] = summary(r.auc);
  nlohmann::ordered_json snaps = nlohmann::ordered_json::array();
  for (const SnapshotMetrics& m : r.per_snapshot) {
    snaps.push_back({{"accuracy", m.accuracy}, {"f1", m.f1}, {"auc", m.auc}});
  }
  j["per_snapshot"] = std::move(snaps);
  return j.dump(2);
}

std::string FormatTable(const std::vector<EvalReport>& reports,
                        bool compare_reference) {
  std::ostringstream out;
  char buf[64];
  out << "F1 positive class: "
      << (reports.empty() || reports.front().positive_class == 1 ? "safe"
                                                                  : "unsafe")
      << "\n";
  out << "              ";
  for (const EvalReport& r : reports) {
    std::snprintf(buf, sizeof(buf), "| level %d                  ",
                  ToInt(r.level));
    out << buf;
  }
  out << "|\n              ";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    out << "| acc     F1      auc      ";
  }
  out << "|\n";
  out << "measured      ";
  for (const EvalReport& r : reports) {
    std::snprintf(buf, sizeof(buf), "| %.2f    %.2f    %.2f     ",
                  r.accuracy.mean, r.f1.mean, r.auc.mean);
    out << buf;
  }
  out << "|\n  (std)       ";
  for (const EvalReport& r : reports) {
    std::snprintf(buf, sizeof(buf), "| (%.2f)  (%.2f)  (%.2f)   ",
                  r.accuracy.stddev, r.f1.stddev, r.auc.stddev);
    out << buf;
  }
  out << "|\n";
  if (compare_reference) {
    out << "published     ";
    for (const EvalReport& r : reports) {
      const ReferenceRow& ref = kReferenceMemoryNetwork[ToInt(r.level) - 1];
      std::snprintf(buf, sizeof(buf), "| %.2f    %.2f    %.2f     ",
                    ref.accuracy, ref.f1, ref.auc);
      out << buf;
    }
    out << "|\n  (delta acc) ";
    for (const EvalReport& r : reports) {
      const ReferenceRow& ref = kReferenceMemoryNetwork[ToInt(r.level) - 1];
      std::snprintf(buf, sizeof(buf), "| %+.2f                    ",
                    r.accuracy.mean - ref.accuracy);
      out << buf;
    }
    out << "|\n";
  }
  return out.str();
}

}  // namespace ovrun
