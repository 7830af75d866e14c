#ifndef OVRUN_TRAINING_H_
#define OVRUN_TRAINING_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ovrun/encoding.h"
#include "ovrun/model.h"

namespace ovrun {

struct TrainConfig {
  double learning_rate = 1e-2;
  std::size_t batch_size = 32;
  std::size_t epochs = 100;
  std::uint64_t seed = 0;
  std::size_t snapshot_top_k = 10;
  // Global L2-norm clip on the averaged batch gradient; off when empty.
  std::optional<double> grad_clip;
  double init_sigma = 0.1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void Validate() const;
};

// Binary cross-entropy of a safe-probability `score` against label 1 = safe.
// The score is clamped to [1e-12, 1 - 1e-12].
double Loss(double score, int label);

// Same shapes as ModelParams.
struct Gradients {
  Matrix value_embedding;
  Matrix address_embedding;
  Vector out_weight;
  double out_bias = 0.0;

  static Gradients ZerosLike(const ModelParams& params);
  void SetZero();
  void Scale(double factor);
  double Norm() const;
};

struct BackwardResult {
  double loss = 0.0;
  double score = 0.0;
  Gradients grads;
};

// Exact gradient of Loss(Forward(sample).score, sample.label) with respect
// to every parameter. Position weights are constants. Throws NumericError
// on a non-finite intermediate.
BackwardResult Backward(const EncodedSample& sample, const ModelParams& params);

// Adds the sample's gradient into `grads` and returns {loss, score}.
std::pair<double, double> AccumulateGradients(const EncodedSample& sample,
                                              const ModelParams& params,
                                              const PositionTable& positions,
                                              Gradients& grads);

struct AdamState {
  Gradients first;
  Gradients second;
  std::size_t step = 0;

  static AdamState For(const ModelParams& params);
};

// Bias-corrected Adam update; padding rows are re-zeroed afterwards.
void AdamStep(ModelParams& params, const Gradients& grads, AdamState& state,
              const TrainConfig& cfg);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double train_error = 0.0;
  double seconds = 0.0;
};

struct Snapshot {
  std::size_t epoch = 0;
  double train_error = 0.0;
  double train_loss = 0.0;
  ModelParams params;
};

struct TrainResult {
  // Best snapshot_top_k epochs by (train error, train loss), best first.
  std::vector<Snapshot> snapshots;
  std::vector<EpochRecord> log;
  ModelParams final_params;
  bool diverged = false;
  std::string divergence_message;
};

struct DatasetEvaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

DatasetEvaluation EvaluateDataset(const std::vector<EncodedSample>& data,
                                  const ModelParams& params);

using EpochCallback = std::function<void(const EpochRecord&)>;

// Mini-batch Adam over `data`, reshuffled every epoch from cfg.seed. After
// each epoch the whole training set is re-scored and the epoch competes for
// a top-k snapshot slot. On a non-finite loss training stops and the result
// is flagged as diverged, keeping the snapshots gathered so far (or the last
// good parameters when there are none).
TrainResult Train(const std::vector<EncodedSample>& data, ModelParams init,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace ovrun

#endif  // OVRUN_TRAINING_H_
