#include "ovrun/training.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "ovrun/errors.h"

namespace ovrun {

void TrainConfig::Validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (snapshot_top_k < 1) throw ConfigError("snapshot_top_k must be >= 1");
  if (grad_clip && !(*grad_clip > 0.0)) {
    throw ConfigError("grad_clip must be > 0");
  }
  if (!(init_sigma >= 0.0)) throw ConfigError("init_sigma must be >= 0");
}

double Loss(double score, int label) {
  constexpr double kEps = 1e-12;
  const double s = std::clamp(score, kEps, 1.0 - kEps);
  return label == 1 ? -std::log(s) : -std::log(1.0 - s);
}

Gradients Gradients::ZerosLike(const ModelParams& params) {
  Gradients g;
  g.value_embedding = Matrix(params.vocab_size(), params.dim());
  g.address_embedding = Matrix(params.vocab_size(), params.dim());
  g.out_weight.assign(params.dim(), 0.0);
  return g;
}

void Gradients::SetZero() {
  value_embedding.fill(0.0);
  address_embedding.fill(0.0);
  std::ranges::fill(out_weight, 0.0);
  out_bias = 0.0;
}

void Gradients::Scale(double factor) {
  for (double& x : value_embedding.values()) x *= factor;
  for (double& x : address_embedding.values()) x *= factor;
  for (double& x : out_weight) x *= factor;
  out_bias *= factor;
}

double Gradients::Norm() const {
  double s = out_bias * out_bias;
  for (double x : value_embedding.values()) s += x * x;
  for (double x : address_embedding.values()) s += x * x;
  for (double x : out_weight) s += x * x;
  return std::sqrt(s);
}

namespace {

void CheckFinite(double x, const char* what, const HopTrace& trace) {
  if (std::isfinite(x)) return;
  throw NumericError(std::string("non-finite ") + what + " (logit " +
                     std::to_string(trace.logit) + ", score " +
                     std::to_string(trace.score) + ")");
}

// Spreads a gradient on a line encoding back onto the token rows that
// produced it.
void ScatterLine(std::span<const TokenId> ids, std::span<const double> grad,
                 const PositionTable& positions, Matrix& table_grad) {
  if (ids.empty()) return;
  const Matrix& l = positions.ForLength(ids.size());
  for (std::size_t j = 0; j < ids.size(); ++j) {
    if (ids[j] == Vocabulary::kPad) continue;
    auto dst = table_grad.row(ids[j]);
    const auto w = l.row(j);
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += w[k] * grad[k];
  }
}

}  // namespace

std::pair<double, double> AccumulateGradients(const EncodedSample& sample,
                                              const ModelParams& params,
                                              const PositionTable& positions,
                                              Gradients& grads) {
  if (sample.capacity != params.capacity) {
    throw ContractError("sample capacity does not match model capacity");
  }
  const EncodedMemory mem = EncodeMemory(sample, params.value_embedding,
                                         params.address_embedding, positions);
  const HopTrace trace = ForwardMemory(mem, ActiveSlots(sample), params);
  const double loss = Loss(trace.score, sample.label);
  CheckFinite(trace.logit, "logit", trace);
  CheckFinite(loss, "loss", trace);

  const std::size_t n = params.capacity;
  const std::size_t d = params.dim();
  const double dlogit = trace.score - static_cast<double>(sample.label);

  const Vector& u_last = trace.queries.back();
  for (std::size_t k = 0; k < d; ++k) grads.out_weight[k] += dlogit * u_last[k];
  grads.out_bias += dlogit;

  Vector g_u(d);
  for (std::size_t k = 0; k < d; ++k) g_u[k] = dlogit * params.out_weight[k];

  Matrix d_value(n, d);
  Matrix d_address(n, d);
  Vector g_p(n);
  for (std::size_t hop = params.hops; hop-- > 0;) {
    const Vector& p = trace.attention[hop];
    const Vector& u = trace.queries[hop];
    // u^{k+1} = u^k + M_val^T p^k, p^k = softmax(M_addr u^k)
    double p_dot_gp = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      auto dv = d_value.row(i);
      for (std::size_t k = 0; k < d; ++k) dv[k] += p[i] * g_u[k];
      g_p[i] = dot(mem.value.row(i), g_u);
      p_dot_gp += p[i] * g_p[i];
    }
    Vector g_prev = g_u;
    for (std::size_t i = 0; i < n; ++i) {
      const double g_z = p[i] * (g_p[i] - p_dot_gp);
      if (g_z == 0.0) continue;
      auto da = d_address.row(i);
      const auto a = mem.address.row(i);
      for (std::size_t k = 0; k < d; ++k) {
        da[k] += g_z * u[k];
        g_prev[k] += g_z * a[k];
      }
    }
    g_u = std::move(g_prev);
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto ids = sample.line(i);
    ScatterLine(ids, d_value.row(i), positions, grads.value_embedding);
    ScatterLine(ids, d_address.row(i), positions, grads.address_embedding);
  }
  ScatterLine(sample.query(), g_u, positions, grads.address_embedding);
  return {loss, trace.score};
}

BackwardResult Backward(const EncodedSample& sample,
                        const ModelParams& params) {
  BackwardResult r;
  r.grads = Gradients::ZerosLike(params);
  const PositionTable positions(std::max<std::size_t>(sample.width, 1),
                                params.dim());
  std::tie(r.loss, r.score) =
      AccumulateGradients(sample, params, positions, r.grads);
  return r;
}

AdamState AdamState::For(const ModelParams& params) {
  return {Gradients::ZerosLike(params), Gradients::ZerosLike(params), 0};
}

namespace {

void AdamUpdate(std::span<double> param, std::span<const double> grad,
                std::span<double> m, std::span<double> v,
                const TrainConfig& cfg, double lr_t) {
  const double b1 = cfg.adam_beta1;
  const double b2 = cfg.adam_beta2;
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
    v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
    param[i] -= lr_t * m[i] / (std::sqrt(v[i]) + cfg.adam_epsilon);
  }
}

}  // namespace

void AdamStep(ModelParams& params, const Gradients& grads, AdamState& state,
              const TrainConfig& cfg) {
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.adam_beta1, t);
  const double c2 = 1.0 - std::pow(cfg.adam_beta2, t);
  // Bias correction folded into the step size; the epsilon is scaled to
  // match m_hat / (sqrt(v_hat) + eps) exactly.
  TrainConfig scaled = cfg;
  scaled.adam_epsilon = cfg.adam_epsilon * std::sqrt(c2);
  const double lr_t = cfg.learning_rate * std::sqrt(c2) / c1;

  AdamUpdate(params.value_embedding.values(), grads.value_embedding.values(),
             state.first.value_embedding.values(),
             state.second.value_embedding.values(), scaled, lr_t);
  AdamUpdate(params.address_embedding.values(),
             grads.address_embedding.values(),
             state.first.address_embedding.values(),
             state.second.address_embedding.values(), scaled, lr_t);
  AdamUpdate(params.out_weight, grads.out_weight, state.first.out_weight,
             state.second.out_weight, scaled, lr_t);
  AdamUpdate(std::span<double>(&params.out_bias, 1),
             std::span<const double>(&grads.out_bias, 1),
             std::span<double>(&state.first.out_bias, 1),
             std::span<double>(&state.second.out_bias, 1), scaled, lr_t);

  std::ranges::fill(params.value_embedding.row(Vocabulary::kPad), 0.0);
  std::ranges::fill(params.address_embedding.row(Vocabulary::kPad), 0.0);
}

DatasetEvaluation EvaluateDataset(const std::vector<EncodedSample>& data,
                                  const ModelParams& params) {
  DatasetEvaluation ev;
  if (data.empty()) return ev;
  const std::vector<double> scores = PredictScores(data, params);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    ev.loss += Loss(scores[i], data[i].label);
    correct += (scores[i] >= 0.5 ? 1 : 0) == data[i].label;
  }
  ev.loss /= static_cast<double>(data.size());
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  return ev;
}

namespace {

bool BetterSnapshot(const Snapshot& a, const Snapshot& b) {
  if (a.train_error != b.train_error) return a.train_error < b.train_error;
  if (a.train_loss != b.train_loss) return a.train_loss < b.train_loss;
  return a.epoch < b.epoch;
}

void Offer(std::vector<Snapshot>& kept, Snapshot candidate, std::size_t k) {
  kept.push_back(std::move(candidate));
  std::ranges::sort(kept, BetterSnapshot);
  if (kept.size() > k) kept.resize(k);
}

}  // namespace

TrainResult Train(const std::vector<EncodedSample>& data, ModelParams init,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.Validate();
  if (data.empty()) throw DataError("training corpus is empty");
  init.Validate();

  std::size_t width = 1;
  for (const EncodedSample& s : data) width = std::max(width, s.width);
  const PositionTable positions(width, init.dim());

  TrainResult result;
  ModelParams params = std::move(init);
  AdamState adam = AdamState::For(params);
  Gradients grads = Gradients::ZerosLike(params);
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    try {
      for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
        const std::size_t end = std::min(order.size(), b + cfg.batch_size);
        grads.SetZero();
        for (std::size_t i = b; i < end; ++i) {
          AccumulateGradients(data[order[i]], params, positions, grads);
        }
        grads.Scale(1.0 / static_cast<double>(end - b));
        const double norm = grads.Norm();
        if (!std::isfinite(norm)) throw NumericError("non-finite gradient");
        if (cfg.grad_clip && norm > *cfg.grad_clip) {
          grads.Scale(*cfg.grad_clip / norm);
        }
        ModelParams next = params;
        AdamStep(next, grads, adam, cfg);
        next.Validate();
        params = std::move(next);
      }
    } catch (const NumericError& e) {
      result.diverged = true;
      result.divergence_message =
          "epoch " + std::to_string(epoch) + ": " + e.what();
      break;
    }

    const DatasetEvaluation ev = EvaluateDataset(data, params);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = ev.loss;
    rec.train_accuracy = ev.accuracy;
    rec.train_error = 1.0 - ev.accuracy;
    rec.seconds = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - start)
                      .count();
    if (!std::isfinite(ev.loss)) {
      result.diverged = true;
      result.divergence_message =
          "epoch " + std::to_string(epoch) + ": non-finite training loss";
      break;
    }
    result.log.push_back(rec);
    if (on_epoch) on_epoch(rec);
    Offer(result.snapshots,
          Snapshot{epoch, rec.train_error, rec.train_loss, params},
          cfg.snapshot_top_k);
  }

  if (result.diverged && result.snapshots.empty()) {
    const DatasetEvaluation ev = EvaluateDataset(data, params);
    const std::size_t epoch = result.log.empty() ? 0 : result.log.back().epoch;
    result.snapshots.push_back(
        Snapshot{epoch, 1.0 - ev.accuracy, ev.loss, params});
  }
  result.final_params = std::move(params);
  return result;
}

}  // namespace ovrun
