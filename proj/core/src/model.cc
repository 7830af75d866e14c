#include "ovrun/model.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "ovrun/errors.h"

namespace ovrun {

ModelParams ModelParams::Zeros(const ModelDims& dims) {
  if (dims.vocab_size < 2 || dims.dim < 1 || dims.capacity < 1 ||
      dims.hops < 1) {
    throw ConfigError("model dims need V >= 2, d >= 1, N >= 1, K >= 1");
  }
  ModelParams p;
  p.hops = dims.hops;
  p.capacity = dims.capacity;
  p.mask_empty_slots = dims.mask_empty_slots;
  p.value_embedding = Matrix(dims.vocab_size, dims.dim);
  p.address_embedding = Matrix(dims.vocab_size, dims.dim);
  p.out_weight.assign(dims.dim, 0.0);
  return p;
}

ModelParams ModelParams::Random(const ModelDims& dims, std::uint64_t seed,
                                double sigma) {
  ModelParams p = Zeros(dims);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  for (double& x : p.value_embedding.values()) x = normal(rng);
  for (double& x : p.address_embedding.values()) x = normal(rng);
  for (double& x : p.out_weight) x = normal(rng);
  p.out_bias = normal(rng);
  std::ranges::fill(p.value_embedding.row(Vocabulary::kPad), 0.0);
  std::ranges::fill(p.address_embedding.row(Vocabulary::kPad), 0.0);
  return p;
}

void ModelParams::Validate() const {
  if (hops < 1) throw ContractError("hops must be >= 1");
  if (capacity < 1) throw ContractError("capacity must be >= 1");
  if (value_embedding.rows() != address_embedding.rows() ||
      value_embedding.cols() != address_embedding.cols() ||
      out_weight.size() != value_embedding.cols() ||
      value_embedding.rows() < 1) {
    throw ContractError("inconsistent parameter shapes");
  }
  for (const Matrix* m : {&value_embedding, &address_embedding}) {
    for (double x : m->row(Vocabulary::kPad)) {
      if (x != 0.0) throw ContractError("padding embedding must be zero");
    }
    for (double x : m->values()) {
      if (!std::isfinite(x)) throw NumericError("non-finite embedding entry");
    }
  }
  for (double x : out_weight) {
    if (!std::isfinite(x)) throw NumericError("non-finite output weight");
  }
  if (!std::isfinite(out_bias)) throw NumericError("non-finite output bias");
}

double Logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vector Attention(std::span<const double> u, const Matrix& address,
                 const std::vector<bool>& active) {
  const std::size_t n = address.rows();
  const bool masked =
      !active.empty() && std::find(active.begin(), active.end(), true) !=
                             active.end();
  Vector p(n, 0.0);
  double max_logit = -INFINITY;
  for (std::size_t i = 0; i < n; ++i) {
    if (masked && !active[i]) continue;
    p[i] = dot(address.row(i), u);
    max_logit = std::max(max_logit, p[i]);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (masked && !active[i]) continue;
    p[i] = std::exp(p[i] - max_logit);
    total += p[i];
  }
  for (double& x : p) x /= total;
  return p;
}

Vector Readout(std::span<const double> p, const Matrix& value) {
  Vector o(value.cols(), 0.0);
  for (std::size_t i = 0; i < value.rows(); ++i) {
    if (p[i] == 0.0) continue;
    const auto row = value.row(i);
    for (std::size_t k = 0; k < o.size(); ++k) o[k] += p[i] * row[k];
  }
  return o;
}

Vector HopUpdate(std::span<const double> u, std::span<const double> o) {
  Vector next(u.begin(), u.end());
  for (std::size_t k = 0; k < next.size(); ++k) next[k] += o[k];
  return next;
}

std::vector<bool> ActiveSlots(const EncodedSample& sample) {
  std::vector<bool> active(sample.capacity);
  for (std::size_t i = 0; i < sample.capacity; ++i) {
    active[i] = sample.story_lengths[i] > 0;
  }
  return active;
}

HopTrace ForwardMemory(const EncodedMemory& memory,
                       const std::vector<bool>& active,
                       const ModelParams& params) {
  static const std::vector<bool> kNoMask;
  const std::vector<bool>& mask = params.mask_empty_slots ? active : kNoMask;
  HopTrace trace;
  trace.queries.push_back(memory.query);
  for (std::size_t k = 0; k < params.hops; ++k) {
    const Vector& u = trace.queries.back();
    Vector p = Attention(u, memory.address, mask);
    Vector o = Readout(p, memory.value);
    trace.queries.push_back(HopUpdate(u, o));
    trace.attention.push_back(std::move(p));
    trace.responses.push_back(std::move(o));
  }
  trace.logit = dot(params.out_weight, trace.queries.back()) + params.out_bias;
  trace.score = Logistic(trace.logit);
  return trace;
}

HopTrace Forward(const EncodedSample& sample, const ModelParams& params,
                 const PositionTable& positions) {
  if (sample.capacity != params.capacity) {
    throw ContractError("sample capacity " + std::to_string(sample.capacity) +
                        " does not match model capacity " +
                        std::to_string(params.capacity));
  }
  if (positions.dim() != params.dim()) {
    throw ContractError("position table dimension mismatch");
  }
  const EncodedMemory memory = EncodeMemory(
      sample, params.value_embedding, params.address_embedding, positions);
  return ForwardMemory(memory, ActiveSlots(sample), params);
}

HopTrace Forward(const EncodedSample& sample, const ModelParams& params) {
  return Forward(sample, params,
                 PositionTable(std::max<std::size_t>(sample.width, 1),
                               params.dim()));
}

std::vector<double> PredictScores(const std::vector<EncodedSample>& samples,
                                  const ModelParams& params) {
  std::vector<double> scores;
  scores.reserve(samples.size());
  std::size_t width = 1;
  for (const EncodedSample& s : samples) width = std::max(width, s.width);
  const PositionTable positions(width, params.dim());
  for (const EncodedSample& s : samples) {
    scores.push_back(Forward(s, params, positions).score);
  }
  return scores;
}

}  // namespace ovrun
