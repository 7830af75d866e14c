#ifndef OVRUN_MODEL_H_
#define OVRUN_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ovrun/encoding.h"
#include "ovrun/matrix.h"

namespace ovrun {

struct ModelDims {
  std::size_t vocab_size = 0;
  std::size_t dim = 32;
  std::size_t capacity = 30;
  std::size_t hops = 3;
  bool mask_empty_slots = false;
};

// Complete learnable state of the memory network. Both embedding tables
// keep one row per token (the transpose of a d x V layout); row 0 is the
// padding token and stays zero. All hops share the two tables.
struct ModelParams {
  std::size_t hops = 3;
  std::size_t capacity = 30;
  // Extension: exclude all-padding slots from the softmax. Off by default,
  // in which case empty slots take part with logit 0.
  bool mask_empty_slots = false;
  Matrix value_embedding;
  Matrix address_embedding;
  Vector out_weight;
  double out_bias = 0.0;

  std::size_t dim() const { return value_embedding.cols(); }
  std::size_t vocab_size() const { return value_embedding.rows(); }
  ModelDims dims() const {
    return {vocab_size(), dim(), capacity, hops, mask_empty_slots};
  }

  static ModelParams Zeros(const ModelDims& dims);
  // Zero-mean Gaussian entries with standard deviation `sigma`; padding row
  // zeroed.
  static ModelParams Random(const ModelDims& dims, std::uint64_t seed,
                            double sigma = 0.1);

  // Throws ContractError on inconsistent shapes or a nonzero padding row and
  // NumericError on non-finite entries.
  void Validate() const;

  bool operator==(const ModelParams&) const = default;
};

struct HopTrace {
  std::vector<Vector> attention;  // p^1..p^K, each of length N
  std::vector<Vector> responses;  // o^1..o^K
  std::vector<Vector> queries;    // u^0..u^K
  double logit = 0.0;
  double score = 0.5;

  // score rounded to the nearest integer: 1 = safe, 0 = unsafe
  int prediction() const { return score >= 0.5 ? 1 : 0; }
};

double Logistic(double x);

// softmax(M_addr u), max-shifted. When `active` is non-empty, slots with
// active[i] == false get zero mass (unless no slot is active).
Vector Attention(std::span<const double> u, const Matrix& address,
                 const std::vector<bool>& active = {});

// sum_i p_i * value.row(i)
Vector Readout(std::span<const double> p, const Matrix& value);

// u + o
Vector HopUpdate(std::span<const double> u, std::span<const double> o);

std::vector<bool> ActiveSlots(const EncodedSample& sample);

// K hops over already encoded memory blocks.
HopTrace ForwardMemory(const EncodedMemory& memory,
                       const std::vector<bool>& active,
                       const ModelParams& params);

// Throws ContractError if the sample does not match the parameters.
HopTrace Forward(const EncodedSample& sample, const ModelParams& params);
HopTrace Forward(const EncodedSample& sample, const ModelParams& params,
                 const PositionTable& positions);

std::vector<double> PredictScores(const std::vector<EncodedSample>& samples,
                                  const ModelParams& params);

}  // namespace ovrun

#endif  // OVRUN_MODEL_H_
