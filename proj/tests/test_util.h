#ifndef OVRUN_TESTS_TEST_UTIL_H_
#define OVRUN_TESTS_TEST_UTIL_H_

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>

#include "ovrun/encoding.h"
#include "ovrun/model.h"
#include "ovrun/training.h"

namespace ovrun::testing {

// A random sample over token ids 2..vocab-1 with `lines` filled slots out of
// `capacity`, each line 1..width words long.
inline EncodedSample RandomEncodedSample(std::mt19937_64& rng,
                                         std::size_t vocab,
                                         std::size_t capacity,
                                         std::size_t lines, std::size_t width,
                                         int label) {
  EncodedSample s;
  s.capacity = capacity;
  s.width = width;
  s.story_ids.assign(capacity * width, Vocabulary::kPad);
  s.story_lengths.assign(capacity, 0);
  s.query_ids.assign(width, Vocabulary::kPad);
  s.label = label;
  s.num_lines = lines;
  std::uniform_int_distribution<TokenId> tok(2, static_cast<TokenId>(vocab - 1));
  std::uniform_int_distribution<std::size_t> len(1, width);
  for (std::size_t i = 0; i < lines; ++i) {
    s.story_lengths[i] = len(rng);
    for (std::size_t j = 0; j < s.story_lengths[i]; ++j) {
      s.story_ids[i * width + j] = tok(rng);
    }
  }
  s.query_length = len(rng);
  for (std::size_t j = 0; j < s.query_length; ++j) s.query_ids[j] = tok(rng);
  return s;
}

// Loss of `params` on `sample` through the plain forward pass.
inline double ForwardLoss(const EncodedSample& sample,
                          const ModelParams& params) {
  return Loss(Forward(sample, params).score, sample.label);
}

// Five-point central differences of ForwardLoss for every parameter, laid
// out like Gradients. Independent of Backward by construction. Truncation
// error is O(step^4), so a fairly large step keeps rounding noise small.
inline Gradients NumericGradients(const EncodedSample& sample,
                                  const ModelParams& params,
                                  double step = 1e-3) {
  Gradients g = Gradients::ZerosLike(params);
  ModelParams p = params;
  auto diff = [&](double& x) {
    const double saved = x;
    auto at = [&](double offset) {
      x = saved + offset;
      return ForwardLoss(sample, p);
    };
    const double d = (at(-2 * step) - 8.0 * at(-step) + 8.0 * at(step) -
                      at(2 * step)) /
                     (12.0 * step);
    x = saved;
    return d;
  };
  for (std::size_t i = 0; i < p.value_embedding.size(); ++i) {
    g.value_embedding.values()[i] = diff(p.value_embedding.values()[i]);
    g.address_embedding.values()[i] = diff(p.address_embedding.values()[i]);
  }
  for (std::size_t i = 0; i < p.out_weight.size(); ++i) {
    g.out_weight[i] = diff(p.out_weight[i]);
  }
  g.out_bias = diff(p.out_bias);
  return g;
}

// Largest |a - n| / max(|a|, |n|) over all entries. Entries where both sides
// are below `floor` in magnitude are compared absolutely instead, since
// their ratio is dominated by rounding.
inline double MaxRelativeError(const Gradients& analytic,
                               const Gradients& numeric,
                               double floor = 1e-7) {
  double worst = 0.0;
  auto visit = [&](double a, double n) {
    const double scale = std::max(std::abs(a), std::abs(n));
    const double err = scale < floor ? std::abs(a - n) : std::abs(a - n) / scale;
    worst = std::max(worst, err);
  };
  for (std::size_t i = 0; i < analytic.value_embedding.size(); ++i) {
    visit(analytic.value_embedding.values()[i],
          numeric.value_embedding.values()[i]);
    visit(analytic.address_embedding.values()[i],
          numeric.address_embedding.values()[i]);
  }
  for (std::size_t i = 0; i < analytic.out_weight.size(); ++i) {
    visit(analytic.out_weight[i], numeric.out_weight[i]);
  }
  visit(analytic.out_bias, numeric.out_bias);
  return worst;
}

}  // namespace ovrun::testing

#endif  // OVRUN_TESTS_TEST_UTIL_H_
