#include "bcrf/meanfield.hpp"

#include <cmath>

#include "bcrf/logspace.hpp"

namespace bcrf {

FactorizedDistribution::FactorizedDistribution(const ProblemShape& shape,
                                               std::vector<double> probs)
    : shape_(shape), probs_(std::move(probs)) {
  const size_t expected =
      static_cast<size_t>(shape_.n) * static_cast<size_t>(shape_.num_tags);
  if (probs_.size() != expected) {
    fail(ErrorKind::kInvalidArgument,
         "probability buffer has " + std::to_string(probs_.size()) +
             " entries, expected " + std::to_string(expected));
  }
  for (int32_t i = 0; i < shape_.n; ++i) {
    double sum = 0.0;
    for (int32_t t = 0; t < shape_.num_tags; ++t) {
      double p = probs_[static_cast<size_t>(i) * shape_.num_tags + t];
      if (!(p >= 0.0) || !std::isfinite(p)) {
        fail(ErrorKind::kInvalidArgument,
             "probabilities must be finite and nonnegative");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      fail(ErrorKind::kInvalidArgument,
           "row " + std::to_string(i + 1) + " sums to " + std::to_string(sum));
    }
  }
}

FactorizedDistribution FactorizedDistribution::uniform(
    const ProblemShape& shape) {
  std::vector<double> probs(
      static_cast<size_t>(shape.n) * shape.num_tags,
      1.0 / static_cast<double>(shape.num_tags));
  return FactorizedDistribution(shape, std::move(probs));
}

namespace {

void require_all_finite(const WeightTensor& w) {
  for (double v : w.values()) {
    if (is_neg_inf(v)) {
      fail(ErrorKind::kConfig,
           "mean field cannot encode forbidden transitions (-inf weight)");
    }
  }
}

}  // namespace

FactorizedDistribution mf_update(const FactorizedDistribution& r,
                                 const WeightTensor& w) {
  require_same_shape(r.shape(), w.shape());
  require_all_finite(w);
  const ProblemShape& shape = w.shape();
  const int32_t T = shape.num_tags;
  const int32_t n = shape.n;

  std::vector<double> out(static_cast<size_t>(n) * T);
  std::vector<double> message(T);
  for (int32_t i = 0; i < n; ++i) {
    for (int32_t t = 0; t < T; ++t) {
      double m = 0.0;
      if (i > 0) {  // expectation of the incoming transition score
        std::span<const double> prev = r.row(i - 1);
        for (int32_t tp = 0; tp < T; ++tp) m += prev[tp] * w.at(i - 1, tp, t);
      }
      if (i < n - 1) {  // expectation of the outgoing transition score
        std::span<const double> next = r.row(i + 1);
        for (int32_t tp = 0; tp < T; ++tp) m += next[tp] * w.at(i, t, tp);
      }
      message[t] = m;
    }
    double shift = message[0];
    for (int32_t t = 1; t < T; ++t) shift = std::max(shift, message[t]);
    double sum = 0.0;
    for (int32_t t = 0; t < T; ++t) {
      out[static_cast<size_t>(i) * T + t] = std::exp(message[t] - shift);
      sum += out[static_cast<size_t>(i) * T + t];
    }
    for (int32_t t = 0; t < T; ++t) out[static_cast<size_t>(i) * T + t] /= sum;
  }
  return FactorizedDistribution(shape, std::move(out));
}

FactorizedDistribution mf_infer(const WeightTensor& w, int32_t iters,
                                const FactorizedDistribution* init) {
  if (iters < 0) {
    fail(ErrorKind::kInvalidArgument, "iteration count must be >= 0");
  }
  require_all_finite(w);
  FactorizedDistribution r =
      init != nullptr ? *init : FactorizedDistribution::uniform(w.shape());
  for (int32_t k = 0; k < iters; ++k) r = mf_update(r, w);
  return r;
}

TagSequence mf_decode(const WeightTensor& w, int32_t iters) {
  FactorizedDistribution r = mf_infer(w, iters);
  const int32_t T = w.shape().num_tags;
  TagSequence x;
  x.tags.assign(w.shape().n, 0);
  for (int32_t i = 0; i < w.shape().n; ++i) {
    std::span<const double> row = r.row(i);
    int32_t best = 0;
    for (int32_t t = 1; t < T; ++t) {
      if (row[t] > row[best]) best = t;
    }
    x.tags[i] = best;
  }
  return x;
}

}  // namespace bcrf
