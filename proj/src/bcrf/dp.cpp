#include "bcrf/dp.hpp"

#include <cmath>

#include "bcrf/logspace.hpp"

namespace bcrf {

namespace detail {

double forward_cell(const WeightTensor& w, std::span<const double> prev,
                    int32_t slice, int32_t to) {
  return forward_cell_fn(
      w.shape().num_tags,
      [&](int32_t a, int32_t b) { return w.at(slice, a, b); }, prev, to);
}

double viterbi_cell(const WeightTensor& w, std::span<const double> next,
                    int32_t slice, int32_t from) {
  return viterbi_cell_fn(
      w.shape().num_tags,
      [&](int32_t a, int32_t b) { return w.at(slice, a, b); }, next, from);
}

double backward_cell(const WeightTensor& w, std::span<const double> next,
                     int32_t slice, int32_t from) {
  return backward_cell_fn(
      w.shape().num_tags,
      [&](int32_t a, int32_t b) { return w.at(slice, a, b); }, next, from);
}

}  // namespace detail

ViterbiResult viterbi(const WeightTensor& w) {
  require_reachable(w);
  const ProblemShape& shape = w.shape();
  const int32_t T = shape.num_tags;
  const int32_t n = shape.n;

  // Suffix chart: chart[(i-1)*T + t] is the best score achievable from
  // position i onward when position i carries tag t. Reading the path off
  // front-to-back with strict ">" picks the lexicographically smallest
  // optimal labeling.
  std::vector<double> chart(static_cast<size_t>(n) * T, 0.0);
  for (int32_t i = n - 1; i >= 1; --i) {
    std::span<const double> next(chart.data() + static_cast<size_t>(i) * T, T);
    for (int32_t t = 0; t < T; ++t) {
      chart[static_cast<size_t>(i - 1) * T + t] =
          detail::viterbi_cell(w, next, i - 1, t);
    }
  }

  ViterbiResult out;
  out.tags.tags.assign(n, 0);
  int32_t best = 0;
  for (int32_t t = 1; t < T; ++t) {
    if (chart[t] > chart[best]) best = t;
  }
  out.tags.tags[0] = best;
  out.score = chart[best];
  for (int32_t i = 1; i < n; ++i) {
    const double target = chart[static_cast<size_t>(i - 1) * T +
                                out.tags.tags[i - 1]];
    std::span<const double> next(chart.data() + static_cast<size_t>(i) * T, T);
    for (int32_t t = 0; t < T; ++t) {
      // The max equals one of its candidates bitwise, so == is exact.
      if (log_mul(w.at(i - 1, out.tags.tags[i - 1], t), next[t]) == target) {
        out.tags.tags[i] = t;
        break;
      }
    }
  }
  return out;
}

double forward_logz(const WeightTensor& w) {
  require_reachable(w);
  const ProblemShape& shape = w.shape();
  const int32_t T = shape.num_tags;

  std::vector<double> prev(T, 0.0), cur(T);
  for (int32_t slice = 0; slice < shape.num_slices(); ++slice) {
    for (int32_t t = 0; t < T; ++t) {
      cur[t] = detail::forward_cell(w, prev, slice, t);
    }
    std::swap(prev, cur);
  }
  return logsumexp(prev);
}

MarginalTensor crf_marginals(const WeightTensor& w) {
  require_reachable(w);
  const ProblemShape& shape = w.shape();
  const int32_t T = shape.num_tags;
  const int32_t n = shape.n;

  std::vector<double> alpha(static_cast<size_t>(n) * T, 0.0);
  for (int32_t i = 1; i < n; ++i) {
    std::span<const double> prev(alpha.data() + static_cast<size_t>(i - 1) * T,
                                 T);
    for (int32_t t = 0; t < T; ++t) {
      alpha[static_cast<size_t>(i) * T + t] =
          detail::forward_cell(w, prev, i - 1, t);
    }
  }
  std::vector<double> beta(static_cast<size_t>(n) * T, 0.0);
  for (int32_t i = n - 2; i >= 0; --i) {
    std::span<const double> next(beta.data() + static_cast<size_t>(i + 1) * T,
                                 T);
    for (int32_t t = 0; t < T; ++t) {
      beta[static_cast<size_t>(i) * T + t] =
          detail::backward_cell(w, next, i, t);
    }
  }
  const double logz = logsumexp(
      std::span<const double>(alpha.data() + static_cast<size_t>(n - 1) * T, T));

  std::vector<double> q(shape.arc_count());
  for (int32_t i = 0; i < shape.num_slices(); ++i) {
    for (int32_t t = 0; t < T; ++t) {
      for (int32_t tp = 0; tp < T; ++tp) {
        double lp = log_mul(alpha[static_cast<size_t>(i) * T + t],
                            log_mul(w.at(i, t, tp),
                                    beta[static_cast<size_t>(i + 1) * T + tp]));
        q[shape.arc(i, t, tp)] = log_to_linear(log_mul(lp, -logz));
      }
    }
  }
  return MarginalTensor(shape, std::move(q));
}

}  // namespace bcrf
