#pragma once

#include <cmath>

#include "bcrf/logspace.hpp"
#include "bcrf/types.hpp"

namespace bcrf {

struct ViterbiResult {
  TagSequence tags;
  double score = 0.0;
};

// MAP sequence and its score. Ties are resolved to the lexicographically
// smallest optimal labeling (lowest tag index wins at every choice point),
// which is what scanning all sequences in lexicographic order with a strict
// ">" also yields.
ViterbiResult viterbi(const WeightTensor& w);

// Log-partition A_Y(w) via the entropy-regularized recursion: zero init row,
// one logsumexp per chart cell, final aggregation over the last row.
double forward_logz(const WeightTensor& w);

// Arc posteriors Pr[x_i = t, x_{i+1} = t'] from log-domain forward/backward
// charts. Forbidden arcs come out exactly 0.
MarginalTensor crf_marginals(const WeightTensor& w);

namespace detail {

// Chart cell kernels shared by the unbatched and batched (wavefront) paths,
// templated over an arc accessor so padded batch views run the exact same
// arithmetic and stay bitwise-identical to per-instance calls.

// logsumexp_{t'} (prev[t'] + arc(t', to)).
template <typename ArcFn>
double forward_cell_fn(int32_t num_tags, const ArcFn& arc,
                       std::span<const double> prev, int32_t to) {
  double m = kNegInf;
  for (int32_t tp = 0; tp < num_tags; ++tp) {
    m = std::max(m, log_mul(prev[tp], arc(tp, to)));
  }
  if (is_neg_inf(m)) return kNegInf;
  double sum = 0.0;
  for (int32_t tp = 0; tp < num_tags; ++tp) {
    double x = log_mul(prev[tp], arc(tp, to));
    if (!is_neg_inf(x)) sum += std::exp(x - m);
  }
  return m + std::log(sum);
}

// max_{t'} (arc(from, t') + next[t']); suffix chart direction.
template <typename ArcFn>
double viterbi_cell_fn(int32_t num_tags, const ArcFn& arc,
                       std::span<const double> next, int32_t from) {
  double m = kNegInf;
  for (int32_t tp = 0; tp < num_tags; ++tp) {
    m = std::max(m, log_mul(arc(from, tp), next[tp]));
  }
  return m;
}

// logsumexp_{t'} (arc(from, t') + next[t']); backward chart.
template <typename ArcFn>
double backward_cell_fn(int32_t num_tags, const ArcFn& arc,
                        std::span<const double> next, int32_t from) {
  double m = kNegInf;
  for (int32_t tp = 0; tp < num_tags; ++tp) {
    m = std::max(m, log_mul(arc(from, tp), next[tp]));
  }
  if (is_neg_inf(m)) return kNegInf;
  double sum = 0.0;
  for (int32_t tp = 0; tp < num_tags; ++tp) {
    double x = log_mul(arc(from, tp), next[tp]);
    if (!is_neg_inf(x)) sum += std::exp(x - m);
  }
  return m + std::log(sum);
}

double forward_cell(const WeightTensor& w, std::span<const double> prev,
                    int32_t slice, int32_t to);
double viterbi_cell(const WeightTensor& w, std::span<const double> next,
                    int32_t slice, int32_t from);
double backward_cell(const WeightTensor& w, std::span<const double> next,
                     int32_t slice, int32_t from);

}  // namespace detail

}  // namespace bcrf
