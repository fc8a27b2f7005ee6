#pragma once

#include <functional>
#include <vector>

#include "bcrf/types.hpp"

namespace bcrf {

// The explicit vertex family at desk scale: every labeling with a finite
// score, its arc set, and its score.
struct ExplicitFamily {
  ProblemShape shape;
  std::vector<TagSequence> sequences;
  std::vector<std::vector<int64_t>> arcs;  // arc ids used by each labeling
  std::vector<double> scores;              // <w, phi(x)>

  static ExplicitFamily build(const WeightTensor& w);
};

inline constexpr int64_t kSolverVertexGuard = 10000;

// log sum_y exp <w, y> by direct enumeration.
double oracle_logz(const WeightTensor& w);

// sum_y softmax(scores)_y * y by direct enumeration.
MarginalTensor oracle_crf_marginals(const WeightTensor& w);

struct MeanRegSolution {
  MarginalTensor q;
  double value = 0.0;
  int32_t steps = 0;
};

// Solves max_{p in simplex(Y)} <p, M^T w> + H(M p) by exponentiated-gradient
// ascent on the vertex simplex: p <- normalize(p * exp(eta * g)) with
// g_y = <w,y> + sum_a y_a (-log (Mp)_a - 1) and eta = 0.5 / ||w||_inf
// (floored at 0.05), until the objective change drops below tol. The iterates
// stay strictly positive, so the entropy gradient never hits a boundary
// singularity. q* = Mp is unique even though p is not.
MeanRegSolution oracle_meanreg(const WeightTensor& w, double tol);

// Central differences of a scalar field over the weights; -inf coordinates
// are skipped (their slot stays 0).
std::vector<double> finite_diff_grad(
    const std::function<double(const WeightTensor&)>& f, const WeightTensor& w,
    double h);

}  // namespace bcrf
