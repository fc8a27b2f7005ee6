#pragma once

#include <span>
#include <vector>

#include "bcrf/types.hpp"

namespace bcrf {

enum class IbpMode {
  kDecode,    // approximate MAP; benchmark temperature
  kMarginal,  // training-time marginals; identity temperature
};

// The iterate is initialized as log q0 = tau^-1 * w, so the fixed point is
// grad B_Y(tau^-1 w). tol = 0 runs exactly max_iters sweeps; tol > 0 stops
// once the constraint residual of the parity NOT just projected drops below
// it.
struct IbpConfig {
  double tau_inverse = 10.0;
  int32_t max_iters = 10;
  double tol = 0.0;
  IbpMode mode = IbpMode::kDecode;
  bool collect_trace = true;

  static IbpConfig decode_defaults() { return IbpConfig{}; }
  static IbpConfig marginal_defaults() {
    return IbpConfig{1.0, 10, 0.0, IbpMode::kMarginal, true};
  }
  // Converged-iterate mode for gradient checks and oracle comparisons.
  static IbpConfig high_accuracy(double tau_inverse_) {
    return IbpConfig{tau_inverse_, 200000, 1e-12, IbpMode::kMarginal, false};
  }

  void validate() const;
};

struct IbpSweepRecord {
  int32_t sweep = 0;            // 1-based
  bool odd_parity = false;      // parity projected in this sweep
  int32_t clusters = 0;         // cluster projections executed
  double other_residual = 0.0;  // max residual of the other parity afterwards
  double own_residual = 0.0;    // residual of the parity just projected
  double max_delta = 0.0;       // max |q| change produced by the sweep
};

struct IbpResult {
  MarginalTensor q;
  std::vector<IbpSweepRecord> trace;
  int32_t sweeps = 0;
};

// Exact KL projection of the block delta(V_i) onto the cluster constraints
// (entering mass 1, per-node flow balance), performed in place on the
// log-domain iterate. Nodes with no finite entering or leaving arc are
// excluded from the normalizer and their incident arcs pinned to -inf.
void cluster_project(const ProblemShape& shape, std::span<double> log_iterate,
                     int32_t cluster);

// Reusable per-worker buffers for sweep loops.
struct ClusterScratch {
  std::vector<double> log_in, log_out, sigma, mid, buf;
};
void cluster_project(const ProblemShape& shape, std::span<double> log_iterate,
                     int32_t cluster, ClusterScratch& scratch);

// Max constraint residual over all clusters of one parity (0 if the parity
// has no clusters), measured on exp(log_iterate).
double parity_residual(const ProblemShape& shape,
                       std::span<const double> log_iterate, bool odd);

IbpResult ibp_infer(const WeightTensor& w, const IbpConfig& cfg,
                    int threads = 1);

// <q, w> + tau * H(q) with 0*log(0) = 0; rejects q infeasible beyond
// feasibility_tol. At a converged iterate this estimates tau * B_Y(w / tau).
double mean_reg_value(const WeightTensor& w, const MarginalTensor& q,
                      double tau = 1.0, double feasibility_tol = 1e-8);

namespace detail {
// Same value without the feasibility gate, for loss evaluation on
// fixed-sweep (not fully converged) iterates.
double mean_reg_value_unchecked(const WeightTensor& w, const MarginalTensor& q,
                                double tau);
}  // namespace detail

// Per-position argmax of the row (column, at the last position) marginal
// sums. May return a labeling that violates the forbidden-transition
// structure of w; with repair = true such an output is replaced by the
// Viterbi path of log q.
TagSequence mbr_decode(const WeightTensor& w, const IbpConfig& cfg,
                       bool repair = false);

// tau * B_Y(tau^-1 w) - viterbi score, estimated at the returned iterate.
// Always in [0, tau * (n-1) * 2 * ln|T|] at convergence.
double map_gap(const WeightTensor& w, const IbpConfig& cfg);

}  // namespace bcrf
