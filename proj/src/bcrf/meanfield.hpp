#pragma once

#include <span>
#include <vector>

#include "bcrf/types.hpp"

namespace bcrf {

// Fully factorized distribution r(x) = prod_i r_i(x_i); one probability row
// per position.
class FactorizedDistribution {
 public:
  FactorizedDistribution(const ProblemShape& shape, std::vector<double> probs);

  static FactorizedDistribution uniform(const ProblemShape& shape);

  const ProblemShape& shape() const { return shape_; }
  std::span<const double> row(int32_t position) const {
    return std::span<const double>(
        probs_.data() + static_cast<size_t>(position) * shape_.num_tags,
        shape_.num_tags);
  }
  std::span<const double> probs() const { return probs_; }

 private:
  ProblemShape shape_;
  std::vector<double> probs_;  // n x T, row-major
};

// One parallel (Jacobi) update: every position recomputed from the old
// distribution via its incoming expectation messages. Rejects any -inf
// weight: mean field cannot encode forbidden transitions.
FactorizedDistribution mf_update(const FactorizedDistribution& r,
                                 const WeightTensor& w);

// iters applications of mf_update starting from init (uniform when absent).
// No convergence guarantee; oscillation is possible and not an error.
FactorizedDistribution mf_infer(const WeightTensor& w, int32_t iters,
                                const FactorizedDistribution* init = nullptr);

// Per-position argmax readout, lowest tag index on ties.
TagSequence mf_decode(const WeightTensor& w, int32_t iters);

}  // namespace bcrf
