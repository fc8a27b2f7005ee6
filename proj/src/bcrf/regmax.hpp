#pragma once

#include <span>
#include <vector>

#include "bcrf/error.hpp"

namespace bcrf {

// The regularizer of the chart recursion. The recursion is proved only for
// the null regularizer (hard max) and negative entropy (logsumexp), so the
// choice is a closed enum.
enum class RegChoice {
  kHard,
  kEntropy,
};

struct RegMaxResult {
  double value = 0.0;
  std::vector<double> argweights;  // point of the simplex attaining the max
};

// Hard: (max_i v_i, one-hot at the lowest-index argmax).
// Entropy: (log sum_i exp v_i, softmax(v)), max-shifted.
// Fails on an empty or all -inf input.
RegMaxResult reg_max(std::span<const double> v, RegChoice reg);

}  // namespace bcrf
