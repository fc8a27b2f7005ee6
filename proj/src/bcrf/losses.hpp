#pragma once

#include <vector>

#include "bcrf/ibp.hpp"
#include "bcrf/types.hpp"

namespace bcrf {

struct LossOutput {
  double value = 0.0;
  std::vector<double> grad;  // same index space as the weights
};

// CRF negative log-likelihood: -<w, y> + A_Y(w); gradient -y + grad A_Y(w).
LossOutput nll_loss(const WeightTensor& w, const SufficientStats& y);

// Mean-regularized Fenchel-Young loss: -<w, y> - tau*H(y) + tau*B_Y(w/tau)
// with H(y) exactly 0 on binary y; gradient -y + grad B_Y(w/tau), both from
// a single IBP run at the configured budget. Training uses tau = 1.
LossOutput fy_mean_loss(const WeightTensor& w, const SufficientStats& y,
                        const IbpConfig& cfg);

// Marginalized NLL over the partial-label set: A_Y(w) - A_Ytilde(w).
LossOutput partial_nll_loss(const WeightTensor& w, const TransitionMask& mask);

// Partial Fenchel-Young loss: B_Y(w) - B_Ytilde(w); exactly two IBP runs.
LossOutput partial_fy_loss(const WeightTensor& w, const TransitionMask& mask,
                           const IbpConfig& cfg);

}  // namespace bcrf
