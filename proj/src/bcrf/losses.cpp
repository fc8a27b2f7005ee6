#include "bcrf/losses.hpp"

#include "bcrf/dp.hpp"
#include "bcrf/logspace.hpp"

namespace bcrf {

namespace {

double require_feasible_gold(const WeightTensor& w, const SufficientStats& y) {
  require_same_shape(w.shape(), y.shape());
  double s = score(w, y);
  if (is_neg_inf(s)) {
    fail(ErrorKind::kInfeasible, "gold path uses a forbidden transition");
  }
  return s;
}

std::vector<double> tensor_minus_stats(const MarginalTensor& q,
                                       const SufficientStats& y) {
  std::vector<double> grad(q.values().begin(), q.values().end());
  std::span<const uint8_t> yv = y.values();
  for (size_t a = 0; a < grad.size(); ++a) grad[a] -= yv[a];
  return grad;
}

std::vector<double> tensor_minus_tensor(const MarginalTensor& a,
                                        const MarginalTensor& b) {
  std::vector<double> grad(a.values().begin(), a.values().end());
  std::span<const double> bv = b.values();
  for (size_t i = 0; i < grad.size(); ++i) grad[i] -= bv[i];
  return grad;
}

}  // namespace

LossOutput nll_loss(const WeightTensor& w, const SufficientStats& y) {
  const double gold_score = require_feasible_gold(w, y);
  const double logz = forward_logz(w);
  MarginalTensor marg = crf_marginals(w);
  LossOutput out;
  out.value = logz - gold_score;
  out.grad = tensor_minus_stats(marg, y);
  return out;
}

LossOutput fy_mean_loss(const WeightTensor& w, const SufficientStats& y,
                        const IbpConfig& cfg) {
  const double gold_score = require_feasible_gold(w, y);
  const double tau = 1.0 / cfg.tau_inverse;
  const IbpResult r = ibp_infer(w, cfg);
  LossOutput out;
  out.value = detail::mean_reg_value_unchecked(w, r.q, tau) - gold_score;
  out.grad = tensor_minus_stats(r.q, y);
  return out;
}

LossOutput partial_nll_loss(const WeightTensor& w,
                            const TransitionMask& mask) {
  const WeightTensor masked = apply_mask(w, mask);
  LossOutput out;
  out.value = forward_logz(w) - forward_logz(masked);
  out.grad = tensor_minus_tensor(crf_marginals(w), crf_marginals(masked));
  return out;
}

LossOutput partial_fy_loss(const WeightTensor& w, const TransitionMask& mask,
                           const IbpConfig& cfg) {
  const WeightTensor masked = apply_mask(w, mask);
  const double tau = 1.0 / cfg.tau_inverse;
  const IbpResult full = ibp_infer(w, cfg);
  const IbpResult restricted = ibp_infer(masked, cfg);
  LossOutput out;
  out.value = detail::mean_reg_value_unchecked(w, full.q, tau) -
              detail::mean_reg_value_unchecked(masked, restricted.q, tau);
  out.grad = tensor_minus_tensor(full.q, restricted.q);
  return out;
}

}  // namespace bcrf
