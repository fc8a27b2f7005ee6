#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bcrf/dp.hpp"
#include "bcrf/ibp.hpp"
#include "bcrf/meanfield.hpp"

namespace bcrf {

template <typename T>
struct ItemResult {
  std::optional<T> value;
  ErrorKind error = ErrorKind::kInvalidArgument;
  std::string message;

  bool ok() const { return value.has_value(); }
};

// Wavefront execution over a batch: stages run sequentially, and every
// (item, tag) chart cell within a stage is an independent parallel unit.
// Items shorter than the longest are padded with identity arcs: a
// zero-weight funnel into tag 0 right after the true end, then zero-weight
// self-loops. The padding leaves each item's result bit-identical to a
// per-instance call. All items must share one tag set; lengths may differ.
std::vector<ItemResult<double>> batched_forward_logz(
    std::span<const WeightTensor* const> ws, int threads);

std::vector<ItemResult<ViterbiResult>> batched_viterbi(
    std::span<const WeightTensor* const> ws, int threads);

std::vector<ItemResult<MarginalTensor>> batched_crf_marginals(
    std::span<const WeightTensor* const> ws, int threads);

// Instance-level parallel maps: each item runs its own sweep/update loop.
std::vector<ItemResult<MarginalTensor>> batched_ibp_infer(
    std::span<const WeightTensor* const> ws, const IbpConfig& cfg,
    int threads);

std::vector<ItemResult<FactorizedDistribution>> batched_mf_infer(
    std::span<const WeightTensor* const> ws, int32_t iters, int threads);

}  // namespace bcrf
