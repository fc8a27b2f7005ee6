#include "bcrf/types.hpp"

#include <cmath>

#include "bcrf/logspace.hpp"

namespace bcrf {

namespace {

void check_size(const ProblemShape& shape, size_t count) {
  if (static_cast<int64_t>(count) != shape.arc_count()) {
    fail(ErrorKind::kInvalidArgument,
         "value buffer has " + std::to_string(count) + " entries, expected " +
             std::to_string(shape.arc_count()));
  }
}

}  // namespace

void require_valid_sequence(const ProblemShape& shape, const TagSequence& x) {
  if (x.length() != shape.n) {
    fail(ErrorKind::kInvalidArgument,
         "tag sequence has length " + std::to_string(x.length()) +
             ", expected " + std::to_string(shape.n));
  }
  for (int32_t t : x.tags) {
    if (t < 0 || t >= shape.num_tags) {
      fail(ErrorKind::kInvalidArgument,
           "tag index " + std::to_string(t) + " out of range");
    }
  }
}

WeightTensor::WeightTensor(const ProblemShape& shape,
                           std::vector<double> values)
    : shape_(shape), values_(std::move(values)) {
  check_size(shape_, values_.size());
  for (double v : values_) {
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
      fail(ErrorKind::kInvalidArgument,
           "weight entries must be finite or -inf");
    }
  }
}

WeightTensor WeightTensor::zeros(const ProblemShape& shape) {
  return constant(shape, 0.0);
}

WeightTensor WeightTensor::constant(const ProblemShape& shape, double value) {
  return WeightTensor(shape, std::vector<double>(shape.arc_count(), value));
}

MarginalTensor::MarginalTensor(const ProblemShape& shape,
                               std::vector<double> values)
    : shape_(shape), values_(std::move(values)) {
  check_size(shape_, values_.size());
  for (double v : values_) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      fail(ErrorKind::kInvalidArgument,
           "marginal entries must be finite and nonnegative");
    }
  }
}

SufficientStats::SufficientStats(const ProblemShape& shape,
                                 std::vector<uint8_t> values)
    : shape_(shape), values_(std::move(values)) {
  check_size(shape_, values_.size());
  const int32_t T = shape_.num_tags;
  // Exactly one arc per slice, and the tag ending slice i must start slice
  // i+1 (otherwise the tensor corresponds to no labeling).
  int32_t prev_to = -1;
  for (int32_t i = 0; i < shape_.num_slices(); ++i) {
    int32_t from = -1, to = -1, ones = 0;
    for (int32_t t = 0; t < T; ++t) {
      for (int32_t tp = 0; tp < T; ++tp) {
        uint8_t v = values_[shape_.arc(i, t, tp)];
        if (v > 1) {
          fail(ErrorKind::kInvalidArgument, "indicator entries must be 0/1");
        }
        if (v == 1) {
          ++ones;
          from = t;
          to = tp;
        }
      }
    }
    if (ones != 1) {
      fail(ErrorKind::kInvalidArgument,
           "slice " + std::to_string(i + 1) + " has " + std::to_string(ones) +
               " set arcs, expected exactly 1");
    }
    if (i > 0 && from != prev_to) {
      fail(ErrorKind::kInvalidArgument,
           "slices " + std::to_string(i) + " and " + std::to_string(i + 1) +
               " disagree on the shared tag");
    }
    prev_to = to;
  }
}

MarginalTensor SufficientStats::to_marginals() const {
  std::vector<double> q(values_.begin(), values_.end());
  return MarginalTensor(shape_, std::move(q));
}

TransitionMask::TransitionMask(const ProblemShape& shape,
                               std::vector<uint8_t> allowed)
    : shape_(shape), values_(std::move(allowed)) {
  check_size(shape_, values_.size());
  Reachability r = validate_reachability(shape_, values_);
  if (!r.ok) {
    fail(ErrorKind::kInfeasible, "mask admits no complete path: " + r.diagnostic);
  }
}

TransitionMask TransitionMask::all_allowed(const ProblemShape& shape) {
  return TransitionMask(shape, std::vector<uint8_t>(shape.arc_count(), 1));
}

namespace {

// Shared boolean forward/backward pass; an arc is usable iff pred(slice,
// from, to) holds.
template <typename Pred>
Reachability reachability_impl(const ProblemShape& shape, Pred usable) {
  const int32_t T = shape.num_tags;
  const int32_t n = shape.n;
  std::vector<uint8_t> fwd(T, 1);  // position 1: every start tag available
  for (int32_t i = 0; i < shape.num_slices(); ++i) {
    std::vector<uint8_t> next(T, 0);
    bool any = false;
    for (int32_t t = 0; t < T; ++t) {
      if (!fwd[t]) continue;
      for (int32_t tp = 0; tp < T; ++tp) {
        if (usable(i, t, tp)) {
          next[tp] = 1;
          any = true;
        }
      }
    }
    if (!any) {
      return {false, "no usable arc reaches position " + std::to_string(i + 2)};
    }
    fwd = std::move(next);
  }
  // The forward pass alone decides existence on a chain trellis; n >= 3 is
  // already guaranteed by the shape.
  (void)n;
  return {true, ""};
}

}  // namespace

Reachability validate_reachability(const WeightTensor& w) {
  return reachability_impl(w.shape(), [&](int32_t i, int32_t t, int32_t tp) {
    return !is_neg_inf(w.at(i, t, tp));
  });
}

Reachability validate_reachability(const ProblemShape& shape,
                                   std::span<const uint8_t> allowed) {
  return reachability_impl(shape, [&](int32_t i, int32_t t, int32_t tp) {
    return allowed[shape.arc(i, t, tp)] != 0;
  });
}

Reachability validate_reachability(const TransitionMask& mask) {
  return validate_reachability(mask.shape(), mask.values());
}

void require_reachable(const WeightTensor& w) {
  Reachability r = validate_reachability(w);
  if (!r.ok) {
    fail(ErrorKind::kInfeasible,
         "weights admit no finite-score path: " + r.diagnostic);
  }
}

SufficientStats encode_sequence(const ProblemShape& shape,
                                const TagSequence& x) {
  require_valid_sequence(shape, x);
  std::vector<uint8_t> values(shape.arc_count(), 0);
  for (int32_t i = 0; i < shape.num_slices(); ++i) {
    values[shape.arc(i, x.tags[i], x.tags[i + 1])] = 1;
  }
  return SufficientStats(shape, std::move(values));
}

double score(const WeightTensor& w, const SufficientStats& y) {
  require_same_shape(w.shape(), y.shape());
  double total = 0.0;
  std::span<const double> wv = w.values();
  std::span<const uint8_t> yv = y.values();
  for (size_t a = 0; a < wv.size(); ++a) {
    if (yv[a]) {
      if (is_neg_inf(wv[a])) return kNegInf;
      total += wv[a];
    }
  }
  return total;
}

double path_score(const WeightTensor& w, const TagSequence& x) {
  require_valid_sequence(w.shape(), x);
  double total = 0.0;
  for (int32_t i = 0; i < w.shape().num_slices(); ++i) {
    double arc = w.at(i, x.tags[i], x.tags[i + 1]);
    if (is_neg_inf(arc)) return kNegInf;
    total += arc;
  }
  return total;
}

WeightTensor apply_mask(const WeightTensor& w, const TransitionMask& mask) {
  require_same_shape(w.shape(), mask.shape());
  std::vector<double> out(w.values().begin(), w.values().end());
  std::span<const uint8_t> allowed = mask.values();
  for (size_t a = 0; a < out.size(); ++a) {
    if (!allowed[a]) out[a] = kNegInf;
  }
  WeightTensor masked(w.shape(), std::move(out));
  require_reachable(masked);
  return masked;
}

}  // namespace bcrf
