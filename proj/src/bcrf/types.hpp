#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bcrf/shape.hpp"

namespace bcrf {

// A labeling x_1 .. x_n, one tag index per position.
struct TagSequence {
  std::vector<int32_t> tags;

  int32_t length() const { return static_cast<int32_t>(tags.size()); }
  friend bool operator==(const TagSequence&, const TagSequence&) = default;
};

void require_valid_sequence(const ProblemShape& shape, const TagSequence& x);

// Canonical parameters w. Entries may be -inf (forbidden transition) but
// never +inf or NaN.
class WeightTensor {
 public:
  WeightTensor(const ProblemShape& shape, std::vector<double> values);

  static WeightTensor zeros(const ProblemShape& shape);
  static WeightTensor constant(const ProblemShape& shape, double value);

  const ProblemShape& shape() const { return shape_; }
  double at(int32_t slice, int32_t from, int32_t to) const {
    return values_[shape_.arc(slice, from, to)];
  }
  std::span<const double> values() const { return values_; }

 private:
  ProblemShape shape_;
  std::vector<double> values_;
};

// Nonnegative arc tensor; a point in (or near) the marginal polytope.
class MarginalTensor {
 public:
  MarginalTensor(const ProblemShape& shape, std::vector<double> values);

  const ProblemShape& shape() const { return shape_; }
  double at(int32_t slice, int32_t from, int32_t to) const {
    return values_[shape_.arc(slice, from, to)];
  }
  std::span<const double> values() const { return values_; }

 private:
  ProblemShape shape_;
  std::vector<double> values_;
};

// Binary indicator tensor phi(x): exactly one arc per slice, consecutive
// slices consistent.
class SufficientStats {
 public:
  SufficientStats(const ProblemShape& shape, std::vector<uint8_t> values);

  const ProblemShape& shape() const { return shape_; }
  uint8_t at(int32_t slice, int32_t from, int32_t to) const {
    return values_[shape_.arc(slice, from, to)];
  }
  std::span<const uint8_t> values() const { return values_; }

  MarginalTensor to_marginals() const;

 private:
  ProblemShape shape_;
  std::vector<uint8_t> values_;
};

// Boolean per-arc mask for a partial-label set: a labeling is allowed iff
// every transition it uses is allowed. Rejected at construction if no
// complete allowed path exists.
class TransitionMask {
 public:
  TransitionMask(const ProblemShape& shape, std::vector<uint8_t> allowed);

  static TransitionMask all_allowed(const ProblemShape& shape);

  const ProblemShape& shape() const { return shape_; }
  bool allowed(int32_t slice, int32_t from, int32_t to) const {
    return values_[shape_.arc(slice, from, to)] != 0;
  }
  std::span<const uint8_t> values() const { return values_; }

 private:
  ProblemShape shape_;
  std::vector<uint8_t> values_;
};

struct Reachability {
  bool ok = false;
  std::string diagnostic;
};

// True iff a complete path of finite (resp. allowed) arcs exists, by boolean
// forward/backward reachability over the trellis.
Reachability validate_reachability(const WeightTensor& w);
Reachability validate_reachability(const ProblemShape& shape,
                                   std::span<const uint8_t> allowed);
Reachability validate_reachability(const TransitionMask& mask);

void require_reachable(const WeightTensor& w);

// phi(x): the binary transition-indicator tensor of x.
SufficientStats encode_sequence(const ProblemShape& shape,
                                const TagSequence& x);

// <w, y>; -inf iff y uses a forbidden arc.
double score(const WeightTensor& w, const SufficientStats& y);

// Sum of the n-1 arc weights along x (same value as score(w, phi(x))).
double path_score(const WeightTensor& w, const TagSequence& x);

// Entries where the mask forbids become -inf; result must stay reachable.
WeightTensor apply_mask(const WeightTensor& w, const TransitionMask& mask);

}  // namespace bcrf
