#pragma once

#include <cstdint>
#include <string>

#include "bcrf/error.hpp"

namespace bcrf {

// Index space of all arc-indexed tensors: (slice, from-tag, to-tag) with
// slices 0..n-2 (slice i holds the transitions between positions i+1 and
// i+2 in 1-based position numbering).
struct ProblemShape {
  int32_t n = 0;
  int32_t num_tags = 0;

  ProblemShape() = default;
  ProblemShape(int32_t n_, int32_t num_tags_) : n(n_), num_tags(num_tags_) {
    if (n < 3) {
      fail(ErrorKind::kInvalidArgument,
           "sequence length must be >= 3, got " + std::to_string(n));
    }
    if (num_tags < 1) {
      fail(ErrorKind::kInvalidArgument,
           "tag set must be non-empty, got " + std::to_string(num_tags));
    }
  }

  int32_t num_slices() const { return n - 1; }

  int64_t arc_count() const {
    return static_cast<int64_t>(num_slices()) * num_tags * num_tags;
  }

  int64_t arc(int32_t slice, int32_t from, int32_t to) const {
    return (static_cast<int64_t>(slice) * num_tags + from) * num_tags + to;
  }

  friend bool operator==(const ProblemShape&, const ProblemShape&) = default;
};

inline void require_same_shape(const ProblemShape& a, const ProblemShape& b) {
  if (!(a == b)) {
    fail(ErrorKind::kInvalidArgument,
         "shape mismatch: (" + std::to_string(a.n) + "," +
             std::to_string(a.num_tags) + ") vs (" + std::to_string(b.n) +
             "," + std::to_string(b.num_tags) + ")");
  }
}

}  // namespace bcrf
