#pragma once

#include <cstdint>
#include <vector>

#include "bcrf/types.hpp"

namespace bcrf {

// |T|^n clamped to 2^63-1; the guard input for desk-scale enumeration.
int64_t sequence_count_bound(const ProblemShape& shape);

inline constexpr int64_t kEnumerationGuard = 1000000;

// All tag sequences (respecting the mask if given), each exactly once, in
// lexicographic order. Fails if |T|^n exceeds the desk-scale guard.
std::vector<TagSequence> enumerate_sequences(
    const ProblemShape& shape, const TransitionMask* mask = nullptr);

}  // namespace bcrf
