#include "bcrf/enumerate.hpp"

namespace bcrf {

int64_t sequence_count_bound(const ProblemShape& shape) {
  int64_t count = 1;
  for (int32_t i = 0; i < shape.n; ++i) {
    if (count > kEnumerationGuard) return count;  // already past the guard
    count *= shape.num_tags;
  }
  return count;
}

namespace {

void extend(const ProblemShape& shape, const TransitionMask* mask,
            std::vector<int32_t>& prefix, std::vector<TagSequence>& out) {
  const int32_t pos = static_cast<int32_t>(prefix.size());
  if (pos == shape.n) {
    out.push_back(TagSequence{prefix});
    return;
  }
  for (int32_t t = 0; t < shape.num_tags; ++t) {
    if (pos > 0 && mask != nullptr &&
        !mask->allowed(pos - 1, prefix.back(), t)) {
      continue;
    }
    prefix.push_back(t);
    extend(shape, mask, prefix, out);
    prefix.pop_back();
  }
}

}  // namespace

std::vector<TagSequence> enumerate_sequences(const ProblemShape& shape,
                                             const TransitionMask* mask) {
  if (mask != nullptr) require_same_shape(shape, mask->shape());
  int64_t bound = sequence_count_bound(shape);
  if (bound > kEnumerationGuard) {
    fail(ErrorKind::kGuard,
         "enumeration guard exceeded: |T|^n > " +
             std::to_string(kEnumerationGuard));
  }
  std::vector<TagSequence> out;
  std::vector<int32_t> prefix;
  prefix.reserve(shape.n);
  extend(shape, mask, prefix, out);
  return out;
}

}  // namespace bcrf
