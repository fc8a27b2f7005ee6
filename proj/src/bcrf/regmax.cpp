#include "bcrf/regmax.hpp"

#include <cmath>

#include "bcrf/logspace.hpp"

namespace bcrf {

RegMaxResult reg_max(std::span<const double> v, RegChoice reg) {
  if (v.empty()) {
    fail(ErrorKind::kInvalidArgument, "reg_max of an empty vector");
  }
  size_t best = 0;
  double m = v[0];
  for (size_t i = 1; i < v.size(); ++i) {
    if (v[i] > m) {  // strict: ties keep the lowest index
      m = v[i];
      best = i;
    }
  }
  if (is_neg_inf(m)) {
    fail(ErrorKind::kInvalidArgument, "reg_max of an all -inf vector");
  }

  RegMaxResult out;
  out.argweights.assign(v.size(), 0.0);
  if (reg == RegChoice::kHard) {
    out.value = m;
    out.argweights[best] = 1.0;
    return out;
  }
  double sum = 0.0;
  for (size_t i = 0; i < v.size(); ++i) {
    double e = is_neg_inf(v[i]) ? 0.0 : std::exp(v[i] - m);
    out.argweights[i] = e;
    sum += e;
  }
  for (double& p : out.argweights) p /= sum;
  out.value = m + std::log(sum);
  return out;
}

}  // namespace bcrf
