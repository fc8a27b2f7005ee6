#include "bcrf/oracle.hpp"

#include <cmath>

#include "bcrf/enumerate.hpp"
#include "bcrf/logspace.hpp"

namespace bcrf {

ExplicitFamily ExplicitFamily::build(const WeightTensor& w) {
  ExplicitFamily family;
  family.shape = w.shape();
  for (TagSequence& x : enumerate_sequences(w.shape())) {
    double s = path_score(w, x);
    if (is_neg_inf(s)) continue;  // forbidden labeling carries no mass
    std::vector<int64_t> arc_ids;
    arc_ids.reserve(w.shape().num_slices());
    for (int32_t i = 0; i < w.shape().num_slices(); ++i) {
      arc_ids.push_back(w.shape().arc(i, x.tags[i], x.tags[i + 1]));
    }
    family.sequences.push_back(std::move(x));
    family.arcs.push_back(std::move(arc_ids));
    family.scores.push_back(s);
  }
  if (family.sequences.empty()) {
    fail(ErrorKind::kInfeasible, "no labeling has finite score");
  }
  return family;
}

double oracle_logz(const WeightTensor& w) {
  ExplicitFamily family = ExplicitFamily::build(w);
  return logsumexp(family.scores);
}

MarginalTensor oracle_crf_marginals(const WeightTensor& w) {
  ExplicitFamily family = ExplicitFamily::build(w);
  const double logz = logsumexp(family.scores);
  std::vector<double> q(w.shape().arc_count(), 0.0);
  for (size_t y = 0; y < family.scores.size(); ++y) {
    const double p = std::exp(family.scores[y] - logz);
    for (int64_t a : family.arcs[y]) q[a] += p;
  }
  return MarginalTensor(w.shape(), std::move(q));
}

MeanRegSolution oracle_meanreg(const WeightTensor& w, double tol) {
  ExplicitFamily family = ExplicitFamily::build(w);
  const int64_t count = static_cast<int64_t>(family.sequences.size());
  if (count > kSolverVertexGuard) {
    fail(ErrorKind::kGuard,
         "vertex count " + std::to_string(count) +
             " exceeds the solver guard " + std::to_string(kSolverVertexGuard));
  }

  double w_norm = 0.0;
  for (double v : w.values()) {
    if (!is_neg_inf(v)) w_norm = std::max(w_norm, std::abs(v));
  }
  const double eta = std::max(0.05, w_norm > 0.0 ? 0.5 / w_norm : 0.5);

  const int64_t arc_count = w.shape().arc_count();
  std::vector<double> log_p(count, -std::log(static_cast<double>(count)));
  std::vector<double> p(count), q(arc_count), g(count);

  constexpr int32_t kMaxSteps = 100000;
  double prev_value = 0.0;
  for (int32_t step = 1; step <= kMaxSteps; ++step) {
    for (int64_t y = 0; y < count; ++y) p[y] = std::exp(log_p[y]);
    std::fill(q.begin(), q.end(), 0.0);
    double linear = 0.0;
    for (int64_t y = 0; y < count; ++y) {
      linear += p[y] * family.scores[y];
      for (int64_t a : family.arcs[y]) q[a] += p[y];
    }
    double value = linear;
    for (int64_t a = 0; a < arc_count; ++a) value += entropy_term(q[a]);

    if (step > 1 && std::abs(value - prev_value) <= tol) {
      return MeanRegSolution{MarginalTensor(w.shape(), std::move(q)), value,
                             step};
    }
    prev_value = value;

    for (int64_t y = 0; y < count; ++y) {
      double grad = family.scores[y];
      for (int64_t a : family.arcs[y]) grad += -std::log(q[a]) - 1.0;
      g[y] = grad;
    }
    double shift = kNegInf;
    for (int64_t y = 0; y < count; ++y) {
      log_p[y] += eta * g[y];
      shift = std::max(shift, log_p[y]);
    }
    double sum = 0.0;
    for (int64_t y = 0; y < count; ++y) sum += std::exp(log_p[y] - shift);
    const double log_sum = shift + std::log(sum);
    for (int64_t y = 0; y < count; ++y) log_p[y] -= log_sum;
  }
  fail(ErrorKind::kNumeric,
       "mean-regularization oracle did not converge within " +
           std::to_string(kMaxSteps) + " steps");
}

std::vector<double> finite_diff_grad(
    const std::function<double(const WeightTensor&)>& f, const WeightTensor& w,
    double h) {
  if (!(h > 0.0)) fail(ErrorKind::kInvalidArgument, "step h must be > 0");
  std::vector<double> grad(w.shape().arc_count(), 0.0);
  std::vector<double> values(w.values().begin(), w.values().end());
  for (size_t a = 0; a < values.size(); ++a) {
    if (is_neg_inf(values[a])) continue;
    const double keep = values[a];
    values[a] = keep + h;
    const double up = f(WeightTensor(w.shape(), values));
    values[a] = keep - h;
    const double down = f(WeightTensor(w.shape(), values));
    values[a] = keep;
    grad[a] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace bcrf
