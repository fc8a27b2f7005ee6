#include "bcrf/ibp.hpp"

#include <cmath>

#include "bcrf/dp.hpp"
#include "bcrf/logspace.hpp"
#include "bcrf/parallel.hpp"
#include "bcrf/polytope.hpp"
#include "bcrf/trellis.hpp"

namespace bcrf {

void IbpConfig::validate() const {
  if (!(tau_inverse > 0.0) || !std::isfinite(tau_inverse)) {
    fail(ErrorKind::kInvalidArgument, "tau_inverse must be finite and > 0");
  }
  if (max_iters < 1) {
    fail(ErrorKind::kInvalidArgument, "max_iters must be >= 1");
  }
  if (!(tol >= 0.0)) {
    fail(ErrorKind::kInvalidArgument, "tol must be >= 0");
  }
}

void cluster_project(const ProblemShape& shape, std::span<double> log_iterate,
                     int32_t cluster) {
  ClusterScratch scratch;
  cluster_project(shape, log_iterate, cluster, scratch);
}

void cluster_project(const ProblemShape& shape, std::span<double> log_iterate,
                     int32_t cluster, ClusterScratch& scratch) {
  const int32_t T = shape.num_tags;
  if (cluster < 2 || cluster > shape.n - 1) {
    fail(ErrorKind::kInvalidArgument,
         "cluster " + std::to_string(cluster) + " is not interior");
  }
  const int32_t e = cluster - 2;  // entering slice, 0-based
  const int32_t l = cluster - 1;  // leaving slice

  // Duals of the KKT system: sigma(v) = (log W+(v) - log W-(v)) / 2 and the
  // normalizer log Z = logsumexp_v (log W-(v) + sigma(v)).
  scratch.log_in.resize(T);
  scratch.log_out.resize(T);
  scratch.sigma.resize(T);
  scratch.mid.resize(T);
  scratch.buf.resize(T);
  std::vector<double>& log_in = scratch.log_in;
  std::vector<double>& log_out = scratch.log_out;
  std::vector<double>& sigma = scratch.sigma;
  std::vector<double>& mid = scratch.mid;
  std::vector<double>& buf = scratch.buf;
  for (int32_t v = 0; v < T; ++v) {
    for (int32_t u = 0; u < T; ++u) buf[u] = log_iterate[shape.arc(e, u, v)];
    log_in[v] = logsumexp(buf);
    for (int32_t u = 0; u < T; ++u) buf[u] = log_iterate[shape.arc(l, v, u)];
    log_out[v] = logsumexp(buf);
    if (is_neg_inf(log_in[v]) || is_neg_inf(log_out[v])) {
      sigma[v] = kNegInf;  // dead node: flow balance forces zero mass
      mid[v] = kNegInf;
    } else {
      sigma[v] = 0.5 * (log_out[v] - log_in[v]);
      mid[v] = 0.5 * (log_out[v] + log_in[v]);
    }
  }
  const double log_z = logsumexp(mid);
  if (is_neg_inf(log_z)) {
    fail(ErrorKind::kInfeasible,
         "no finite path through cluster " + std::to_string(cluster));
  }
  for (int32_t v = 0; v < T; ++v) {
    if (is_neg_inf(sigma[v])) {
      for (int32_t u = 0; u < T; ++u) {
        log_iterate[shape.arc(e, u, v)] = kNegInf;
        log_iterate[shape.arc(l, v, u)] = kNegInf;
      }
      continue;
    }
    const double enter_shift = sigma[v] - log_z;
    const double leave_shift = -sigma[v] - log_z;
    for (int32_t u = 0; u < T; ++u) {
      double& in = log_iterate[shape.arc(e, u, v)];
      in = log_mul(in, enter_shift);
      double& out = log_iterate[shape.arc(l, v, u)];
      out = log_mul(out, leave_shift);
    }
  }
}

double parity_residual(const ProblemShape& shape,
                       std::span<const double> log_iterate, bool odd) {
  const TrellisGraph graph(shape);
  const int32_t T = shape.num_tags;
  double worst = 0.0;
  for (int32_t cluster : graph.parity_clusters(odd)) {
    const int32_t e = graph.entering_slice(cluster);
    const int32_t l = graph.leaving_slice(cluster);
    double entering = 0.0;
    for (int32_t v = 0; v < T; ++v) {
      double in = 0.0, out = 0.0;
      for (int32_t u = 0; u < T; ++u) {
        in += log_to_linear(log_iterate[shape.arc(e, u, v)]);
        out += log_to_linear(log_iterate[shape.arc(l, v, u)]);
      }
      entering += in;
      worst = std::max(worst, std::abs(in - out));
    }
    worst = std::max(worst, std::abs(entering - 1.0));
  }
  return worst;
}

namespace {

void check_finite_iterate(std::span<const double> log_iterate, int32_t sweep) {
  for (double v : log_iterate) {
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
      fail(ErrorKind::kNumeric,
           "non-finite iterate at sweep " + std::to_string(sweep));
    }
  }
}

}  // namespace

IbpResult ibp_infer(const WeightTensor& w, const IbpConfig& cfg, int threads) {
  cfg.validate();
  require_reachable(w);
  const ProblemShape& shape = w.shape();
  const TrellisGraph graph(shape);

  std::vector<double> logq(w.values().begin(), w.values().end());
  for (double& v : logq) {
    v = is_neg_inf(v) ? kNegInf : v * cfg.tau_inverse;
  }

  const std::vector<int32_t> odd = graph.parity_clusters(true);
  const std::vector<int32_t> even = graph.parity_clusters(false);

  std::vector<IbpSweepRecord> trace;
  std::vector<double> before;
  int32_t sweeps = 0;
  for (int32_t s = 1; s <= cfg.max_iters; ++s) {
    const bool odd_parity = (s % 2 == 1);  // odd clusters first
    const std::vector<int32_t>& clusters = odd_parity ? odd : even;
    if (cfg.collect_trace) before = logq;
    parallel_for(static_cast<int64_t>(clusters.size()), threads,
                 [&](int64_t begin, int64_t end) {
                   ClusterScratch scratch;
                   for (int64_t k = begin; k < end; ++k) {
                     cluster_project(shape, logq, clusters[k], scratch);
                   }
                 });
    sweeps = s;
    const bool want_residual = cfg.tol > 0.0 || cfg.collect_trace;
    double residual = 0.0;
    if (want_residual) {
      check_finite_iterate(logq, s);
      residual = parity_residual(shape, logq, !odd_parity);
    }
    if (cfg.collect_trace) {
      double delta = 0.0;
      for (size_t a = 0; a < logq.size(); ++a) {
        delta = std::max(delta, std::abs(log_to_linear(logq[a]) -
                                         log_to_linear(before[a])));
      }
      trace.push_back(IbpSweepRecord{s, odd_parity,
                                     static_cast<int32_t>(clusters.size()),
                                     residual,
                                     parity_residual(shape, logq, odd_parity),
                                     delta});
    }
    if (cfg.tol > 0.0 && residual <= cfg.tol) break;
  }

  std::vector<double> q(logq.size());
  for (size_t a = 0; a < logq.size(); ++a) q[a] = log_to_linear(logq[a]);
  return IbpResult{MarginalTensor(shape, std::move(q)), std::move(trace),
                   sweeps};
}

namespace detail {

double mean_reg_value_unchecked(const WeightTensor& w, const MarginalTensor& q,
                                double tau) {
  double linear = 0.0, entropy = 0.0;
  std::span<const double> wv = w.values();
  std::span<const double> qv = q.values();
  for (size_t a = 0; a < wv.size(); ++a) {
    linear += weighted_score_term(qv[a], wv[a]);
    entropy += entropy_term(qv[a]);
  }
  return linear + tau * entropy;
}

}  // namespace detail

double mean_reg_value(const WeightTensor& w, const MarginalTensor& q,
                      double tau, double feasibility_tol) {
  require_same_shape(w.shape(), q.shape());
  PolytopeReport report = check_polytope_membership(q, feasibility_tol);
  if (!report.pass) {
    fail(ErrorKind::kInfeasible,
         "marginals violate the polytope constraints beyond tolerance "
         "(cluster " +
             std::to_string(report.max_cluster_residual) + ", flow " +
             std::to_string(report.max_flow_residual) + ")");
  }
  return detail::mean_reg_value_unchecked(w, q, tau);
}

namespace {

bool path_allowed(const WeightTensor& w, const TagSequence& x) {
  for (int32_t i = 0; i < w.shape().num_slices(); ++i) {
    if (is_neg_inf(w.at(i, x.tags[i], x.tags[i + 1]))) return false;
  }
  return true;
}

}  // namespace

TagSequence mbr_decode(const WeightTensor& w, const IbpConfig& cfg,
                       bool repair) {
  const IbpResult result = ibp_infer(w, cfg);
  const MarginalTensor& q = result.q;
  const ProblemShape& shape = w.shape();
  const int32_t T = shape.num_tags;

  TagSequence x;
  x.tags.assign(shape.n, 0);
  for (int32_t pos = 0; pos < shape.n - 1; ++pos) {
    int32_t best = 0;
    double best_mass = kNegInf;
    for (int32_t t = 0; t < T; ++t) {
      double mass = 0.0;
      for (int32_t tp = 0; tp < T; ++tp) mass += q.at(pos, t, tp);
      if (mass > best_mass) {
        best_mass = mass;
        best = t;
      }
    }
    x.tags[pos] = best;
  }
  {
    int32_t best = 0;
    double best_mass = kNegInf;
    for (int32_t t = 0; t < T; ++t) {
      double mass = 0.0;
      for (int32_t tp = 0; tp < T; ++tp) mass += q.at(shape.n - 2, tp, t);
      if (mass > best_mass) {
        best_mass = mass;
        best = t;
      }
    }
    x.tags[shape.n - 1] = best;
  }

  if (repair && !path_allowed(w, x)) {
    std::vector<double> log_q(q.values().size());
    for (size_t a = 0; a < log_q.size(); ++a) {
      log_q[a] = q.values()[a] > 0.0 ? std::log(q.values()[a]) : kNegInf;
    }
    return viterbi(WeightTensor(shape, std::move(log_q))).tags;
  }
  return x;
}

double map_gap(const WeightTensor& w, const IbpConfig& cfg) {
  const IbpResult result = ibp_infer(w, cfg);
  const double tau = 1.0 / cfg.tau_inverse;
  const double value = detail::mean_reg_value_unchecked(w, result.q, tau);
  return value - viterbi(w).score;
}

}  // namespace bcrf
