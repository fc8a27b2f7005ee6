#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bcrf/dp.hpp"
#include "bcrf/ibp.hpp"
#include "bcrf/oracle.hpp"
#include "bcrf/polytope.hpp"
#include "test_util.hpp"

using namespace bcrf;
using testutil::Rng;

namespace {

// Independent KL projector for one cluster block. The feasible block vectors
// are exactly the (entering, leaving) marginals of distributions over two-arc
// paths (u, v, w) through the cluster, so exponentiated-gradient descent
// over that lifted simplex is a generic convex solver that never touches the
// closed-form duals.
struct BlockProjection {
  std::vector<double> entering;  // T*T, linear domain
  std::vector<double> leaving;
};

BlockProjection block_kl_oracle(int32_t T,
                                std::span<const double> log_enter_target,
                                std::span<const double> log_leave_target,
                                int iters, double eta) {
  struct Triple {
    int32_t u, v, w;
  };
  std::vector<Triple> triples;
  for (int32_t u = 0; u < T; ++u) {
    for (int32_t v = 0; v < T; ++v) {
      if (is_neg_inf(log_enter_target[u * T + v])) continue;
      for (int32_t w = 0; w < T; ++w) {
        if (is_neg_inf(log_leave_target[v * T + w])) continue;
        triples.push_back({u, v, w});
      }
    }
  }
  REQUIRE(!triples.empty());
  std::vector<double> log_p(triples.size(),
                            -std::log(static_cast<double>(triples.size())));
  std::vector<double> qe(T * T), ql(T * T), p(triples.size());
  for (int it = 0; it < iters; ++it) {
    std::fill(qe.begin(), qe.end(), 0.0);
    std::fill(ql.begin(), ql.end(), 0.0);
    for (size_t k = 0; k < triples.size(); ++k) {
      p[k] = std::exp(log_p[k]);
      qe[triples[k].u * T + triples[k].v] += p[k];
      ql[triples[k].v * T + triples[k].w] += p[k];
    }
    double shift = kNegInf;
    for (size_t k = 0; k < triples.size(); ++k) {
      const Triple& tr = triples[k];
      const double grad =
          (std::log(qe[tr.u * T + tr.v]) - log_enter_target[tr.u * T + tr.v]) +
          (std::log(ql[tr.v * T + tr.w]) - log_leave_target[tr.v * T + tr.w]);
      log_p[k] -= eta * grad;
      shift = std::max(shift, log_p[k]);
    }
    double sum = 0.0;
    for (double lp : log_p) sum += std::exp(lp - shift);
    const double log_sum = shift + std::log(sum);
    for (double& lp : log_p) lp -= log_sum;
  }
  std::fill(qe.begin(), qe.end(), 0.0);
  std::fill(ql.begin(), ql.end(), 0.0);
  for (size_t k = 0; k < triples.size(); ++k) {
    const double pk = std::exp(log_p[k]);
    qe[triples[k].u * T + triples[k].v] += pk;
    ql[triples[k].v * T + triples[k].w] += pk;
  }
  return BlockProjection{std::move(qe), std::move(ql)};
}

double linear_parity_residual(const MarginalTensor& q, bool odd) {
  const ProblemShape& shape = q.shape();
  double worst = 0.0;
  for (int32_t cluster = 2; cluster <= shape.n - 1; ++cluster) {
    if ((cluster % 2 == 1) != odd) continue;
    double entering = 0.0;
    for (int32_t v = 0; v < shape.num_tags; ++v) {
      double in = 0.0, out = 0.0;
      for (int32_t u = 0; u < shape.num_tags; ++u) {
        in += q.at(cluster - 2, u, v);
        out += q.at(cluster - 1, v, u);
      }
      entering += in;
      worst = std::max(worst, std::abs(in - out));
    }
    worst = std::max(worst, std::abs(entering - 1.0));
  }
  return worst;
}

WeightTensor scaled(const WeightTensor& w, double factor) {
  return testutil::scale_weights(w, factor);
}

}  // namespace

TEST_CASE("cluster_project solves the symmetric block exactly") {
  ProblemShape shape(4, 2);
  std::vector<double> logq(shape.arc_count(), 0.0);
  cluster_project(shape, logq, 2);
  for (int32_t t = 0; t < 2; ++t) {
    for (int32_t tp = 0; tp < 2; ++tp) {
      CHECK(std::exp(logq[shape.arc(0, t, tp)]) == doctest::Approx(0.25));
      CHECK(std::exp(logq[shape.arc(1, t, tp)]) == doctest::Approx(0.25));
    }
  }
}

TEST_CASE("cluster_project zeroes dead nodes") {
  ProblemShape shape(4, 2);
  std::vector<double> logq(shape.arc_count(), 0.0);
  // node v = 1 of cluster 2 loses all entering arcs
  logq[shape.arc(0, 0, 1)] = kNegInf;
  logq[shape.arc(0, 1, 1)] = kNegInf;
  cluster_project(shape, logq, 2);
  CHECK(is_neg_inf(logq[shape.arc(1, 1, 0)]));
  CHECK(is_neg_inf(logq[shape.arc(1, 1, 1)]));
  // surviving node carries all the mass
  CHECK(std::exp(logq[shape.arc(0, 0, 0)]) == doctest::Approx(0.5));
  CHECK(std::exp(logq[shape.arc(0, 1, 0)]) == doctest::Approx(0.5));
  CHECK(std::exp(logq[shape.arc(1, 0, 0)]) == doctest::Approx(0.5));
  CHECK(std::exp(logq[shape.arc(1, 0, 1)]) == doctest::Approx(0.5));
}

TEST_CASE("cluster_project rejects boundary clusters and dead blocks") {
  ProblemShape shape(4, 2);
  std::vector<double> logq(shape.arc_count(), 0.0);
  CHECK_THROWS_AS(cluster_project(shape, logq, 1), Error);
  CHECK_THROWS_AS(cluster_project(shape, logq, 4), Error);
  std::vector<double> dead(shape.arc_count(), kNegInf);
  CHECK_THROWS_AS(cluster_project(shape, dead, 2), Error);
}

TEST_CASE("cluster_project matches the lifted-simplex solver") {
  Rng rng(211);
  for (int32_t T : {2, 3}) {
    ProblemShape shape(4, T);
    for (int k = 0; k < 6; ++k) {
      std::vector<double> logq(shape.arc_count());
      for (double& v : logq) v = rng.normal(1.5);
      if (k % 3 == 2) {
        // sprinkle a few forbidden arcs while keeping the block alive
        logq[shape.arc(0, 0, T - 1)] = kNegInf;
        logq[shape.arc(1, T - 1, 0)] = kNegInf;
      }
      std::vector<double> enter_target(T * T), leave_target(T * T);
      for (int32_t a = 0; a < T; ++a) {
        for (int32_t b = 0; b < T; ++b) {
          enter_target[a * T + b] = logq[shape.arc(0, a, b)];
          leave_target[a * T + b] = logq[shape.arc(1, a, b)];
        }
      }
      BlockProjection expected =
          block_kl_oracle(T, enter_target, leave_target, 120000, 0.05);

      cluster_project(shape, logq, 2);
      for (int32_t a = 0; a < T; ++a) {
        for (int32_t b = 0; b < T; ++b) {
          CHECK(std::abs(std::exp(logq[shape.arc(0, a, b)]) -
                         expected.entering[a * T + b]) <= 1e-8);
          CHECK(std::abs(std::exp(logq[shape.arc(1, a, b)]) -
                         expected.leaving[a * T + b]) <= 1e-8);
        }
      }
    }
  }
}

TEST_CASE("ibp on zero weights reaches the uniform point immediately") {
  for (int32_t n : {3, 4, 5, 6}) {
    ProblemShape shape(n, 2);
    WeightTensor zero = WeightTensor::zeros(shape);
    IbpConfig cfg;
    cfg.tau_inverse = 7.0;
    cfg.max_iters = 2;  // one sweep per parity
    IbpResult r = ibp_infer(zero, cfg);
    for (double q : r.q.values()) CHECK(q == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(linear_parity_residual(r.q, true) <= 1e-12);
    CHECK(linear_parity_residual(r.q, false) <= 1e-12);
  }
}

TEST_CASE("single interior cluster is solved by one projection") {
  Rng rng(223);
  ProblemShape shape(3, 3);
  for (int k = 0; k < 10; ++k) {
    WeightTensor w = testutil::random_weights(rng, shape, 2.0);
    IbpConfig cfg = IbpConfig::marginal_defaults();
    cfg.max_iters = 2;  // odd parity is empty at n = 3
    IbpResult r = ibp_infer(w, cfg);

    // At n = 3 the whole problem is one cluster projection, so the
    // lifted-simplex projector is an exact-problem oracle here.
    std::vector<double> enter_target(9), leave_target(9);
    for (int32_t a = 0; a < 3; ++a) {
      for (int32_t b = 0; b < 3; ++b) {
        enter_target[a * 3 + b] = w.at(0, a, b);
        leave_target[a * 3 + b] = w.at(1, a, b);
      }
    }
    BlockProjection expected =
        block_kl_oracle(3, enter_target, leave_target, 150000, 0.05);
    for (int32_t a = 0; a < 3; ++a) {
      for (int32_t b = 0; b < 3; ++b) {
        CHECK(std::abs(r.q.at(0, a, b) - expected.entering[a * 3 + b]) <=
              1e-8);
        CHECK(std::abs(r.q.at(1, a, b) - expected.leaving[a * 3 + b]) <= 1e-8);
      }
    }
    // and the generic mean-regularization solver agrees at its own precision
    MeanRegSolution sol = oracle_meanreg(w, 1e-12);
    CHECK(testutil::max_abs_diff(r.q.values(), sol.q.values()) <= 1e-5);
  }
}

TEST_CASE("converged ibp matches the convex oracle") {
  Rng rng(227);
  for (int k = 0; k < 30; ++k) {
    ProblemShape shape(static_cast<int32_t>(rng.uniform_int(3, 6)),
                       static_cast<int32_t>(rng.uniform_int(2, 3)));
    WeightTensor w = testutil::random_weights(rng, shape, 2.0);
    if (k % 5 == 0) {
      w = apply_mask(w, testutil::random_reachable_mask(rng, shape, 0.7));
    }
    const double tau_inverse = (k % 3 == 0) ? 10.0 : 1.0;
    IbpConfig cfg = IbpConfig::high_accuracy(tau_inverse);
    IbpResult r = ibp_infer(w, cfg);
    MeanRegSolution sol = oracle_meanreg(scaled(w, tau_inverse), 1e-12);
    CHECK(testutil::max_abs_diff(r.q.values(), sol.q.values()) <= 1e-5);
    for (int64_t a = 0; a < shape.arc_count(); ++a) {
      if (is_neg_inf(w.values()[a])) CHECK(r.q.values()[a] == 0.0);
    }
  }
}

TEST_CASE("each sweep satisfies its own parity exactly") {
  Rng rng(229);
  ProblemShape shape(7, 3);
  WeightTensor w = testutil::random_weights(rng, shape, 2.0);
  for (int32_t k = 1; k <= 6; ++k) {
    IbpConfig cfg = IbpConfig::marginal_defaults();
    cfg.max_iters = k;
    IbpResult r = ibp_infer(w, cfg);
    const bool last_odd = (k % 2 == 1);
    CHECK(linear_parity_residual(r.q, last_odd) <= 1e-12);
  }
}

TEST_CASE("masked arcs stay at exactly zero across iterations") {
  Rng rng(233);
  ProblemShape shape(6, 3);
  WeightTensor w = apply_mask(testutil::random_weights(rng, shape, 2.0),
                              testutil::random_reachable_mask(rng, shape, 0.6));
  for (int32_t k = 1; k <= 8; ++k) {
    IbpConfig cfg = IbpConfig::marginal_defaults();
    cfg.max_iters = k;
    IbpResult r = ibp_infer(w, cfg);
    for (int64_t a = 0; a < shape.arc_count(); ++a) {
      if (is_neg_inf(w.values()[a])) CHECK(r.q.values()[a] == 0.0);
    }
  }
}

TEST_CASE("projection is idempotent at the fixed point") {
  Rng rng(239);
  ProblemShape shape(6, 2);
  WeightTensor w = testutil::random_weights(rng, shape, 2.0);
  IbpConfig tight = IbpConfig::high_accuracy(1.0);
  tight.collect_trace = true;
  IbpResult converged = ibp_infer(w, tight);

  IbpConfig more = IbpConfig::marginal_defaults();
  more.max_iters = converged.sweeps + 2;
  more.tol = 0.0;
  IbpResult extended = ibp_infer(w, more);
  REQUIRE(extended.trace.size() == static_cast<size_t>(converged.sweeps + 2));
  CHECK(extended.trace[converged.sweeps].max_delta <= 1e-12);
  CHECK(extended.trace[converged.sweeps + 1].max_delta <= 1e-12);
}

TEST_CASE("desk-scale convergence within 500 sweeps") {
  Rng rng(241);
  for (int k = 0; k < 100; ++k) {
    ProblemShape shape(static_cast<int32_t>(rng.uniform_int(3, 12)),
                       static_cast<int32_t>(rng.uniform_int(2, 4)));
    WeightTensor w = testutil::random_weights(rng, shape, 2.0);
    IbpConfig cfg = IbpConfig::marginal_defaults();
    cfg.max_iters = 500;
    cfg.collect_trace = true;
    IbpResult r = ibp_infer(w, cfg);
    bool settled = false;
    for (const IbpSweepRecord& rec : r.trace) {
      if (rec.sweep >= 2 && rec.max_delta < 1e-8) {
        settled = true;
        break;
      }
    }
    CHECK(settled);
  }
}

TEST_CASE("trace records the odd-first sweep order") {
  ProblemShape shape(6, 2);
  Rng rng(251);
  WeightTensor w = testutil::random_weights(rng, shape, 1.0);
  IbpConfig cfg = IbpConfig::marginal_defaults();
  cfg.max_iters = 4;
  IbpResult r = ibp_infer(w, cfg);
  REQUIRE(r.trace.size() == 4);
  CHECK(r.trace[0].odd_parity);       // V_3, V_5
  CHECK(r.trace[0].clusters == 2);
  CHECK_FALSE(r.trace[1].odd_parity);  // V_2, V_4
  CHECK(r.trace[1].clusters == 2);
  CHECK(r.trace[2].odd_parity);
}

TEST_CASE("cluster parallelism does not change the iterate") {
  Rng rng(281);
  ProblemShape shape(9, 3);
  WeightTensor w = testutil::random_weights(rng, shape, 2.0);
  IbpConfig cfg = IbpConfig::marginal_defaults();
  IbpResult serial = ibp_infer(w, cfg, 1);
  IbpResult parallel = ibp_infer(w, cfg, 4);
  CHECK(testutil::max_abs_diff(serial.q.values(), parallel.q.values()) == 0.0);
}

TEST_CASE("mean_reg_value on uniform point, vertices and random instances") {
  ProblemShape shape(3, 2);
  MarginalTensor uniform(shape, std::vector<double>(shape.arc_count(), 0.25));
  CHECK(mean_reg_value(WeightTensor::zeros(shape), uniform) ==
        doctest::Approx(4.0 * std::log(2.0)).epsilon(1e-14));

  Rng rng(257);
  WeightTensor w = testutil::random_weights(rng, shape, 2.0);
  TagSequence x = testutil::random_sequence(rng, shape);
  SufficientStats y = encode_sequence(shape, x);
  CHECK(mean_reg_value(w, y.to_marginals()) == score(w, y));

  for (int k = 0; k < 10; ++k) {
    ProblemShape s(static_cast<int32_t>(rng.uniform_int(3, 5)),
                   static_cast<int32_t>(rng.uniform_int(2, 3)));
    WeightTensor wk = testutil::random_weights(rng, s, 2.0);
    IbpResult r = ibp_infer(wk, IbpConfig::high_accuracy(1.0));
    MeanRegSolution sol = oracle_meanreg(wk, 1e-12);
    CHECK(std::abs(mean_reg_value(wk, r.q) - sol.value) <= 1e-6);
  }

  std::vector<double> bad(shape.arc_count(), 0.5);
  CHECK_THROWS_AS(mean_reg_value(w, MarginalTensor(shape, bad)), Error);
}

TEST_CASE("mbr decoding follows strong signals and tie-breaks low") {
  ProblemShape shape(4, 3);
  Rng rng(263);
  WeightTensor w = testutil::random_weights(rng, shape, 2.0);
  TagSequence x = testutil::random_sequence(rng, shape);
  WeightTensor only_x = apply_mask(w, testutil::singleton_mask(shape, x));
  CHECK(mbr_decode(only_x, IbpConfig::decode_defaults()).tags == x.tags);

  // +10 on one chosen path dominates: MBR equals Viterbi.
  TagSequence favored = testutil::random_sequence(rng, shape);
  std::vector<double> boosted(shape.arc_count(), 0.0);
  for (int32_t i = 0; i < shape.num_slices(); ++i) {
    boosted[shape.arc(i, favored.tags[i], favored.tags[i + 1])] = 10.0;
  }
  WeightTensor wb(shape, boosted);
  CHECK(mbr_decode(wb, IbpConfig::decode_defaults()).tags ==
        viterbi(wb).tags.tags);

  CHECK(mbr_decode(WeightTensor::zeros(shape), IbpConfig::decode_defaults())
            .tags == std::vector<int32_t>{0, 0, 0, 0});
}

TEST_CASE("mbr repair yields a valid path when the raw readout is not") {
  Rng rng(269);
  IbpConfig cfg = IbpConfig::decode_defaults();
  cfg.max_iters = 5;
  int violations = 0;
  for (int k = 0; k < 300; ++k) {
    ProblemShape shape(static_cast<int32_t>(rng.uniform_int(4, 7)),
                       static_cast<int32_t>(rng.uniform_int(2, 3)));
    WeightTensor w =
        apply_mask(testutil::random_weights(rng, shape, 3.0),
                   testutil::random_reachable_mask(rng, shape, 0.5));
    TagSequence raw = mbr_decode(w, cfg, false);
    bool valid = !is_neg_inf(path_score(w, raw));
    if (!valid) ++violations;
    TagSequence repaired = mbr_decode(w, cfg, true);
    CHECK_FALSE(is_neg_inf(path_score(w, repaired)));
    if (valid) CHECK(repaired.tags == raw.tags);
  }
  // The raw position-wise readout really does break masks sometimes.
  CHECK(violations > 0);
}

TEST_CASE("map_gap on the symmetric instance and its contract bound") {
  ProblemShape shape(3, 2);
  IbpConfig cfg = IbpConfig::decode_defaults();
  CHECK(map_gap(WeightTensor::zeros(shape), cfg) ==
        doctest::Approx(0.1 * 4.0 * std::log(2.0)).epsilon(1e-10));

  Rng rng(271);
  ProblemShape s(5, 3);
  WeightTensor w = testutil::random_weights(rng, s, 2.0);
  IbpConfig extreme = IbpConfig::high_accuracy(1e4);
  const double bound = 1e-4 * (s.n - 1) * 2.0 * std::log(3.0);
  const double gap = map_gap(w, extreme);
  CHECK(gap <= bound + 1e-9);
  CHECK(gap >= -1e-9);
}

TEST_CASE("gap shrinks as the temperature drops, oracle-certified") {
  Rng rng(277);
  ProblemShape shape(4, 3);
  WeightTensor w = testutil::random_weights(rng, shape, 2.0);
  const double best = viterbi(w).score;
  double previous = std::numeric_limits<double>::infinity();
  for (double tau_inverse : {1.0, 10.0, 100.0, 1000.0}) {
    MeanRegSolution sol = oracle_meanreg(scaled(w, tau_inverse), 1e-13);
    const double oracle_gap = sol.value / tau_inverse - best;
    CHECK(oracle_gap <= previous + 1e-6);
    CHECK(oracle_gap >= -1e-9);
    previous = oracle_gap;

    const double ibp_gap = map_gap(w, IbpConfig::high_accuracy(tau_inverse));
    CHECK(std::abs(ibp_gap - oracle_gap) <= 2e-5);
  }
}
