#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bcrf/enumerate.hpp"
#include "bcrf/polytope.hpp"
#include "bcrf/trellis.hpp"
#include "bcrf/types.hpp"
#include "test_util.hpp"

using namespace bcrf;
using testutil::Rng;

TEST_CASE("shape rejects short sequences and empty tag sets") {
  CHECK_THROWS_AS(ProblemShape(2, 2), Error);
  CHECK_THROWS_AS(ProblemShape(3, 0), Error);
  ProblemShape shape(3, 2);
  CHECK(shape.arc_count() == 8);
}

TEST_CASE("weight tensor rejects +inf and NaN") {
  ProblemShape shape(3, 2);
  std::vector<double> values(shape.arc_count(), 0.0);
  values[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(WeightTensor(shape, values), Error);
  values[0] = std::nan("");
  CHECK_THROWS_AS(WeightTensor(shape, values), Error);
  values[0] = kNegInf;
  CHECK_NOTHROW(WeightTensor(shape, values));
}

TEST_CASE("encode_sequence places one arc per slice") {
  ProblemShape shape(3, 2);
  SufficientStats y = encode_sequence(shape, TagSequence{{0, 1, 0}});
  CHECK(y.at(0, 0, 1) == 1);
  CHECK(y.at(1, 1, 0) == 1);
  int32_t ones = 0;
  for (uint8_t v : y.values()) ones += v;
  CHECK(ones == 2);

  ProblemShape single(3, 1);
  SufficientStats all = encode_sequence(single, TagSequence{{0, 0, 0}});
  for (uint8_t v : all.values()) CHECK(v == 1);
}

TEST_CASE("encode_sequence per-slice sums over random sequences") {
  ProblemShape shape(6, 3);
  Rng rng(11);
  for (int k = 0; k < 100; ++k) {
    TagSequence x = testutil::random_sequence(rng, shape);
    SufficientStats y = encode_sequence(shape, x);
    for (int32_t i = 0; i < shape.num_slices(); ++i) {
      int32_t sum = 0;
      for (int32_t t = 0; t < 3; ++t) {
        for (int32_t tp = 0; tp < 3; ++tp) sum += y.at(i, t, tp);
      }
      CHECK(sum == 1);
    }
  }
}

TEST_CASE("score is the inner product with -inf absorption") {
  ProblemShape shape(4, 2);
  Rng rng(7);
  TagSequence x = testutil::random_sequence(rng, shape);
  SufficientStats y = encode_sequence(shape, x);

  CHECK(score(WeightTensor::zeros(shape), y) == 0.0);

  // w equal to y as reals: inner product of the indicator with itself.
  std::vector<double> as_reals(y.values().begin(), y.values().end());
  CHECK(score(WeightTensor(shape, as_reals), y) ==
        static_cast<double>(shape.num_slices()));

  WeightTensor w = testutil::random_weights(rng, shape, 3.0);
  double walked = 0.0;
  for (int32_t i = 0; i < shape.num_slices(); ++i) {
    walked += w.at(i, x.tags[i], x.tags[i + 1]);
  }
  CHECK(score(w, y) == doctest::Approx(walked).epsilon(1e-15));
  CHECK(path_score(w, x) == score(w, y));

  // Forbidden arc on the path makes the score -inf.
  std::vector<double> masked(w.values().begin(), w.values().end());
  masked[shape.arc(0, x.tags[0], x.tags[1])] = kNegInf;
  CHECK(is_neg_inf(score(WeightTensor(shape, masked), y)));

  ProblemShape other(5, 2);
  CHECK_THROWS_AS(score(WeightTensor::zeros(other), y), Error);
}

TEST_CASE("enumerate_sequences covers the label space in lex order") {
  ProblemShape shape(3, 2);
  auto all = enumerate_sequences(shape);
  REQUIRE(all.size() == 8);
  CHECK(all.front().tags == std::vector<int32_t>{0, 0, 0});
  CHECK(all.back().tags == std::vector<int32_t>{1, 1, 1});
  for (size_t i = 1; i < all.size(); ++i) {
    CHECK(all[i - 1].tags < all[i].tags);
  }

  // Forbid every arc out of tag 1 at the first slice: sequences with x1 = 1
  // disappear.
  std::vector<uint8_t> allowed(shape.arc_count(), 1);
  allowed[shape.arc(0, 1, 0)] = 0;
  allowed[shape.arc(0, 1, 1)] = 0;
  TransitionMask mask(shape, allowed);
  CHECK(enumerate_sequences(shape, &mask).size() == 4);
}

TEST_CASE("enumeration guard fails loudly") {
  ProblemShape shape(21, 2);  // 2^21 > 10^6
  CHECK_THROWS_AS(enumerate_sequences(shape), Error);
}

namespace {

// Independent path counting: sum-product DP with 0/1 arc weights.
int64_t count_paths(const ProblemShape& shape, const TransitionMask& mask) {
  std::vector<int64_t> prev(shape.num_tags, 1), cur(shape.num_tags);
  for (int32_t i = 0; i < shape.num_slices(); ++i) {
    for (int32_t tp = 0; tp < shape.num_tags; ++tp) {
      int64_t total = 0;
      for (int32_t t = 0; t < shape.num_tags; ++t) {
        if (mask.allowed(i, t, tp)) total += prev[t];
      }
      cur[tp] = total;
    }
    prev = cur;
  }
  int64_t total = 0;
  for (int64_t c : prev) total += c;
  return total;
}

}  // namespace

TEST_CASE("masked enumeration agrees with DP path counting") {
  ProblemShape shape(4, 3);
  Rng rng(23);
  for (int k = 0; k < 20; ++k) {
    TransitionMask mask = testutil::random_reachable_mask(rng, shape, 0.6);
    CHECK(static_cast<int64_t>(enumerate_sequences(shape, &mask).size()) ==
          count_paths(shape, mask));
  }
}

TEST_CASE("reachability diagnostics") {
  ProblemShape shape(4, 2);
  CHECK(validate_reachability(WeightTensor::zeros(shape)).ok);

  // Every arc entering cluster V_2 removed: the raw buffer is checkable even
  // though the mask type rejects it at construction.
  std::vector<uint8_t> allowed(shape.arc_count(), 1);
  for (int32_t t = 0; t < 2; ++t) {
    for (int32_t tp = 0; tp < 2; ++tp) allowed[shape.arc(0, t, tp)] = 0;
  }
  Reachability r = validate_reachability(shape, allowed);
  CHECK_FALSE(r.ok);
  CHECK(r.diagnostic.find("position 2") != std::string::npos);
  CHECK_THROWS_AS(TransitionMask(shape, allowed), Error);

  // Agreement with enumeration emptiness on random sparse masks.
  Rng rng(5);
  for (int k = 0; k < 50; ++k) {
    std::vector<uint8_t> sparse(shape.arc_count());
    for (uint8_t& a : sparse) a = rng.bernoulli(0.35) ? 1 : 0;
    bool reachable = validate_reachability(shape, sparse).ok;
    int64_t paths = 0;
    if (reachable) {
      TransitionMask mask(shape, sparse);
      paths = static_cast<int64_t>(enumerate_sequences(shape, &mask).size());
      CHECK(paths > 0);
    } else {
      // count paths directly over the raw buffer
      std::vector<int64_t> prev(2, 1), cur(2);
      for (int32_t i = 0; i < shape.num_slices(); ++i) {
        for (int32_t tp = 0; tp < 2; ++tp) {
          int64_t total = 0;
          for (int32_t t = 0; t < 2; ++t) {
            if (sparse[shape.arc(i, t, tp)]) total += prev[t];
          }
          cur[tp] = total;
        }
        prev = cur;
      }
      CHECK(prev[0] + prev[1] == 0);
    }
  }
}

TEST_CASE("apply_mask keeps allowed entries and rejects dead results") {
  ProblemShape shape(4, 2);
  Rng rng(301);
  WeightTensor w = testutil::random_weights(rng, shape, 2.0);

  WeightTensor same = apply_mask(w, TransitionMask::all_allowed(shape));
  CHECK(testutil::max_abs_diff(same.values(), w.values()) == 0.0);

  CHECK_THROWS_AS(
      TransitionMask(shape, std::vector<uint8_t>(shape.arc_count(), 0)),
      Error);

  // A mask can be fine on its own yet kill every finite path of w.
  std::vector<double> values(shape.arc_count(), 0.0);
  values[shape.arc(0, 0, 0)] = kNegInf;
  values[shape.arc(0, 0, 1)] = kNegInf;
  WeightTensor top_dead(shape, values);
  std::vector<uint8_t> bottom_dead(shape.arc_count(), 1);
  bottom_dead[shape.arc(0, 1, 0)] = 0;
  bottom_dead[shape.arc(0, 1, 1)] = 0;
  CHECK_THROWS_AS(apply_mask(top_dead, TransitionMask(shape, bottom_dead)),
                  Error);
}

TEST_CASE("polytope membership of vertices, uniform point, mixtures") {
  ProblemShape shape(5, 3);
  Rng rng(99);
  TagSequence x = testutil::random_sequence(rng, shape);
  PolytopeReport at_vertex =
      check_polytope_membership(encode_sequence(shape, x).to_marginals(), 0.0);
  CHECK(at_vertex.pass);
  CHECK(at_vertex.max_cluster_residual == 0.0);
  CHECK(at_vertex.max_flow_residual == 0.0);

  MarginalTensor uniform(
      shape, std::vector<double>(shape.arc_count(), 1.0 / 9.0));
  CHECK(check_polytope_membership(uniform, 1e-15).pass);

  // Convex combinations of encoded vertices stay feasible.
  for (int k = 0; k < 20; ++k) {
    TagSequence a = testutil::random_sequence(rng, shape);
    TagSequence b = testutil::random_sequence(rng, shape);
    double lambda = rng.uniform();
    auto ya = encode_sequence(shape, a);
    auto yb = encode_sequence(shape, b);
    std::vector<double> mix(shape.arc_count());
    for (int64_t i = 0; i < shape.arc_count(); ++i) {
      mix[i] = lambda * ya.values()[i] + (1.0 - lambda) * yb.values()[i];
    }
    CHECK(check_polytope_membership(MarginalTensor(shape, mix), 1e-12).pass);
  }

  // Violations are reported, not thrown.
  std::vector<double> bad(shape.arc_count(), 0.0);
  bad[shape.arc(0, 0, 0)] = 0.5;
  PolytopeReport report =
      check_polytope_membership(MarginalTensor(shape, bad), 1e-12);
  CHECK_FALSE(report.pass);
  CHECK(report.max_cluster_residual > 0.4);
}

TEST_CASE("is_vertex inverts encode_sequence and rejects interior points") {
  ProblemShape shape(4, 2);
  for (const TagSequence& x : enumerate_sequences(shape)) {
    auto decoded = is_vertex(encode_sequence(shape, x).to_marginals());
    REQUIRE(decoded.has_value());
    CHECK(decoded->tags == x.tags);
  }

  MarginalTensor uniform(shape,
                         std::vector<double>(shape.arc_count(), 0.25));
  CHECK_FALSE(is_vertex(uniform).has_value());

  auto a = encode_sequence(shape, TagSequence{{0, 0, 0, 0}});
  auto b = encode_sequence(shape, TagSequence{{1, 1, 1, 1}});
  std::vector<double> mid(shape.arc_count());
  for (int64_t i = 0; i < shape.arc_count(); ++i) {
    mid[i] = 0.5 * (a.values()[i] + b.values()[i]);
  }
  CHECK_FALSE(is_vertex(MarginalTensor(shape, mid)).has_value());
}

TEST_CASE("mask semantics match -inf scoring") {
  ProblemShape shape(4, 2);
  Rng rng(77);
  TransitionMask mask = testutil::random_reachable_mask(rng, shape, 0.55);

  std::vector<double> zero_or_inf(shape.arc_count(), 0.0);
  for (int64_t a = 0; a < shape.arc_count(); ++a) {
    if (!mask.values()[a]) zero_or_inf[a] = kNegInf;
  }
  WeightTensor masked_w(shape, zero_or_inf);

  auto masked = enumerate_sequences(shape, &mask);
  std::vector<TagSequence> by_score;
  for (const TagSequence& x : enumerate_sequences(shape)) {
    if (!is_neg_inf(score(masked_w, encode_sequence(shape, x)))) {
      by_score.push_back(x);
    }
  }
  REQUIRE(masked.size() == by_score.size());
  for (size_t i = 0; i < masked.size(); ++i) {
    CHECK(masked[i].tags == by_score[i].tags);
  }
}

TEST_CASE("trellis adjacency bookkeeping") {
  ProblemShape shape(5, 3);
  TrellisGraph graph(shape);
  CHECK(graph.num_arcs() == 4 * 9);
  CHECK(graph.interior_clusters() == std::vector<int32_t>{2, 3, 4});
  CHECK(graph.parity_clusters(true) == std::vector<int32_t>{3});
  CHECK(graph.parity_clusters(false) == std::vector<int32_t>{2, 4});
  CHECK(graph.in_arcs(TrellisNode{1, 0}).empty());
  CHECK(graph.out_arcs(TrellisNode{5, 2}).empty());
  CHECK(graph.in_arcs(TrellisNode{2, 1}).size() == 3);
  CHECK(graph.in_arcs(TrellisNode{2, 1})[0] == shape.arc(0, 0, 1));
  CHECK(graph.out_arcs(TrellisNode{2, 1})[2] == shape.arc(1, 1, 2));
}
