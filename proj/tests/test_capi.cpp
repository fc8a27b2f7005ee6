#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "bcrf/bcrf.h"

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Weights {
  bcrf_weights* ptr = nullptr;
  Weights(int32_t n, int32_t num_tags, const std::vector<double>& values) {
    REQUIRE(bcrf_weights_create(n, num_tags, values.data(), &ptr) == BCRF_OK);
  }
  explicit Weights(bcrf_weights* raw) : ptr(raw) {}
  ~Weights() { bcrf_weights_free(ptr); }
  Weights(const Weights&) = delete;
  Weights& operator=(const Weights&) = delete;
};

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("version and error message plumbing") {
  CHECK(std::strlen(bcrf_version()) > 0);
  bcrf_weights* out = nullptr;
  CHECK(bcrf_weights_create(2, 2, nullptr, &out) == BCRF_ERR_INVALID_ARG);
  CHECK(std::strlen(bcrf_last_error()) > 0);
}

TEST_CASE("weights lifecycle, validation and accessors") {
  std::vector<double> values(8, 0.0);
  Weights w(3, 2, values);
  CHECK(bcrf_weights_length(w.ptr) == 3);
  CHECK(bcrf_weights_num_tags(w.ptr) == 2);
  CHECK(bcrf_weights_validate(w.ptr) == BCRF_OK);

  std::vector<double> copy(8, -1.0);
  CHECK(bcrf_weights_values(w.ptr, copy.data()) == BCRF_OK);
  for (double v : copy) CHECK(v == 0.0);

  std::vector<double> bad(8, 0.0);
  bad[0] = kInf;
  bcrf_weights* rejected = nullptr;
  CHECK(bcrf_weights_create(3, 2, bad.data(), &rejected) ==
        BCRF_ERR_INVALID_ARG);

  // every slice-1 arc forbidden: built fine, unreachable on validation
  std::vector<double> dead(8, 0.0);
  for (int t = 0; t < 2; ++t) {
    for (int tp = 0; tp < 2; ++tp) dead[(0 * 2 + t) * 2 + tp] = -kInf;
  }
  Weights unreachable(3, 2, dead);
  CHECK(bcrf_weights_validate(unreachable.ptr) == BCRF_ERR_INFEASIBLE);
  std::vector<int32_t> tags(3, -1);
  CHECK(bcrf_viterbi(unreachable.ptr, tags.data(), nullptr) ==
        BCRF_ERR_INFEASIBLE);
  CHECK(bcrf_viterbi(unreachable.ptr, nullptr, nullptr) ==
        BCRF_ERR_INVALID_ARG);
}

TEST_CASE("config defaults per mode") {
  bcrf_ibp_config decode;
  bcrf_ibp_config_init(&decode, BCRF_IBP_DECODE);
  CHECK(decode.tau_inverse == 10.0);
  CHECK(decode.max_iters == 10);
  CHECK(decode.tol == 0.0);
  bcrf_ibp_config marginal;
  bcrf_ibp_config_init(&marginal, BCRF_IBP_MARGINAL);
  CHECK(marginal.tau_inverse == 1.0);
}

TEST_CASE("dp, ibp, mbr and oracle agree through the C surface") {
  // favor the path 0 -> 1 -> 0 -> 1
  std::vector<double> values(3 * 4, 0.0);
  auto arc = [](int slice, int t, int tp) { return (slice * 2 + t) * 2 + tp; };
  values[arc(0, 0, 1)] = 4.0;
  values[arc(1, 1, 0)] = 4.0;
  values[arc(2, 0, 1)] = 4.0;
  Weights w(4, 2, values);

  std::vector<int32_t> tags(4, -1);
  double score = 0.0;
  REQUIRE(bcrf_viterbi(w.ptr, tags.data(), &score) == BCRF_OK);
  CHECK(tags == std::vector<int32_t>{0, 1, 0, 1});
  CHECK(score == doctest::Approx(12.0));

  double logz = 0.0, oracle_logz = 0.0;
  REQUIRE(bcrf_forward_logz(w.ptr, &logz) == BCRF_OK);
  REQUIRE(bcrf_oracle_logz(w.ptr, &oracle_logz) == BCRF_OK);
  CHECK(logz == doctest::Approx(oracle_logz).epsilon(1e-12));
  CHECK(logz > score);

  double path = 0.0;
  REQUIRE(bcrf_path_score(w.ptr, tags.data(), &path) == BCRF_OK);
  CHECK(path == doctest::Approx(score));

  std::vector<double> marg(12, 0.0), oracle_marg(12, 0.0);
  REQUIRE(bcrf_crf_marginals(w.ptr, marg.data()) == BCRF_OK);
  REQUIRE(bcrf_oracle_crf_marginals(w.ptr, oracle_marg.data()) == BCRF_OK);
  for (int a = 0; a < 12; ++a) {
    CHECK(marg[a] == doctest::Approx(oracle_marg[a]).epsilon(1e-9));
  }

  bcrf_ibp_config cfg;
  bcrf_ibp_config_init(&cfg, BCRF_IBP_MARGINAL);
  cfg.max_iters = 5000;
  cfg.tol = 1e-12;
  std::vector<double> q(12, 0.0);
  std::vector<double> residuals(cfg.max_iters, -1.0);
  int32_t sweeps = 0;
  REQUIRE(bcrf_ibp_infer(w.ptr, &cfg, q.data(), residuals.data(), &sweeps) ==
          BCRF_OK);
  CHECK(sweeps >= 2);
  CHECK(residuals[sweeps - 1] <= 1e-12);

  std::vector<double> q_oracle(12, 0.0);
  double value = 0.0;
  REQUIRE(bcrf_oracle_mean_reg(w.ptr, 1e-12, q_oracle.data(), &value) ==
          BCRF_OK);
  for (int a = 0; a < 12; ++a) {
    CHECK(std::abs(q[a] - q_oracle[a]) <= 1e-5);
  }

  double b_value = 0.0;
  REQUIRE(bcrf_mean_reg_value(w.ptr, q.data(), &b_value) == BCRF_OK);
  CHECK(b_value == doctest::Approx(value).epsilon(1e-6));

  std::vector<int32_t> mbr(4, -1);
  bcrf_ibp_config decode;
  bcrf_ibp_config_init(&decode, BCRF_IBP_DECODE);
  REQUIRE(bcrf_mbr_decode(w.ptr, &decode, 0, mbr.data()) == BCRF_OK);
  CHECK(mbr == tags);

  double gap = 0.0;
  REQUIRE(bcrf_map_gap(w.ptr, &decode, &gap) == BCRF_OK);
  CHECK(gap >= -1e-9);
  CHECK(gap <= 0.1 * 3 * 2 * std::log(2.0) + 1e-9);
}

TEST_CASE("losses through the C surface") {
  std::vector<double> values(8, 0.0);
  Weights w(3, 2, values);
  std::vector<int32_t> gold{0, 1, 0};
  double value = 0.0;
  std::vector<double> grad(8, 0.0);
  REQUIRE(bcrf_nll_loss(w.ptr, gold.data(), &value, grad.data()) == BCRF_OK);
  CHECK(value == doctest::Approx(3.0 * std::log(2.0)));

  bcrf_ibp_config cfg;
  bcrf_ibp_config_init(&cfg, BCRF_IBP_MARGINAL);
  cfg.max_iters = 2000;
  cfg.tol = 1e-11;
  REQUIRE(bcrf_fy_loss(w.ptr, gold.data(), &cfg, &value, grad.data()) ==
          BCRF_OK);
  CHECK(value == doctest::Approx(4.0 * std::log(2.0)).epsilon(1e-8));

  std::vector<uint8_t> allowed(8, 1);
  bcrf_mask* mask = nullptr;
  REQUIRE(bcrf_mask_create(3, 2, allowed.data(), &mask) == BCRF_OK);
  REQUIRE(bcrf_partial_nll_loss(w.ptr, mask, &value, grad.data()) == BCRF_OK);
  CHECK(value == doctest::Approx(0.0));
  REQUIRE(bcrf_partial_fy_loss(w.ptr, mask, &cfg, &value, grad.data()) ==
          BCRF_OK);
  CHECK(std::abs(value) <= 1e-8);
  bcrf_mask_free(mask);

  std::vector<uint8_t> empty(8, 0);
  bcrf_mask* rejected = nullptr;
  CHECK(bcrf_mask_create(3, 2, empty.data(), &rejected) ==
        BCRF_ERR_INFEASIBLE);
}

TEST_CASE("apply_mask and infeasibility codes") {
  std::vector<double> values(8, 0.0);
  Weights w(3, 2, values);
  std::vector<uint8_t> allowed(8, 1);
  allowed[0] = 0;
  bcrf_mask* mask = nullptr;
  REQUIRE(bcrf_mask_create(3, 2, allowed.data(), &mask) == BCRF_OK);
  bcrf_weights* masked = nullptr;
  REQUIRE(bcrf_apply_mask(w.ptr, mask, &masked) == BCRF_OK);
  Weights owner(masked);
  std::vector<double> out(8, 0.0);
  REQUIRE(bcrf_weights_values(masked, out.data()) == BCRF_OK);
  CHECK(out[0] == -kInf);
  CHECK(out[1] == 0.0);
  bcrf_mask_free(mask);
}

TEST_CASE("mean field rejection maps to the config error code") {
  std::vector<double> values(8, 0.0);
  values[3] = -kInf;
  Weights w(3, 2, values);
  std::vector<double> probs(6, 0.0);
  CHECK(bcrf_mf_infer(w.ptr, 5, probs.data()) == BCRF_ERR_CONFIG);
  CHECK(std::string(bcrf_last_error()).find("mean field") !=
        std::string::npos);

  std::vector<double> fine(8, 0.5);
  Weights ok(3, 2, fine);
  REQUIRE(bcrf_mf_infer(ok.ptr, 5, probs.data()) == BCRF_OK);
  CHECK(probs[0] + probs[1] == doctest::Approx(1.0));
  std::vector<int32_t> tags(3, -1);
  REQUIRE(bcrf_mf_decode(ok.ptr, 5, tags.data()) == BCRF_OK);
}

TEST_CASE("tensor files round-trip through the C surface") {
  std::vector<double> values(8, 0.0);
  values[1] = 0.1;
  values[2] = -kInf;
  Weights w(3, 2, values);
  const std::string path = temp_path("bcrf_capi_tensor.txt");
  REQUIRE(bcrf_weights_write_file(w.ptr, path.c_str()) == BCRF_OK);
  bcrf_weights* read = nullptr;
  REQUIRE(bcrf_weights_read_file(path.c_str(), &read) == BCRF_OK);
  Weights owner(read);
  std::vector<double> out(8, 0.0);
  REQUIRE(bcrf_weights_values(read, out.data()) == BCRF_OK);
  for (int a = 0; a < 8; ++a) CHECK(out[a] == values[a]);
  std::remove(path.c_str());

  bcrf_weights* missing = nullptr;
  CHECK(bcrf_weights_read_file("/nonexistent/tensor.txt", &missing) ==
        BCRF_ERR_IO);

  const std::string bad_path = temp_path("bcrf_capi_bad.txt");
  FILE* f = std::fopen(bad_path.c_str(), "w");
  std::fputs("wtensor v1 3 2\n1 0 0 oops\n", f);
  std::fclose(f);
  CHECK(bcrf_weights_read_file(bad_path.c_str(), &missing) ==
        BCRF_ERR_FORMAT);
  std::remove(bad_path.c_str());
}

TEST_CASE("batched calls report per-item status") {
  std::vector<double> good(8, 0.0);
  std::vector<double> dead(8, 0.0);
  for (int t = 0; t < 2; ++t) {
    for (int tp = 0; tp < 2; ++tp) dead[(1 * 2 + t) * 2 + tp] = -kInf;
  }
  Weights a(3, 2, good), b(3, 2, dead), c(4, 2, std::vector<double>(12, 1.0));
  const bcrf_weights* items[3] = {a.ptr, b.ptr, c.ptr};
  double logz[3] = {0, 0, 0};
  bcrf_status status[3] = {BCRF_OK, BCRF_OK, BCRF_OK};
  CHECK(bcrf_forward_logz_batch(items, 3, 2, logz, status) ==
        BCRF_ERR_INFEASIBLE);
  CHECK(status[0] == BCRF_OK);
  CHECK(status[1] == BCRF_ERR_INFEASIBLE);
  CHECK(status[2] == BCRF_OK);
  CHECK(logz[0] == doctest::Approx(3.0 * std::log(2.0)));
  CHECK(logz[2] == doctest::Approx(3.0 + 4.0 * std::log(2.0)).epsilon(1e-12));

  std::vector<int32_t> tags0(3), tags2(4);
  int32_t dummy[3] = {0, 0, 0};
  int32_t* tag_ptrs[3] = {tags0.data(), dummy, tags2.data()};
  double scores[3];
  CHECK(bcrf_viterbi_batch(items, 3, 2, tag_ptrs, scores, status) ==
        BCRF_ERR_INFEASIBLE);
  CHECK(status[2] == BCRF_OK);
  CHECK(scores[2] == doctest::Approx(3.0));

  std::vector<double> m0(8), m1(8), m2(12);
  double* marg_ptrs[3] = {m0.data(), m1.data(), m2.data()};
  CHECK(bcrf_crf_marginals_batch(items, 3, 2, marg_ptrs, status) ==
        BCRF_ERR_INFEASIBLE);
  for (double v : m0) CHECK(v == doctest::Approx(0.25));

  const bcrf_weights* fine[2] = {a.ptr, c.ptr};
  double* marg_fine[2] = {m0.data(), m2.data()};
  bcrf_ibp_config cfg;
  bcrf_ibp_config_init(&cfg, BCRF_IBP_MARGINAL);
  CHECK(bcrf_ibp_infer_batch(fine, 2, &cfg, 2, marg_fine, status) == BCRF_OK);
  double* probs[2] = {m0.data(), m2.data()};
  CHECK(bcrf_mf_infer_batch(fine, 2, 5, 2, probs, status) == BCRF_OK);
}
