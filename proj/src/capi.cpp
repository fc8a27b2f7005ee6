#include "bcrf/bcrf.h"

#include <cstring>
#include <string>

#include "bcrf/batch.hpp"
#include "bcrf/dp.hpp"
#include "bcrf/formats.hpp"
#include "bcrf/ibp.hpp"
#include "bcrf/losses.hpp"
#include "bcrf/meanfield.hpp"
#include "bcrf/oracle.hpp"
#include "bcrf/parallel.hpp"
#include "bcrf/types.hpp"

struct bcrf_weights {
  bcrf::WeightTensor tensor;
};

struct bcrf_mask {
  bcrf::TransitionMask mask;
};

namespace {

thread_local std::string g_last_error;

bcrf_status to_status(bcrf::ErrorKind kind) {
  switch (kind) {
    case bcrf::ErrorKind::kInvalidArgument:
      return BCRF_ERR_INVALID_ARG;
    case bcrf::ErrorKind::kFormat:
      return BCRF_ERR_FORMAT;
    case bcrf::ErrorKind::kInfeasible:
      return BCRF_ERR_INFEASIBLE;
    case bcrf::ErrorKind::kConfig:
      return BCRF_ERR_CONFIG;
    case bcrf::ErrorKind::kGuard:
      return BCRF_ERR_GUARD;
    case bcrf::ErrorKind::kNumeric:
      return BCRF_ERR_NUMERIC;
    case bcrf::ErrorKind::kIo:
      return BCRF_ERR_IO;
  }
  return BCRF_ERR_INVALID_ARG;
}

template <typename Fn>
bcrf_status wrap(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return BCRF_OK;
  } catch (const bcrf::Error& e) {
    g_last_error = e.what();
    return to_status(e.kind());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return BCRF_ERR_INVALID_ARG;
  }
}

bcrf_status require(bool ok, const char* message) {
  if (ok) return BCRF_OK;
  g_last_error = message;
  return BCRF_ERR_INVALID_ARG;
}

bcrf::IbpConfig convert(const bcrf_ibp_config* cfg) {
  if (cfg == nullptr) return bcrf::IbpConfig::decode_defaults();
  bcrf::IbpConfig out;
  out.tau_inverse = cfg->tau_inverse;
  out.max_iters = cfg->max_iters;
  out.tol = cfg->tol;
  out.mode = cfg->mode == BCRF_IBP_MARGINAL ? bcrf::IbpMode::kMarginal
                                            : bcrf::IbpMode::kDecode;
  return out;
}

bcrf::TagSequence to_sequence(const bcrf::ProblemShape& shape,
                              const int32_t* tags) {
  bcrf::TagSequence x;
  x.tags.assign(tags, tags + shape.n);
  return x;
}

void copy_out(std::span<const double> values, double* out) {
  std::memcpy(out, values.data(), values.size() * sizeof(double));
}

std::span<const bcrf::WeightTensor* const> tensors_of(
    const bcrf_weights* const* ws, int32_t count,
    std::vector<const bcrf::WeightTensor*>& storage) {
  storage.clear();
  storage.reserve(count);
  for (int32_t i = 0; i < count; ++i) {
    storage.push_back(ws[i] == nullptr ? nullptr : &ws[i]->tensor);
  }
  return storage;
}

template <typename T, typename Emit>
bcrf_status report_items(const std::vector<bcrf::ItemResult<T>>& items,
                         bcrf_status* item_status, const Emit& emit) {
  bcrf_status first_bad = BCRF_OK;
  for (size_t i = 0; i < items.size(); ++i) {
    if (items[i].ok()) {
      emit(i, *items[i].value);
      if (item_status != nullptr) item_status[i] = BCRF_OK;
    } else {
      bcrf_status st = to_status(items[i].error);
      if (item_status != nullptr) item_status[i] = st;
      if (first_bad == BCRF_OK) {
        first_bad = st;
        g_last_error = "item " + std::to_string(i) + ": " + items[i].message;
      }
    }
  }
  return first_bad;
}

}  // namespace

extern "C" {

const char* bcrf_version(void) { return "0.1.0"; }

const char* bcrf_last_error(void) { return g_last_error.c_str(); }

void bcrf_ibp_config_init(bcrf_ibp_config* cfg, int32_t mode) {
  if (cfg == nullptr) return;
  bcrf::IbpConfig defaults = mode == BCRF_IBP_MARGINAL
                                 ? bcrf::IbpConfig::marginal_defaults()
                                 : bcrf::IbpConfig::decode_defaults();
  cfg->tau_inverse = defaults.tau_inverse;
  cfg->max_iters = defaults.max_iters;
  cfg->tol = defaults.tol;
  cfg->mode = mode == BCRF_IBP_MARGINAL ? BCRF_IBP_MARGINAL : BCRF_IBP_DECODE;
}

bcrf_status bcrf_weights_create(int32_t n, int32_t num_tags,
                                const double* values, bcrf_weights** out) {
  if (bcrf_status st = require(values != nullptr && out != nullptr,
                               "null argument");
      st != BCRF_OK) {
    return st;
  }
  return wrap([&] {
    bcrf::ProblemShape shape(n, num_tags);
    std::vector<double> buf(values, values + shape.arc_count());
    *out = new bcrf_weights{bcrf::WeightTensor(shape, std::move(buf))};
  });
}

void bcrf_weights_free(bcrf_weights* w) { delete w; }

int32_t bcrf_weights_length(const bcrf_weights* w) {
  return w == nullptr ? 0 : w->tensor.shape().n;
}

int32_t bcrf_weights_num_tags(const bcrf_weights* w) {
  return w == nullptr ? 0 : w->tensor.shape().num_tags;
}

bcrf_status bcrf_weights_values(const bcrf_weights* w, double* out) {
  if (bcrf_status st = require(w != nullptr && out != nullptr,
                               "null argument");
      st != BCRF_OK) {
    return st;
  }
  copy_out(w->tensor.values(), out);
  return BCRF_OK;
}

bcrf_status bcrf_weights_validate(const bcrf_weights* w) {
  if (bcrf_status st = require(w != nullptr, "null argument"); st != BCRF_OK) {
    return st;
  }
  return wrap([&] { bcrf::require_reachable(w->tensor); });
}

bcrf_status bcrf_weights_write_file(const bcrf_weights* w, const char* path) {
  if (bcrf_status st = require(w != nullptr && path != nullptr,
                               "null argument");
      st != BCRF_OK) {
    return st;
  }
  return wrap([&] {
    bcrf::write_wtensor_file(path, w->tensor.shape(), w->tensor.values());
  });
}

bcrf_status bcrf_weights_format(const bcrf_weights* w, char** out) {
  if (bcrf_status st = require(w != nullptr && out != nullptr,
                               "null argument");
      st != BCRF_OK) {
    return st;
  }
  return wrap([&] {
    std::string text =
        bcrf::format_wtensor(w->tensor.shape(), w->tensor.values());
    char* buf = new char[text.size() + 1];
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *out = buf;
  });
}

void bcrf_string_free(char* s) { delete[] s; }

bcrf_status bcrf_weights_read_file(const char* path, bcrf_weights** out) {
  if (bcrf_status st = require(path != nullptr && out != nullptr,
                               "null argument");
      st != BCRF_OK) {
    return st;
  }
  return wrap([&] {
    bcrf::ParsedTensor parsed = bcrf::read_wtensor_file(path);
    *out = new bcrf_weights{
        bcrf::WeightTensor(parsed.shape, std::move(parsed.values))};
  });
}

bcrf_status bcrf_mask_create(int32_t n, int32_t num_tags,
                             const uint8_t* allowed, bcrf_mask** out) {
  if (bcrf_status st = require(allowed != nullptr && out != nullptr,
                               "null argument");
      st != BCRF_OK) {
    return st;
  }
  return wrap([&] {
    bcrf::ProblemShape shape(n, num_tags);
    std::vector<uint8_t> buf(allowed, allowed + shape.arc_count());
    *out = new bcrf_mask{bcrf::TransitionMask(shape, std::move(buf))};
  });
}

void bcrf_mask_free(bcrf_mask* m) { delete m; }

bcrf_status bcrf_apply_mask(const bcrf_weights* w, const bcrf_mask* m,
                            bcrf_weights** out) {
  if (bcrf_status st = require(w != nullptr && m != nullptr && out != nullptr,
                               "null argument");
      st != BCRF_OK) {
    return st;
  }
  return wrap([&] {
    *out = new bcrf_weights{bcrf::apply_mask(w->tensor, m->mask)};
  });
}

bcrf_status bcrf_viterbi(const bcrf_weights* w, int32_t* tags, double* score) {
  if (bcrf_status st = require(w != nullptr && tags != nullptr,
                               "null argument");
      st != BCRF_OK) {
    return st;
  }
  return wrap([&] {
    bcrf::ViterbiResult r = bcrf::viterbi(w->tensor);
    std::memcpy(tags, r.tags.tags.data(), r.tags.tags.size() * sizeof(int32_t));
    if (score != nullptr) *score = r.score;
  });
}

bcrf_status bcrf_forward_logz(const bcrf_weights* w, double* logz) {
  if (bcrf_status st = require(w != nullptr && logz != nullptr,
                               "null argument");
      st != BCRF_OK) {
    return st;
  }
  return wrap([&] { *logz = bcrf::forward_logz(w->tensor); });
}

bcrf_status bcrf_crf_marginals(const bcrf_weights* w, double* marginals) {
  if (bcrf_status st = require(w != nullptr && marginals != nullptr,
                               "null argument");
      st != BCRF_OK) {
    return st;
  }
  return wrap([&] {
    copy_out(bcrf::crf_marginals(w->tensor).values(), marginals);
  });
}

bcrf_status bcrf_path_score(const bcrf_weights* w, const int32_t* tags,
                            double* score) {
  if (bcrf_status st = require(w != nullptr && tags != nullptr &&
                                   score != nullptr,
                               "null argument");
      st != BCRF_OK) {
    return st;
  }
  return wrap([&] {
    *score = bcrf::path_score(w->tensor, to_sequence(w->tensor.shape(), tags));
  });
}

bcrf_status bcrf_ibp_infer(const bcrf_weights* w, const bcrf_ibp_config* cfg,
                           double* marginals, double* residuals,
                           int32_t* sweeps) {
  if (bcrf_status st = require(w != nullptr && marginals != nullptr,
                               "null argument");
      st != BCRF_OK) {
    return st;
  }
  return wrap([&] {
    bcrf::IbpConfig config = convert(cfg);
    config.collect_trace = residuals != nullptr;
    bcrf::IbpResult r = bcrf::ibp_infer(w->tensor, config);
    copy_out(r.q.values(), marginals);
    if (residuals != nullptr) {
      for (const bcrf::IbpSweepRecord& rec : r.trace) {
        residuals[rec.sweep - 1] = rec.other_residual;
      }
    }
    if (sweeps != nullptr) *sweeps = r.sweeps;
  });
}

bcrf_status bcrf_mean_reg_value(const bcrf_weights* w, const double* marginals,
                                double* value) {
  if (bcrf_status st = require(w != nullptr && marginals != nullptr &&
                                   value != nullptr,
                               "null argument");
      st != BCRF_OK) {
    return st;
  }
  return wrap([&] {
    std::vector<double> q(marginals, marginals + w->tensor.shape().arc_count());
    *value = bcrf::mean_reg_value(
        w->tensor, bcrf::MarginalTensor(w->tensor.shape(), std::move(q)));
  });
}

bcrf_status bcrf_mbr_decode(const bcrf_weights* w, const bcrf_ibp_config* cfg,
                            int32_t repair, int32_t* tags) {
  if (bcrf_status st = require(w != nullptr && tags != nullptr,
                               "null argument");
      st != BCRF_OK) {
    return st;
  }
  return wrap([&] {
    bcrf::TagSequence x = bcrf::mbr_decode(w->tensor, convert(cfg),
                                           repair != 0);
    std::memcpy(tags, x.tags.data(), x.tags.size() * sizeof(int32_t));
  });
}

bcrf_status bcrf_map_gap(const bcrf_weights* w, const bcrf_ibp_config* cfg,
                         double* gap) {
  if (bcrf_status st = require(w != nullptr && gap != nullptr,
                               "null argument");
      st != BCRF_OK) {
    return st;
  }
  return wrap([&] { *gap = bcrf::map_gap(w->tensor, convert(cfg)); });
}

bcrf_status bcrf_mf_infer(const bcrf_weights* w, int32_t iters,
                          double* probs) {
  if (bcrf_status st = require(w != nullptr && probs != nullptr,
                               "null argument");
      st != BCRF_OK) {
    return st;
  }
  return wrap([&] {
    copy_out(bcrf::mf_infer(w->tensor, iters).probs(), probs);
  });
}

bcrf_status bcrf_mf_decode(const bcrf_weights* w, int32_t iters,
                           int32_t* tags) {
  if (bcrf_status st = require(w != nullptr && tags != nullptr,
                               "null argument");
      st != BCRF_OK) {
    return st;
  }
  return wrap([&] {
    bcrf::TagSequence x = bcrf::mf_decode(w->tensor, iters);
    std::memcpy(tags, x.tags.data(), x.tags.size() * sizeof(int32_t));
  });
}

bcrf_status bcrf_nll_loss(const bcrf_weights* w, const int32_t* gold,
                          double* value, double* grad) {
  if (bcrf_status st = require(w != nullptr && gold != nullptr &&
                                   value != nullptr && grad != nullptr,
                               "null argument");
      st != BCRF_OK) {
    return st;
  }
  return wrap([&] {
    bcrf::SufficientStats y = bcrf::encode_sequence(
        w->tensor.shape(), to_sequence(w->tensor.shape(), gold));
    bcrf::LossOutput out = bcrf::nll_loss(w->tensor, y);
    *value = out.value;
    copy_out(out.grad, grad);
  });
}

bcrf_status bcrf_fy_loss(const bcrf_weights* w, const int32_t* gold,
                         const bcrf_ibp_config* cfg, double* value,
                         double* grad) {
  if (bcrf_status st = require(w != nullptr && gold != nullptr &&
                                   value != nullptr && grad != nullptr,
                               "null argument");
      st != BCRF_OK) {
    return st;
  }
  return wrap([&] {
    bcrf::SufficientStats y = bcrf::encode_sequence(
        w->tensor.shape(), to_sequence(w->tensor.shape(), gold));
    bcrf::IbpConfig config = convert(cfg);
    if (cfg == nullptr) config = bcrf::IbpConfig::marginal_defaults();
    bcrf::LossOutput out = bcrf::fy_mean_loss(w->tensor, y, config);
    *value = out.value;
    copy_out(out.grad, grad);
  });
}

bcrf_status bcrf_partial_nll_loss(const bcrf_weights* w, const bcrf_mask* m,
                                  double* value, double* grad) {
  if (bcrf_status st = require(w != nullptr && m != nullptr &&
                                   value != nullptr && grad != nullptr,
                               "null argument");
      st != BCRF_OK) {
    return st;
  }
  return wrap([&] {
    bcrf::LossOutput out = bcrf::partial_nll_loss(w->tensor, m->mask);
    *value = out.value;
    copy_out(out.grad, grad);
  });
}

bcrf_status bcrf_partial_fy_loss(const bcrf_weights* w, const bcrf_mask* m,
                                 const bcrf_ibp_config* cfg, double* value,
                                 double* grad) {
  if (bcrf_status st = require(w != nullptr && m != nullptr &&
                                   value != nullptr && grad != nullptr,
                               "null argument");
      st != BCRF_OK) {
    return st;
  }
  return wrap([&] {
    bcrf::IbpConfig config = convert(cfg);
    if (cfg == nullptr) config = bcrf::IbpConfig::marginal_defaults();
    bcrf::LossOutput out = bcrf::partial_fy_loss(w->tensor, m->mask, config);
    *value = out.value;
    copy_out(out.grad, grad);
  });
}

bcrf_status bcrf_forward_logz_batch(const bcrf_weights* const* ws,
                                    int32_t count, int32_t threads,
                                    double* logz, bcrf_status* item_status) {
  if (bcrf_status st = require(ws != nullptr && logz != nullptr && count >= 0,
                               "null argument");
      st != BCRF_OK) {
    return st;
  }
  std::vector<const bcrf::WeightTensor*> storage;
  auto items = bcrf::batched_forward_logz(tensors_of(ws, count, storage),
                                          threads);
  return report_items(items, item_status,
                      [&](size_t i, const double& v) { logz[i] = v; });
}

bcrf_status bcrf_viterbi_batch(const bcrf_weights* const* ws, int32_t count,
                               int32_t threads, int32_t* const* tags,
                               double* scores, bcrf_status* item_status) {
  if (bcrf_status st = require(ws != nullptr && tags != nullptr && count >= 0,
                               "null argument");
      st != BCRF_OK) {
    return st;
  }
  std::vector<const bcrf::WeightTensor*> storage;
  auto items = bcrf::batched_viterbi(tensors_of(ws, count, storage), threads);
  return report_items(items, item_status,
                      [&](size_t i, const bcrf::ViterbiResult& r) {
                        std::memcpy(tags[i], r.tags.tags.data(),
                                    r.tags.tags.size() * sizeof(int32_t));
                        if (scores != nullptr) scores[i] = r.score;
                      });
}

bcrf_status bcrf_crf_marginals_batch(const bcrf_weights* const* ws,
                                     int32_t count, int32_t threads,
                                     double* const* marginals,
                                     bcrf_status* item_status) {
  if (bcrf_status st = require(ws != nullptr && marginals != nullptr &&
                                   count >= 0,
                               "null argument");
      st != BCRF_OK) {
    return st;
  }
  std::vector<const bcrf::WeightTensor*> storage;
  auto items = bcrf::batched_crf_marginals(tensors_of(ws, count, storage),
                                           threads);
  return report_items(items, item_status,
                      [&](size_t i, const bcrf::MarginalTensor& q) {
                        copy_out(q.values(), marginals[i]);
                      });
}

bcrf_status bcrf_ibp_infer_batch(const bcrf_weights* const* ws, int32_t count,
                                 const bcrf_ibp_config* cfg, int32_t threads,
                                 double* const* marginals,
                                 bcrf_status* item_status) {
  if (bcrf_status st = require(ws != nullptr && marginals != nullptr &&
                                   count >= 0,
                               "null argument");
      st != BCRF_OK) {
    return st;
  }
  std::vector<const bcrf::WeightTensor*> storage;
  auto items = bcrf::batched_ibp_infer(tensors_of(ws, count, storage),
                                       convert(cfg), threads);
  return report_items(items, item_status,
                      [&](size_t i, const bcrf::MarginalTensor& q) {
                        copy_out(q.values(), marginals[i]);
                      });
}

bcrf_status bcrf_mf_infer_batch(const bcrf_weights* const* ws, int32_t count,
                                int32_t iters, int32_t threads,
                                double* const* probs,
                                bcrf_status* item_status) {
  if (bcrf_status st = require(ws != nullptr && probs != nullptr && count >= 0,
                               "null argument");
      st != BCRF_OK) {
    return st;
  }
  std::vector<const bcrf::WeightTensor*> storage;
  auto items = bcrf::batched_mf_infer(tensors_of(ws, count, storage), iters,
                                      threads);
  return report_items(items, item_status,
                      [&](size_t i, const bcrf::FactorizedDistribution& r) {
                        copy_out(r.probs(), probs[i]);
                      });
}

bcrf_status bcrf_oracle_logz(const bcrf_weights* w, double* logz) {
  if (bcrf_status st = require(w != nullptr && logz != nullptr,
                               "null argument");
      st != BCRF_OK) {
    return st;
  }
  return wrap([&] { *logz = bcrf::oracle_logz(w->tensor); });
}

bcrf_status bcrf_oracle_crf_marginals(const bcrf_weights* w,
                                      double* marginals) {
  if (bcrf_status st = require(w != nullptr && marginals != nullptr,
                               "null argument");
      st != BCRF_OK) {
    return st;
  }
  return wrap([&] {
    copy_out(bcrf::oracle_crf_marginals(w->tensor).values(), marginals);
  });
}

bcrf_status bcrf_oracle_mean_reg(const bcrf_weights* w, double tol,
                                 double* marginals, double* value) {
  if (bcrf_status st = require(w != nullptr && marginals != nullptr,
                               "null argument");
      st != BCRF_OK) {
    return st;
  }
  return wrap([&] {
    bcrf::MeanRegSolution sol = bcrf::oracle_meanreg(w->tensor, tol);
    copy_out(sol.q.values(), marginals);
    if (value != nullptr) *value = sol.value;
  });
}

}  // extern "C"
