#include "pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <thread>

#include "capi_util.hpp"
#include "rng.hpp"

namespace cli {

Inference parse_inference(const std::string& name) {
  if (name == "crf") return Inference::kCrf;
  if (name == "bcrf") return Inference::kBcrf;
  if (name == "mf") return Inference::kMf;
  if (name == "unstructured") return Inference::kUnstructured;
  throw CliError(4, "unknown inference '" + name + "'");
}

LossKind parse_loss(const std::string& name) {
  if (name == "nll") return LossKind::kNll;
  if (name == "fy") return LossKind::kFy;
  if (name == "partial-nll") return LossKind::kPartialNll;
  if (name == "partial-fy") return LossKind::kPartialFy;
  throw CliError(4, "unknown loss '" + name + "'");
}

bool loss_is_partial(LossKind loss) {
  return loss == LossKind::kPartialNll || loss == LossKind::kPartialFy;
}

namespace {

// Chunked parallel map over [0, count); results land in disjoint slots, so
// outputs are independent of scheduling.
void parallel_items(int64_t count, int32_t threads,
                    const std::function<void(int64_t)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int64_t> cursor{0};
  auto worker = [&] {
    while (true) {
      const int64_t i = cursor.fetch_add(1);
      if (i >= count) return;
      fn(i);
    }
  };
  std::vector<std::thread> pool;
  const int32_t spawn = std::min<int64_t>(threads - 1, count - 1);
  pool.reserve(spawn);
  for (int32_t t = 0; t < spawn; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
}

bcrf_ibp_config training_ibp(const RunConfig& cfg) {
  bcrf_ibp_config out;
  bcrf_ibp_config_init(&out, BCRF_IBP_MARGINAL);
  out.tau_inverse = 1.0;
  out.max_iters = cfg.iters;
  out.tol = 0.0;
  return out;
}

bcrf_ibp_config decoding_ibp(const RunConfig& cfg) {
  bcrf_ibp_config out;
  bcrf_ibp_config_init(&out, BCRF_IBP_DECODE);
  out.tau_inverse = cfg.tau_inverse;
  out.max_iters = cfg.iters;
  out.tol = 0.0;
  return out;
}

std::vector<int32_t> gold_ids(const LinearScorer& scorer, const Record& r) {
  std::vector<int32_t> ids;
  ids.reserve(r.tags.size());
  for (const std::string& tag : r.tags) {
    ids.push_back(tag_id(scorer.tags, tag));
  }
  return ids;
}

struct ArcLoss {
  double value = 0.0;
  std::vector<double> arc_grad;
};

ArcLoss arc_loss(const RunConfig& cfg, const LinearScorer& scorer,
                 const Record& r, const std::vector<int32_t>& token_ids) {
  const int32_t n = r.length();
  const int32_t T = scorer.num_tags();
  std::vector<double> values = score_sentence(scorer, token_ids, r.pads);
  WeightsHandle w(n, T, values);

  ArcLoss out;
  out.arc_grad.assign(values.size(), 0.0);
  switch (cfg.loss) {
    case LossKind::kNll: {
      std::vector<int32_t> gold = gold_ids(scorer, r);
      check(bcrf_nll_loss(w.ptr, gold.data(), &out.value,
                          out.arc_grad.data()),
            "nll loss");
      break;
    }
    case LossKind::kFy: {
      std::vector<int32_t> gold = gold_ids(scorer, r);
      bcrf_ibp_config ibp = training_ibp(cfg);
      check(bcrf_fy_loss(w.ptr, gold.data(), &ibp, &out.value,
                         out.arc_grad.data()),
            "fy loss");
      break;
    }
    case LossKind::kPartialNll: {
      MaskHandle mask(n, T, annotation_mask(scorer, r));
      check(bcrf_partial_nll_loss(w.ptr, mask.ptr, &out.value,
                                  out.arc_grad.data()),
            "partial nll loss");
      break;
    }
    case LossKind::kPartialFy: {
      MaskHandle mask(n, T, annotation_mask(scorer, r));
      bcrf_ibp_config ibp = training_ibp(cfg);
      check(bcrf_partial_fy_loss(w.ptr, mask.ptr, &ibp, &out.value,
                                 out.arc_grad.data()),
            "partial fy loss");
      break;
    }
  }
  return out;
}

void validate_train_config(const RunConfig& cfg, const Dataset& train_data,
                           const Dataset& dev_data,
                           const LinearScorer& scorer) {
  const bool masked_task = scorer.structure != Structure::kNone ||
                           train_data.any_padded() || dev_data.any_padded();
  if (cfg.inference == Inference::kMf && masked_task) {
    throw CliError(4,
                   "mean field cannot decode a task with forbidden "
                   "transitions");
  }
  if (loss_is_partial(cfg.loss) && !train_data.any_partial()) {
    throw CliError(4, "partial loss requires partially annotated data");
  }
  if (!loss_is_partial(cfg.loss) && train_data.any_partial()) {
    throw CliError(4,
                   "fully supervised loss cannot train on partially "
                   "annotated data");
  }
}

}  // namespace

RecordLoss record_loss(const RunConfig& cfg, const LinearScorer& scorer,
                       const Record& r) {
  std::vector<int32_t> token_ids = record_token_ids(scorer, r);
  ArcLoss arc = arc_loss(cfg, scorer, r, token_ids);
  RecordLoss out;
  out.value = arc.value;
  out.emission_grad.assign(scorer.emission.size(), 0.0);
  out.transition_grad.assign(scorer.transition.size(), 0.0);
  accumulate_gradient(scorer, token_ids, arc.arc_grad, out.emission_grad,
                      out.transition_grad);
  return out;
}

std::vector<EpochMetrics> train(const RunConfig& cfg,
                                const Dataset& train_data,
                                const Dataset& dev_data, LinearScorer& scorer,
                                std::ostream* metrics) {
  validate_train_config(cfg, train_data, dev_data, scorer);
  const size_t count = train_data.records.size();
  std::vector<std::vector<int32_t>> token_ids(count);
  for (size_t i = 0; i < count; ++i) {
    token_ids[i] = record_token_ids(scorer, train_data.records[i]);
  }

  Rng shuffler(cfg.seed);
  std::vector<size_t> order(count);
  for (size_t i = 0; i < count; ++i) order[i] = i;

  std::vector<EpochMetrics> log;
  for (int32_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    shuffler.shuffle(order);
    double loss_sum = 0.0;
    for (size_t begin = 0; begin < count; begin += cfg.batch_size) {
      const size_t end = std::min(count, begin + cfg.batch_size);
      std::vector<ArcLoss> results(end - begin);
      parallel_items(static_cast<int64_t>(end - begin), cfg.threads,
                     [&](int64_t k) {
                       const size_t idx = order[begin + k];
                       results[k] = arc_loss(cfg, scorer,
                                             train_data.records[idx],
                                             token_ids[idx]);
                     });
      std::vector<double> e_grad(scorer.emission.size(), 0.0);
      std::vector<double> a_grad(scorer.transition.size(), 0.0);
      for (size_t k = 0; k < results.size(); ++k) {
        const size_t idx = order[begin + k];
        loss_sum += results[k].value;
        accumulate_gradient(scorer, token_ids[idx], results[k].arc_grad,
                            e_grad, a_grad);
      }
      const double step = cfg.lr / static_cast<double>(results.size());
      for (size_t i = 0; i < scorer.emission.size(); ++i) {
        scorer.emission[i] -= step * e_grad[i];
      }
      for (size_t i = 0; i < scorer.transition.size(); ++i) {
        scorer.transition[i] -= step * a_grad[i];
      }
    }

    std::vector<std::vector<std::string>> predictions(dev_data.records.size());
    parallel_items(static_cast<int64_t>(dev_data.records.size()), cfg.threads,
                   [&](int64_t k) {
                     predictions[k] =
                         decode_record(cfg, scorer, dev_data.records[k]);
                   });
    EpochMetrics em;
    em.epoch = epoch;
    em.loss = count > 0 ? loss_sum / static_cast<double>(count) : 0.0;
    em.dev_acc = tag_accuracy(dev_data, predictions);
    em.wall_ms = std::chrono::duration<double, std::milli>(
                     std::chrono::steady_clock::now() - started)
                     .count();
    if (metrics != nullptr) {
      (*metrics) << "{\"epoch\":" << em.epoch << ",\"loss\":" << em.loss
                 << ",\"dev_acc\":" << em.dev_acc
                 << ",\"wall_ms\":" << em.wall_ms << "}\n";
    }
    log.push_back(em);
  }
  return log;
}

namespace {

std::vector<std::string> tags_of(const LinearScorer& scorer,
                                 const std::vector<int32_t>& ids,
                                 int32_t pads) {
  std::vector<std::string> out;
  for (size_t i = pads; i < ids.size(); ++i) {
    out.push_back(scorer.tags[ids[i]]);
  }
  return out;
}

}  // namespace

std::vector<std::string> decode_record(const RunConfig& cfg,
                                       const LinearScorer& scorer,
                                       const Record& r) {
  std::vector<int32_t> token_ids = record_token_ids(scorer, r);
  const int32_t n = r.length();
  const int32_t T = scorer.num_tags();

  if (cfg.inference == Inference::kUnstructured) {
    // Per-position emission argmax; no transition information, no
    // constraints. The repair flag re-decodes with the mask and zeroed
    // transitions to restore well-formedness.
    if (cfg.repair) {
      LinearScorer unary = scorer;
      std::fill(unary.transition.begin(), unary.transition.end(), 0.0);
      std::vector<double> values = score_sentence(unary, token_ids, r.pads);
      WeightsHandle w(n, T, values);
      std::vector<int32_t> tags(n, 0);
      check(bcrf_viterbi(w.ptr, tags.data(), nullptr), "repair decode");
      return tags_of(scorer, tags, r.pads);
    }
    std::vector<int32_t> tags(n, 0);
    const int32_t pad_tag = static_cast<int32_t>(
        std::find(scorer.tags.begin(), scorer.tags.end(), kPadTag) -
        scorer.tags.begin());
    for (int32_t i = 0; i < n; ++i) {
      int32_t best = -1;
      for (int32_t t = 0; t < T; ++t) {
        if (t == pad_tag && i >= r.pads) continue;
        if (best < 0 || scorer.e(token_ids[i], t) > scorer.e(token_ids[i], best)) {
          best = t;
        }
      }
      tags[i] = best;
    }
    return tags_of(scorer, tags, r.pads);
  }

  std::vector<double> values = score_sentence(scorer, token_ids, r.pads);
  if (cfg.inference == Inference::kMf) {
    bool masked = false;
    for (double v : values) {
      if (v == -std::numeric_limits<double>::infinity()) masked = true;
    }
    if (masked) {
      throw CliError(4,
                     "mean field cannot decode a task with forbidden "
                     "transitions");
    }
    WeightsHandle w(n, T, values);
    std::vector<int32_t> tags(n, 0);
    check(bcrf_mf_decode(w.ptr, cfg.iters, tags.data()), "mean field decode");
    return tags_of(scorer, tags, r.pads);
  }

  WeightsHandle w(n, T, values);
  std::vector<int32_t> tags(n, 0);
  if (cfg.inference == Inference::kCrf) {
    check(bcrf_viterbi(w.ptr, tags.data(), nullptr), "viterbi decode");
  } else {
    bcrf_ibp_config ibp = decoding_ibp(cfg);
    check(bcrf_mbr_decode(w.ptr, &ibp, cfg.repair ? 1 : 0, tags.data()),
          "mbr decode");
  }
  return tags_of(scorer, tags, r.pads);
}

double tag_accuracy(const Dataset& data,
                    const std::vector<std::vector<std::string>>& predictions) {
  int64_t correct = 0, total = 0;
  for (size_t k = 0; k < data.records.size(); ++k) {
    const Record& r = data.records[k];
    for (int32_t i = r.pads; i < r.length(); ++i) {
      if (r.tags[i] == kUnannotated) continue;
      ++total;
      if (predictions[k][i - r.pads] == r.tags[i]) ++correct;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / total;
}

namespace {

struct Span {
  int32_t start, end;
  std::string type;
  auto operator<=>(const Span&) const = default;
};

// Tolerant BIES span recovery: stray I/E/S tags start or close segments as
// best they can, so even ill-formed predictions produce a span set.
std::vector<Span> extract_spans(const std::vector<std::string>& tags) {
  std::vector<Span> spans;
  int32_t open_start = -1;
  std::string open_type;
  auto close_open = [&](int32_t end) {
    if (open_start >= 0) spans.push_back({open_start, end, open_type});
    open_start = -1;
  };
  for (int32_t i = 0; i < static_cast<int32_t>(tags.size()); ++i) {
    const std::string& tag = tags[i];
    char kind = 0;
    std::string type;
    if (tag.size() >= 3 && tag[1] == '-' &&
        (tag[0] == 'B' || tag[0] == 'I' || tag[0] == 'E' || tag[0] == 'S')) {
      kind = tag[0];
      type = tag.substr(2);
    }
    switch (kind) {
      case 'B':
        close_open(i - 1);
        open_start = i;
        open_type = type;
        break;
      case 'I':
        if (open_start < 0 || open_type != type) {
          close_open(i - 1);
          open_start = i;
          open_type = type;
        }
        break;
      case 'E':
        if (open_start >= 0 && open_type == type) {
          close_open(i);
        } else {
          close_open(i - 1);
          spans.push_back({i, i, type});
        }
        break;
      case 'S':
        close_open(i - 1);
        spans.push_back({i, i, type});
        break;
      default:
        close_open(i - 1);
        break;
    }
  }
  close_open(static_cast<int32_t>(tags.size()) - 1);
  return spans;
}

}  // namespace

SpanScore span_f1(const Dataset& data,
                  const std::vector<std::vector<std::string>>& predictions) {
  int64_t gold_count = 0, pred_count = 0, hit = 0;
  for (size_t k = 0; k < data.records.size(); ++k) {
    const Record& r = data.records[k];
    std::vector<std::string> gold(r.tags.begin() + r.pads, r.tags.end());
    std::vector<Span> gold_spans = extract_spans(gold);
    std::vector<Span> pred_spans = extract_spans(predictions[k]);
    std::set<Span> gold_set(gold_spans.begin(), gold_spans.end());
    gold_count += gold_spans.size();
    pred_count += pred_spans.size();
    for (const Span& s : pred_spans) {
      if (gold_set.count(s)) ++hit;
    }
  }
  SpanScore out;
  out.precision = pred_count == 0 ? 0.0 : static_cast<double>(hit) / pred_count;
  out.recall = gold_count == 0 ? 0.0 : static_cast<double>(hit) / gold_count;
  out.f1 = (out.precision + out.recall) == 0.0
               ? 0.0
               : 2.0 * out.precision * out.recall /
                     (out.precision + out.recall);
  return out;
}

void write_predictions(
    const std::string& path, const Dataset& data,
    const std::vector<std::vector<std::string>>& predictions) {
  std::ofstream out(path);
  if (!out) throw CliError(1, "cannot open " + path + " for writing");
  for (size_t k = 0; k < data.records.size(); ++k) {
    const Record& r = data.records[k];
    for (int32_t i = r.pads; i < r.length(); ++i) {
      out << r.tokens[i] << '\t' << r.tags[i] << '\t'
          << predictions[k][i - r.pads] << '\n';
    }
    out << '\n';
  }
  if (!out) throw CliError(1, "write to " + path + " failed");
}

void write_marginals(const std::string& path, const RunConfig& cfg,
                     const LinearScorer& scorer, const Dataset& data) {
  if (cfg.inference != Inference::kCrf && cfg.inference != Inference::kBcrf) {
    throw CliError(4, "marginals require crf or bcrf inference");
  }
  std::ofstream out(path);
  if (!out) throw CliError(1, "cannot open " + path + " for writing");
  for (const Record& r : data.records) {
    std::vector<int32_t> token_ids = record_token_ids(scorer, r);
    std::vector<double> values = score_sentence(scorer, token_ids, r.pads);
    WeightsHandle w(r.length(), scorer.num_tags(), values);
    std::vector<double> q(values.size(), 0.0);
    if (cfg.inference == Inference::kCrf) {
      check(bcrf_crf_marginals(w.ptr, q.data()), "marginals");
    } else {
      bcrf_ibp_config ibp = decoding_ibp(cfg);
      check(bcrf_ibp_infer(w.ptr, &ibp, q.data(), nullptr, nullptr),
            "marginals");
    }
    WeightsHandle holder(r.length(), scorer.num_tags(), q);
    char* text = nullptr;
    check(bcrf_weights_format(holder.ptr, &text), "format");
    out << text;
    bcrf_string_free(text);
  }
  if (!out) throw CliError(1, "write to " + path + " failed");
}

}  // namespace cli
