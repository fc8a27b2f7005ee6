#include "bcrf/batch.hpp"

#include <algorithm>
#include <cmath>

#include "bcrf/logspace.hpp"
#include "bcrf/parallel.hpp"

namespace bcrf {

namespace {

// Arc accessor of the padded view of one item: true arcs, then a funnel into
// tag 0, then self-loops on tag 0.
struct PaddedView {
  const WeightTensor* w;

  double arc(int32_t slice, int32_t t, int32_t tp) const {
    const int32_t true_slices = w->shape().num_slices();
    if (slice < true_slices) return w->at(slice, t, tp);
    if (slice == true_slices) return tp == 0 ? 0.0 : kNegInf;
    return (t == 0 && tp == 0) ? 0.0 : kNegInf;
  }
};

struct BatchLayout {
  int32_t num_tags = 0;
  int32_t max_n = 0;
  std::vector<int32_t> ok_items;  // indices of reachable, well-formed items

  // Stages whose total work is small run inline: the dispatch latency of the
  // pool would dominate and distort per-stage timing. One cell costs about
  // num_tags inner operations.
  int stage_threads(int threads) const {
    const int64_t work = static_cast<int64_t>(ok_items.size()) * num_tags *
                         num_tags;
    return work < 16384 ? 1 : threads;
  }
};

template <typename T>
BatchLayout prepare(std::span<const WeightTensor* const> ws,
                    std::vector<ItemResult<T>>& results) {
  BatchLayout layout;
  results.resize(ws.size());
  for (size_t b = 0; b < ws.size(); ++b) {
    if (ws[b] == nullptr) {
      results[b].error = ErrorKind::kInvalidArgument;
      results[b].message = "null item";
      continue;
    }
    if (layout.num_tags == 0) layout.num_tags = ws[b]->shape().num_tags;
    if (ws[b]->shape().num_tags != layout.num_tags) {
      results[b].error = ErrorKind::kInvalidArgument;
      results[b].message = "items must share one tag set";
      continue;
    }
    Reachability r = validate_reachability(*ws[b]);
    if (!r.ok) {
      results[b].error = ErrorKind::kInfeasible;
      results[b].message = r.diagnostic;
      continue;
    }
    layout.max_n = std::max(layout.max_n, ws[b]->shape().n);
    layout.ok_items.push_back(static_cast<int32_t>(b));
  }
  return layout;
}

}  // namespace

std::vector<ItemResult<double>> batched_forward_logz(
    std::span<const WeightTensor* const> ws, int threads) {
  std::vector<ItemResult<double>> results;
  const BatchLayout layout = prepare(ws, results);
  const int32_t T = layout.num_tags;
  const int64_t active = static_cast<int64_t>(layout.ok_items.size());
  if (active == 0) return results;

  std::vector<double> prev(active * T, 0.0), cur(active * T);
  const int stage_threads = layout.stage_threads(threads);
  for (int32_t slice = 0; slice < layout.max_n - 1; ++slice) {
    parallel_for(active * T, stage_threads, [&](int64_t begin, int64_t end) {
      for (int64_t unit = begin; unit < end; ++unit) {
        const int64_t k = unit / T;
        const int32_t t = static_cast<int32_t>(unit % T);
        const PaddedView view{ws[layout.ok_items[k]]};
        std::span<const double> row(prev.data() + k * T, T);
        cur[unit] = detail::forward_cell_fn(
            T, [&](int32_t a, int32_t b) { return view.arc(slice, a, b); },
            row, t);
      }
    });
    std::swap(prev, cur);
  }
  for (int64_t k = 0; k < active; ++k) {
    results[layout.ok_items[k]].value =
        logsumexp(std::span<const double>(prev.data() + k * T, T));
  }
  return results;
}

std::vector<ItemResult<ViterbiResult>> batched_viterbi(
    std::span<const WeightTensor* const> ws, int threads) {
  std::vector<ItemResult<ViterbiResult>> results;
  const BatchLayout layout = prepare(ws, results);
  const int32_t T = layout.num_tags;
  const int32_t N = layout.max_n;
  const int64_t active = static_cast<int64_t>(layout.ok_items.size());
  if (active == 0) return results;

  // Suffix chart for every item, stage-major like the unbatched solver.
  std::vector<double> chart(active * static_cast<int64_t>(N) * T, 0.0);
  auto row = [&](int64_t k, int32_t i) {
    return std::span<const double>(
        chart.data() + (k * N + i) * static_cast<int64_t>(T), T);
  };
  const int stage_threads = layout.stage_threads(threads);
  for (int32_t i = N - 1; i >= 1; --i) {
    parallel_for(active * T, stage_threads, [&](int64_t begin, int64_t end) {
      for (int64_t unit = begin; unit < end; ++unit) {
        const int64_t k = unit / T;
        const int32_t t = static_cast<int32_t>(unit % T);
        const PaddedView view{ws[layout.ok_items[k]]};
        chart[(k * N + i - 1) * static_cast<int64_t>(T) + t] =
            detail::viterbi_cell_fn(
                T, [&](int32_t a, int32_t b) { return view.arc(i - 1, a, b); },
                row(k, i), t);
      }
    });
  }
  parallel_for(active, threads, [&](int64_t begin, int64_t end) {
    for (int64_t k = begin; k < end; ++k) {
      const int32_t n = ws[layout.ok_items[k]]->shape().n;
      const PaddedView view{ws[layout.ok_items[k]]};
      ViterbiResult item;
      item.tags.tags.assign(n, 0);
      std::span<const double> first = row(k, 0);
      int32_t best = 0;
      for (int32_t t = 1; t < T; ++t) {
        if (first[t] > first[best]) best = t;
      }
      item.tags.tags[0] = best;
      item.score = first[best];
      for (int32_t i = 1; i < n; ++i) {
        const double target =
            chart[(k * N + i - 1) * static_cast<int64_t>(T) +
                  item.tags.tags[i - 1]];
        std::span<const double> next = row(k, i);
        for (int32_t t = 0; t < T; ++t) {
          if (log_mul(view.arc(i - 1, item.tags.tags[i - 1], t), next[t]) ==
              target) {
            item.tags.tags[i] = t;
            break;
          }
        }
      }
      results[layout.ok_items[k]].value = std::move(item);
    }
  });
  return results;
}

std::vector<ItemResult<MarginalTensor>> batched_crf_marginals(
    std::span<const WeightTensor* const> ws, int threads) {
  std::vector<ItemResult<MarginalTensor>> results;
  const BatchLayout layout = prepare(ws, results);
  const int32_t T = layout.num_tags;
  const int32_t N = layout.max_n;
  const int64_t active = static_cast<int64_t>(layout.ok_items.size());
  if (active == 0) return results;

  std::vector<double> alpha(active * static_cast<int64_t>(N) * T, 0.0);
  std::vector<double> beta(active * static_cast<int64_t>(N) * T, 0.0);
  auto alpha_row = [&](int64_t k, int32_t i) {
    return std::span<const double>(
        alpha.data() + (k * N + i) * static_cast<int64_t>(T), T);
  };
  auto beta_row = [&](int64_t k, int32_t i) {
    return std::span<const double>(
        beta.data() + (k * N + i) * static_cast<int64_t>(T), T);
  };
  const int stage_threads = layout.stage_threads(threads);
  for (int32_t i = 1; i < N; ++i) {
    parallel_for(active * T, stage_threads, [&](int64_t begin, int64_t end) {
      for (int64_t unit = begin; unit < end; ++unit) {
        const int64_t k = unit / T;
        const int32_t t = static_cast<int32_t>(unit % T);
        const PaddedView view{ws[layout.ok_items[k]]};
        alpha[(k * N + i) * static_cast<int64_t>(T) + t] =
            detail::forward_cell_fn(
                T, [&](int32_t a, int32_t b) { return view.arc(i - 1, a, b); },
                alpha_row(k, i - 1), t);
      }
    });
  }
  for (int32_t i = N - 2; i >= 0; --i) {
    parallel_for(active * T, stage_threads, [&](int64_t begin, int64_t end) {
      for (int64_t unit = begin; unit < end; ++unit) {
        const int64_t k = unit / T;
        const int32_t t = static_cast<int32_t>(unit % T);
        const PaddedView view{ws[layout.ok_items[k]]};
        beta[(k * N + i) * static_cast<int64_t>(T) + t] =
            detail::backward_cell_fn(
                T, [&](int32_t a, int32_t b) { return view.arc(i, a, b); },
                beta_row(k, i + 1), t);
      }
    });
  }
  parallel_for(active, threads, [&](int64_t begin, int64_t end) {
    for (int64_t k = begin; k < end; ++k) {
      const WeightTensor& w = *ws[layout.ok_items[k]];
      const ProblemShape& shape = w.shape();
      const double logz = logsumexp(alpha_row(k, shape.n - 1));
      std::vector<double> q(shape.arc_count());
      for (int32_t i = 0; i < shape.num_slices(); ++i) {
        for (int32_t t = 0; t < T; ++t) {
          for (int32_t tp = 0; tp < T; ++tp) {
            double lp = log_mul(
                alpha[(k * N + i) * static_cast<int64_t>(T) + t],
                log_mul(w.at(i, t, tp),
                        beta[(k * N + i + 1) * static_cast<int64_t>(T) + tp]));
            q[shape.arc(i, t, tp)] = log_to_linear(log_mul(lp, -logz));
          }
        }
      }
      results[layout.ok_items[k]].value =
          MarginalTensor(shape, std::move(q));
    }
  });
  return results;
}

std::vector<ItemResult<MarginalTensor>> batched_ibp_infer(
    std::span<const WeightTensor* const> ws, const IbpConfig& cfg,
    int threads) {
  std::vector<ItemResult<MarginalTensor>> results(ws.size());
  IbpConfig item_cfg = cfg;
  item_cfg.collect_trace = false;  // traces are dropped here anyway
  parallel_for(static_cast<int64_t>(ws.size()), threads,
               [&](int64_t begin, int64_t end) {
                 for (int64_t b = begin; b < end; ++b) {
                   try {
                     if (ws[b] == nullptr) {
                       fail(ErrorKind::kInvalidArgument, "null item");
                     }
                     results[b].value =
                         ibp_infer(*ws[b], item_cfg, 1).q;
                   } catch (const Error& e) {
                     results[b].error = e.kind();
                     results[b].message = e.what();
                   }
                 }
               });
  return results;
}

std::vector<ItemResult<FactorizedDistribution>> batched_mf_infer(
    std::span<const WeightTensor* const> ws, int32_t iters, int threads) {
  std::vector<ItemResult<FactorizedDistribution>> results(ws.size());
  parallel_for(static_cast<int64_t>(ws.size()), threads,
               [&](int64_t begin, int64_t end) {
                 for (int64_t b = begin; b < end; ++b) {
                   try {
                     if (ws[b] == nullptr) {
                       fail(ErrorKind::kInvalidArgument, "null item");
                     }
                     results[b].value = mf_infer(*ws[b], iters);
                   } catch (const Error& e) {
                     results[b].error = e.kind();
                     results[b].message = e.what();
                   }
                 }
               });
  return results;
}

}  // namespace bcrf
