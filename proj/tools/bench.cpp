#include "bench.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <iomanip>
#include <json.hpp>
#include <map>

#include "capi_util.hpp"
#include "rng.hpp"

namespace cli {

namespace {

using Clock = std::chrono::steady_clock;

double time_once(const std::function<void()>& fn) {
  const auto t0 = Clock::now();
  fn();
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct Timed {
  BenchCell cell;
  std::function<void()> fn;
  int32_t loops = 1;
  std::vector<double> samples;

  double median() const {
    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    return sorted[sorted.size() / 2];
  }
};

}  // namespace

std::vector<BenchCell> run_bench(const BenchConfig& cfg, std::ostream& log) {
  Rng rng(cfg.seed);

  // A handful of distinct weight tensors per shape, cycled across the batch;
  // batches reference them by pointer so the grid fits in memory.
  constexpr int32_t kDistinct = 8;
  std::map<std::pair<int32_t, int32_t>, std::vector<WeightsHandle>> pools;
  for (int32_t n : cfg.lengths) {
    for (int32_t tags : cfg.tag_counts) {
      std::vector<WeightsHandle>& pool = pools[{n, tags}];
      for (int32_t j = 0; j < kDistinct; ++j) {
        std::vector<double> values(static_cast<size_t>(n - 1) * tags * tags);
        for (double& v : values) v = rng.normal(1.0);
        pool.emplace_back(n, tags, values);
      }
    }
  }
  int64_t max_arcs = 0, max_rows = 0;
  for (int32_t n : cfg.lengths) {
    for (int32_t tags : cfg.tag_counts) {
      max_arcs = std::max<int64_t>(max_arcs,
                                   static_cast<int64_t>(n - 1) * tags * tags);
      max_rows = std::max<int64_t>(max_rows,
                                   static_cast<int64_t>(n) * tags);
    }
  }
  const int32_t max_batch =
      *std::max_element(cfg.batch_sizes.begin(), cfg.batch_sizes.end());
  // Results are copied out sequentially, so one slab can back every item.
  std::vector<double> out_slab(max_arcs);
  std::vector<double> prob_slab(max_rows);
  std::vector<double*> out_ptrs(max_batch, out_slab.data());
  std::vector<double*> prob_ptrs(max_batch, prob_slab.data());

  std::map<std::pair<int32_t, int32_t>, std::vector<const bcrf_weights*>>
      batches;
  for (auto& [key, pool] : pools) {
    std::vector<const bcrf_weights*>& ptrs = batches[key];
    ptrs.resize(max_batch);
    for (int32_t b = 0; b < max_batch; ++b) {
      ptrs[b] = pool[b % kDistinct].ptr;
    }
  }

  std::vector<bcrf_ibp_config> ibp_cfgs(cfg.ibp_iters.size());
  for (size_t j = 0; j < cfg.ibp_iters.size(); ++j) {
    bcrf_ibp_config_init(&ibp_cfgs[j], BCRF_IBP_MARGINAL);
    ibp_cfgs[j].max_iters = cfg.ibp_iters[j];
    ibp_cfgs[j].tol = 0.0;
  }

  std::vector<Timed> timers;
  for (int32_t n : cfg.lengths) {
    for (int32_t tags : cfg.tag_counts) {
      for (int32_t batch : cfg.batch_sizes) {
        const bcrf_weights* const* ptrs = batches[{n, tags}].data();
        timers.push_back(
            Timed{BenchCell{n, tags, batch, "forward", 0.0, 0.0},
                  [=, this_threads = cfg.threads, &out_ptrs] {
                    check(bcrf_crf_marginals_batch(ptrs, batch, this_threads,
                                                   out_ptrs.data(), nullptr),
                          "bench forward");
                  },
                  1,
                  {}});
        for (size_t j = 0; j < cfg.ibp_iters.size(); ++j) {
          const bcrf_ibp_config* ibp = &ibp_cfgs[j];
          timers.push_back(
              Timed{BenchCell{n, tags, batch,
                              "ibp-" + std::to_string(cfg.ibp_iters[j]), 0.0,
                              0.0},
                    [=, this_threads = cfg.threads, &out_ptrs] {
                      check(bcrf_ibp_infer_batch(ptrs, batch, ibp,
                                                 this_threads, out_ptrs.data(),
                                                 nullptr),
                            "bench ibp");
                    },
                    1,
                    {}});
        }
        for (int32_t k : cfg.mf_iters) {
          timers.push_back(
              Timed{BenchCell{n, tags, batch, "mf-" + std::to_string(k), 0.0,
                              0.0},
                    [=, this_threads = cfg.threads, &prob_ptrs] {
                      check(bcrf_mf_infer_batch(ptrs, batch, k, this_threads,
                                                prob_ptrs.data(), nullptr),
                            "bench mf");
                    },
                    1,
                    {}});
        }
      }
    }
  }

  // Warmup doubles as loop calibration: short cells loop enough calls per
  // sample to last ~30 ms.
  for (Timed& t : timers) {
    const double warm = std::max(1e-3, time_once(t.fn));
    t.loops = std::max<int32_t>(1, static_cast<int32_t>(30.0 / warm));
  }
  // Interleaved rounds: every cell is sampled once per round, so slow drift
  // of the machine cancels out of the cross-cell ratios.
  for (int32_t r = 0; r < cfg.reps; ++r) {
    log << "round " << (r + 1) << "/" << cfg.reps << "\n";
    log.flush();
    for (Timed& t : timers) {
      const auto t0 = Clock::now();
      for (int32_t l = 0; l < t.loops; ++l) t.fn();
      t.samples.push_back(
          std::chrono::duration<double, std::milli>(Clock::now() - t0)
              .count() /
          t.loops);
    }
  }

  std::vector<BenchCell> cells;
  for (Timed& t : timers) {
    t.cell.ms_per_batch = t.median();
    cells.push_back(t.cell);
  }
  for (BenchCell& c : cells) {
    for (const BenchCell& f : cells) {
      if (f.method == "forward" && f.n == c.n && f.tags == c.tags &&
          f.batch == c.batch) {
        c.speedup_vs_forward = f.ms_per_batch / c.ms_per_batch;
      }
    }
  }
  return cells;
}

void write_bench_table(std::ostream& out,
                       const std::vector<BenchCell>& cells) {
  out << std::left << std::setw(6) << "n" << std::setw(6) << "tags"
      << std::setw(7) << "batch" << std::setw(10) << "method" << std::setw(14)
      << "ms/batch" << std::setw(12) << "speedup" << '\n';
  for (const BenchCell& c : cells) {
    out << std::left << std::setw(6) << c.n << std::setw(6) << c.tags
        << std::setw(7) << c.batch << std::setw(10) << c.method
        << std::setw(14) << std::fixed << std::setprecision(3)
        << c.ms_per_batch << std::setw(12) << std::setprecision(2)
        << c.speedup_vs_forward << '\n';
  }
}

void write_bench_json(const std::string& path,
                      const std::vector<BenchCell>& cells) {
  nlohmann::json j = nlohmann::json::array();
  for (const BenchCell& c : cells) {
    j.push_back({{"n", c.n},
                 {"tags", c.tags},
                 {"batch", c.batch},
                 {"method", c.method},
                 {"ms_per_batch", c.ms_per_batch},
                 {"speedup_vs_forward", c.speedup_vs_forward}});
  }
  std::ofstream out(path);
  if (!out) throw CliError(1, "cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

}  // namespace cli
