#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace cli {

struct BenchConfig {
  std::vector<int32_t> lengths{32, 128, 512};
  std::vector<int32_t> tag_counts{8, 32};
  std::vector<int32_t> batch_sizes{16, 64};
  std::vector<int32_t> ibp_iters{5, 10};
  std::vector<int32_t> mf_iters{5, 10};
  int32_t reps = 5;
  int32_t threads = 1;
  uint64_t seed = 1;
};

struct BenchCell {
  int32_t n = 0;
  int32_t tags = 0;
  int32_t batch = 0;
  std::string method;  // "forward", "ibp-k", "mf-k"
  double ms_per_batch = 0.0;
  double speedup_vs_forward = 0.0;
};

// Wall-clock per batch of {exact forward+backward, IBP, MF} over the grid.
// Every measurement takes the median of `reps` repetitions after a warmup;
// short cells loop several calls per repetition so each sample is readable.
std::vector<BenchCell> run_bench(const BenchConfig& cfg, std::ostream& log);

void write_bench_table(std::ostream& out, const std::vector<BenchCell>& cells);
void write_bench_json(const std::string& path,
                      const std::vector<BenchCell>& cells);

}  // namespace cli
