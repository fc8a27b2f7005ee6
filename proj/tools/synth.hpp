#pragma once

#include <cstdint>
#include <string>

#include "dataset.hpp"
#include "rng.hpp"

namespace cli {

struct SynthConfig {
  uint64_t seed = 1;
  int32_t num_tags = 5;   // plain tagging task
  int32_t num_types = 3;  // BIES task: |T| = 4 * num_types
  int32_t vocab_size = 50;
  int32_t min_len = 5;
  int32_t max_len = 20;
  int32_t train_count = 100;
  int32_t test_count = 0;
  bool bies = false;
  // Split the training set into this many subsets, each keeping the
  // annotation of one tag only (tag 0 plays the never-annotated background
  // role). The test split always stays fully annotated.
  int32_t partial_groups = 0;
};

struct SynthData {
  Dataset train;
  Dataset test;
};

// Samples from a fixed random HMM whose row-stochastic transition and
// emission tables are drawn from a symmetric Dirichlet (concentration 0.3),
// so transitions genuinely matter. Deterministic per seed. The BIES variant
// constrains transitions to well-formed segment tag pairs and only emits
// sequences that close their last segment.
SynthData synth_generate(const SynthConfig& cfg);

}  // namespace cli
