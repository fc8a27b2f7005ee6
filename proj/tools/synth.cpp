#include "synth.hpp"

#include <vector>

#include "capi_util.hpp"
#include "scorer.hpp"

namespace cli {

namespace {

constexpr double kConcentration = 0.3;

struct Hmm {
  int32_t num_tags = 0;
  int32_t vocab = 0;
  std::vector<double> initial;                 // T
  std::vector<std::vector<double>> transition; // T rows over T
  std::vector<std::vector<double>> emission;   // T rows over V
};

Hmm sample_hmm(Rng& rng, int32_t num_tags, int32_t vocab) {
  Hmm hmm;
  hmm.num_tags = num_tags;
  hmm.vocab = vocab;
  for (int32_t t = 0; t < num_tags; ++t) {
    hmm.transition.push_back(rng.dirichlet(num_tags, kConcentration));
  }
  for (int32_t t = 0; t < num_tags; ++t) {
    hmm.emission.push_back(rng.dirichlet(vocab, kConcentration));
  }
  hmm.initial = rng.dirichlet(num_tags, kConcentration);
  return hmm;
}

// Renormalizes a Dirichlet row onto an allowed support.
std::vector<double> restricted_row(Rng& rng, int32_t dim,
                                   const std::vector<uint8_t>& support) {
  std::vector<double> row(dim, 0.0);
  double sum = 0.0;
  for (int32_t i = 0; i < dim; ++i) {
    if (support[i]) {
      row[i] = rng.gamma(kConcentration);
      sum += row[i];
    }
  }
  for (double& v : row) v /= sum;
  return row;
}

Hmm sample_bies_hmm(Rng& rng, int32_t num_types, int32_t vocab) {
  std::vector<std::string> tags;
  for (int32_t c = 0; c < num_types; ++c) {
    for (char k : {'B', 'I', 'E', 'S'}) {
      tags.push_back(std::string(1, k) + "-" + std::to_string(c));
    }
  }
  BiesInfo info = BiesInfo::analyze(tags);
  const int32_t T = static_cast<int32_t>(tags.size());

  Hmm hmm;
  hmm.num_tags = T;
  hmm.vocab = vocab;
  for (int32_t t = 0; t < T; ++t) {
    std::vector<uint8_t> support(T, 0);
    for (int32_t tp = 0; tp < T; ++tp) {
      support[tp] = info.pair_allowed(t, tp) ? 1 : 0;
    }
    hmm.transition.push_back(restricted_row(rng, T, support));
  }
  for (int32_t t = 0; t < T; ++t) {
    hmm.emission.push_back(rng.dirichlet(vocab, kConcentration));
  }
  std::vector<uint8_t> starts(T, 0);
  for (int32_t t = 0; t < T; ++t) starts[t] = info.start_allowed(t) ? 1 : 0;
  hmm.initial = restricted_row(rng, T, starts);
  return hmm;
}

std::string bies_tag_name(int32_t t) {
  const char kinds[] = {'B', 'I', 'E', 'S'};
  return std::string(1, kinds[t % 4]) + "-" + std::to_string(t / 4);
}

Record sample_record(Rng& rng, const Hmm& hmm, int32_t length, bool bies,
                     const BiesInfo* info) {
  while (true) {
    std::vector<int32_t> states;
    states.reserve(length);
    states.push_back(static_cast<int32_t>(rng.categorical(hmm.initial)));
    for (int32_t i = 1; i < length; ++i) {
      states.push_back(static_cast<int32_t>(
          rng.categorical(hmm.transition[states.back()])));
    }
    if (bies && !info->end_allowed(states.back())) continue;  // open segment
    Record r;
    for (int32_t i = 0; i < length; ++i) {
      r.tokens.push_back("w" +
                         std::to_string(rng.categorical(hmm.emission[states[i]])));
      r.tags.push_back(bies ? bies_tag_name(states[i])
                            : "t" + std::to_string(states[i]));
    }
    return r;
  }
}

void apply_partial_groups(Dataset& data, int32_t groups) {
  for (size_t idx = 0; idx < data.records.size(); ++idx) {
    Record& r = data.records[idx];
    // Subset j keeps only the annotations of tag j+1; tag 0 is background
    // and never annotated, mirroring the one-entity-type-per-subset split.
    const std::string kept = "t" + std::to_string(1 + idx % groups);
    for (std::string& tag : r.tags) {
      if (tag != kept) tag = kUnannotated;
    }
  }
}

}  // namespace

SynthData synth_generate(const SynthConfig& cfg) {
  if (cfg.train_count < 0 || cfg.test_count < 0 || cfg.min_len < 3 ||
      cfg.max_len < cfg.min_len) {
    throw CliError(4, "invalid synthetic-data configuration");
  }
  if (cfg.partial_groups > 0 && cfg.bies) {
    throw CliError(4, "partial groups are defined for the tagging task only");
  }
  Rng rng(cfg.seed);
  Hmm hmm = cfg.bies ? sample_bies_hmm(rng, cfg.num_types, cfg.vocab_size)
                     : sample_hmm(rng, cfg.num_tags, cfg.vocab_size);
  BiesInfo info;
  if (cfg.bies) {
    std::vector<std::string> tags;
    for (int32_t t = 0; t < hmm.num_tags; ++t) tags.push_back(bies_tag_name(t));
    info = BiesInfo::analyze(tags);
  }

  auto sample_split = [&](int32_t count) {
    Dataset data;
    for (int32_t k = 0; k < count; ++k) {
      const int32_t length =
          static_cast<int32_t>(rng.uniform_int(cfg.min_len, cfg.max_len));
      data.records.push_back(sample_record(rng, hmm, length, cfg.bies,
                                           cfg.bies ? &info : nullptr));
    }
    return data;
  };
  SynthData out;
  out.train = sample_split(cfg.train_count);
  out.test = sample_split(cfg.test_count);
  if (cfg.partial_groups > 0) {
    apply_partial_groups(out.train, cfg.partial_groups);
  }
  build_vocabs(out.train);
  build_vocabs(out.test);
  return out;
}

}  // namespace cli
