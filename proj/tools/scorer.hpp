#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dataset.hpp"

namespace cli {

enum class Structure {
  kNone,
  kBies,  // B-c/I-c/E-c/S-c segment tags with well-formedness constraints
};

Structure parse_structure(const std::string& name);
std::string structure_name(Structure s);

// Emission + shared-transition linear model. Scores fold into the arc
// tensor: w[i,t,t'] = A[t,t'] + E[token_{i+1}, t'] and the first token's
// emission rides on the source tag of the first slice.
struct LinearScorer {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
  Structure structure = Structure::kNone;
  std::vector<double> emission;    // tokens x tags, row-major
  std::vector<double> transition;  // tags x tags, row-major

  static LinearScorer zeros(std::vector<std::string> tokens,
                            std::vector<std::string> tags,
                            Structure structure);

  int32_t num_tags() const { return static_cast<int32_t>(tags.size()); }
  double& e(int32_t token, int32_t tag) {
    return emission[static_cast<size_t>(token) * tags.size() + tag];
  }
  double e(int32_t token, int32_t tag) const {
    return emission[static_cast<size_t>(token) * tags.size() + tag];
  }
  double& a(int32_t from, int32_t to) {
    return transition[static_cast<size_t>(from) * tags.size() + to];
  }
  double a(int32_t from, int32_t to) const {
    return transition[static_cast<size_t>(from) * tags.size() + to];
  }
};

// BIES tag kind bookkeeping; valid for scorers whose tag names follow the
// "B-x"/"I-x"/"E-x"/"S-x" convention.
struct BiesInfo {
  std::vector<char> kind;     // 'B', 'I', 'E', 'S' or 0 for other tags
  std::vector<int32_t> type;  // segment type index, -1 for other tags

  static BiesInfo analyze(const std::vector<std::string>& tags);
  bool pair_allowed(int32_t from, int32_t to) const;
  bool start_allowed(int32_t tag) const;
  bool end_allowed(int32_t tag) const;
};

// Token ids (with <unk> fallback) for one record under the scorer vocab.
std::vector<int32_t> record_token_ids(const LinearScorer& scorer,
                                      const Record& r);

// Arc weights of one sentence with the structural mask folded in as -inf.
std::vector<double> score_sentence(const LinearScorer& scorer,
                                   const std::vector<int32_t>& token_ids,
                                   int32_t pads);

// Structural per-arc mask of one record (pad prefix + BIES constraints),
// without supervision. 1 = allowed.
std::vector<uint8_t> structural_mask(const LinearScorer& scorer,
                                     const Record& r);

// Supervision mask: annotated positions pin their tag, unannotated ones are
// free (within real tags). Does not include structural constraints; those
// already live in the weights.
std::vector<uint8_t> annotation_mask(const LinearScorer& scorer,
                                     const Record& r);

// Chain-rule accumulation of an arc-space gradient into table gradients.
void accumulate_gradient(const LinearScorer& scorer,
                         const std::vector<int32_t>& token_ids,
                         const std::vector<double>& arc_grad,
                         std::vector<double>& emission_grad,
                         std::vector<double>& transition_grad);

void save_model(const std::string& path, const LinearScorer& scorer);
LinearScorer load_model(const std::string& path);

}  // namespace cli
