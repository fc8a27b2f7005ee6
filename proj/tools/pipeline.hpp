#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "scorer.hpp"

namespace cli {

enum class Inference { kCrf, kBcrf, kMf, kUnstructured };
enum class LossKind { kNll, kFy, kPartialNll, kPartialFy };

Inference parse_inference(const std::string& name);
LossKind parse_loss(const std::string& name);
bool loss_is_partial(LossKind loss);

struct RunConfig {
  Inference inference = Inference::kCrf;
  LossKind loss = LossKind::kNll;
  int32_t iters = 10;         // IBP / mean-field iteration budget
  double tau_inverse = 10.0;  // decoding temperature (training uses 1)
  uint64_t seed = 1;
  double lr = 0.1;
  int32_t epochs = 10;
  int32_t batch_size = 16;
  int32_t threads = 1;
  bool repair = false;
};

struct EpochMetrics {
  int32_t epoch = 0;
  double loss = 0.0;
  double dev_acc = 0.0;
  double wall_ms = 0.0;
};

// Minibatch SGD with the configured loss; gradients reach the tables by
// linear accumulation through score_sentence. Deterministic for a fixed
// seed and config regardless of thread count. Metrics are streamed as one
// JSON object per epoch when a sink is given.
std::vector<EpochMetrics> train(const RunConfig& cfg, const Dataset& train_data,
                                const Dataset& dev_data, LinearScorer& scorer,
                                std::ostream* metrics);

// Loss and table gradients of a single record under the current scorer; the
// building block of train, exposed for descent checks.
struct RecordLoss {
  double value = 0.0;
  std::vector<double> emission_grad;
  std::vector<double> transition_grad;
};
RecordLoss record_loss(const RunConfig& cfg, const LinearScorer& scorer,
                       const Record& r);

// Predicted tag names for the real (non-pad) positions of one record.
std::vector<std::string> decode_record(const RunConfig& cfg,
                                       const LinearScorer& scorer,
                                       const Record& r);

// Tag accuracy over annotated real positions.
double tag_accuracy(const Dataset& data,
                    const std::vector<std::vector<std::string>>& predictions);

struct SpanScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Typed-segment F-score under BIES decoding with tolerant span recovery.
SpanScore span_f1(const Dataset& data,
                  const std::vector<std::vector<std::string>>& predictions);

// "token<TAB>gold<TAB>pred" with blank-line sentence separators.
void write_predictions(const std::string& path, const Dataset& data,
                       const std::vector<std::vector<std::string>>& predictions);

// Marginal tensors of every record in the text tensor format, one block per
// sentence (crf: exact forward-backward; bcrf: IBP at the decode settings).
void write_marginals(const std::string& path, const RunConfig& cfg,
                     const LinearScorer& scorer, const Dataset& data);

}  // namespace cli
