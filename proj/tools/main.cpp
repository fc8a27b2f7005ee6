#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>

#include "bench.hpp"
#include "capi_util.hpp"
#include "dataset.hpp"
#include "pipeline.hpp"
#include "rng.hpp"
#include "scorer.hpp"
#include "synth.hpp"

namespace cli {
namespace {

struct SharedOptions {
  std::string inference = "crf";
  std::string loss = "nll";
  std::string format = "conll";
  int32_t iters = 10;
  double tau_inverse = 10.0;
  uint64_t seed = 1;
  int32_t threads = 1;
};

void add_shared(CLI::App* cmd, SharedOptions& shared) {
  cmd->add_option("--inference", shared.inference,
                  "inference family: crf|bcrf|mf|unstructured");
  cmd->add_option("--loss", shared.loss,
                  "training loss: nll|fy|partial-nll|partial-fy");
  cmd->add_option("--iters", shared.iters, "IBP / mean-field iterations");
  cmd->add_option("--tau-inv", shared.tau_inverse,
                  "decoding temperature tau^-1");
  cmd->add_option("--seed", shared.seed, "random seed");
  cmd->add_option("--threads", shared.threads, "worker threads");
  cmd->add_option("--format", shared.format, "data format: conll|synth");
}

bool pad_policy(const SharedOptions& shared) {
  if (shared.format == "conll") return true;
  if (shared.format == "synth") return false;
  throw CliError(4, "unknown format '" + shared.format + "'");
}

RunConfig make_run_config(const SharedOptions& shared) {
  RunConfig cfg;
  cfg.inference = parse_inference(shared.inference);
  cfg.loss = parse_loss(shared.loss);
  cfg.iters = shared.iters;
  cfg.tau_inverse = shared.tau_inverse;
  cfg.seed = shared.seed;
  cfg.threads = shared.threads;
  return cfg;
}

// Tokens come from the training split; tags from both splits so a partially
// annotated training set still spans the full tag inventory.
void build_joint_vocabs(Dataset& train, const Dataset& dev) {
  build_vocabs(train);
  const bool padded = train.any_padded() || dev.any_padded();
  std::vector<std::string> tags;
  for (const std::string& t : train.tag_vocab) {
    if (t != kPadTag) tags.push_back(t);
  }
  for (const Record& r : dev.records) {
    for (int32_t i = r.pads; i < r.length(); ++i) {
      const std::string& tag = r.tags[i];
      if (tag == kUnannotated) continue;
      if (std::find(tags.begin(), tags.end(), tag) == tags.end()) {
        tags.push_back(tag);
      }
    }
  }
  if (padded) {
    tags.push_back(kPadTag);
    if (std::find(train.token_vocab.begin(), train.token_vocab.end(),
                  kBosToken) == train.token_vocab.end()) {
      train.token_vocab.push_back(kBosToken);
    }
  }
  train.tag_vocab = std::move(tags);
}

int cmd_train(const SharedOptions& shared, const std::string& train_path,
              const std::string& dev_path, const std::string& model_out,
              const std::string& metrics_out, const std::string& structure,
              double lr, int32_t epochs, int32_t batch_size) {
  Dataset train_data = load_conll(train_path, pad_policy(shared));
  Dataset dev_data = load_conll(dev_path, pad_policy(shared));
  build_joint_vocabs(train_data, dev_data);

  LinearScorer scorer = LinearScorer::zeros(
      train_data.token_vocab, train_data.tag_vocab, parse_structure(structure));
  RunConfig cfg = make_run_config(shared);
  cfg.lr = lr;
  cfg.epochs = epochs;
  cfg.batch_size = batch_size;

  std::ofstream metrics;
  std::ostream* sink = nullptr;
  if (!metrics_out.empty()) {
    metrics.open(metrics_out);
    if (!metrics) throw CliError(1, "cannot open " + metrics_out);
    sink = &metrics;
  }
  std::vector<EpochMetrics> log = train(cfg, train_data, dev_data, scorer,
                                        sink);
  if (!model_out.empty()) save_model(model_out, scorer);
  if (!log.empty()) {
    std::cout << "final epoch " << log.back().epoch << ": loss "
              << log.back().loss << ", dev_acc " << log.back().dev_acc
              << '\n';
  }
  return 0;
}

int cmd_decode(const SharedOptions& shared, const std::string& model_path,
               const std::string& input, const std::string& output,
               bool repair) {
  RunConfig cfg = make_run_config(shared);
  cfg.repair = repair;
  LinearScorer scorer = load_model(model_path);
  Dataset data = load_conll(input, pad_policy(shared));
  std::vector<std::vector<std::string>> predictions(data.records.size());
  for (size_t k = 0; k < data.records.size(); ++k) {
    predictions[k] = decode_record(cfg, scorer, data.records[k]);
  }
  write_predictions(output, data, predictions);
  bool annotated = true;
  for (const Record& r : data.records) {
    annotated = annotated && r.fully_annotated();
  }
  if (annotated) {
    std::cout << "accuracy " << tag_accuracy(data, predictions) << '\n';
    if (scorer.structure == Structure::kBies) {
      SpanScore f = span_f1(data, predictions);
      std::cout << "span_f1 " << f.f1 << " (precision " << f.precision
                << ", recall " << f.recall << ")\n";
    }
  }
  return 0;
}

int cmd_marginals(const SharedOptions& shared, const std::string& model_path,
                  const std::string& input, const std::string& output) {
  RunConfig cfg = make_run_config(shared);
  LinearScorer scorer = load_model(model_path);
  Dataset data = load_conll(input, pad_policy(shared));
  write_marginals(output, cfg, scorer, data);
  return 0;
}

int cmd_synth(const SynthConfig& cfg, const std::string& train_out,
              const std::string& test_out) {
  SynthData data = synth_generate(cfg);
  if (!train_out.empty()) save_conll(train_out, data.train);
  if (!test_out.empty() && cfg.test_count > 0) {
    save_conll(test_out, data.test);
  }
  std::cout << "generated " << data.train.records.size() << " train / "
            << data.test.records.size() << " test sentences, "
            << data.train.tag_vocab.size() << " tags\n";
  return 0;
}

int cmd_bench(BenchConfig cfg, const std::string& json_out) {
  std::vector<BenchCell> cells = run_bench(cfg, std::cerr);
  write_bench_table(std::cout, cells);
  if (!json_out.empty()) write_bench_json(json_out, cells);
  return 0;
}

// Random desk-scale instances checked through the public surface against the
// enumeration and convex oracles.
int cmd_oracle_check(int32_t count, uint64_t seed, int32_t max_len,
                     int32_t max_tags, double mask_fraction) {
  Rng rng(seed);
  double worst_logz = 0.0, worst_marg = 0.0, worst_ibp = 0.0;
  bool ok = true;
  for (int32_t k = 0; k < count; ++k) {
    const int32_t n = static_cast<int32_t>(rng.uniform_int(3, max_len));
    const int32_t tags = static_cast<int32_t>(rng.uniform_int(2, max_tags));
    const size_t arcs = static_cast<size_t>(n - 1) * tags * tags;
    std::vector<double> values(arcs);
    for (double& v : values) v = rng.normal(3.0);
    if (rng.uniform() < mask_fraction) {
      while (true) {
        std::vector<double> masked = values;
        for (double& v : masked) {
          if (rng.uniform() > 0.75) {
            v = -std::numeric_limits<double>::infinity();
          }
        }
        bcrf_weights* probe = nullptr;
        if (bcrf_weights_create(n, tags, masked.data(), &probe) == BCRF_OK &&
            bcrf_weights_validate(probe) == BCRF_OK) {
          values = masked;
          bcrf_weights_free(probe);
          break;
        }
        bcrf_weights_free(probe);
      }
    }
    WeightsHandle w(n, tags, values);

    double logz = 0.0, oracle_logz = 0.0;
    check(bcrf_forward_logz(w.ptr, &logz), "forward");
    check(bcrf_oracle_logz(w.ptr, &oracle_logz), "oracle logz");
    worst_logz = std::max(worst_logz, std::abs(logz - oracle_logz));

    std::vector<double> marg(arcs), oracle_marg(arcs);
    check(bcrf_crf_marginals(w.ptr, marg.data()), "marginals");
    check(bcrf_oracle_crf_marginals(w.ptr, oracle_marg.data()),
          "oracle marginals");
    for (size_t a = 0; a < arcs; ++a) {
      worst_marg = std::max(worst_marg, std::abs(marg[a] - oracle_marg[a]));
    }

    bcrf_ibp_config cfg;
    bcrf_ibp_config_init(&cfg, BCRF_IBP_MARGINAL);
    cfg.max_iters = 200000;
    cfg.tol = 1e-12;
    std::vector<double> q(arcs), q_oracle(arcs);
    check(bcrf_ibp_infer(w.ptr, &cfg, q.data(), nullptr, nullptr), "ibp");
    double value = 0.0;
    check(bcrf_oracle_mean_reg(w.ptr, 1e-12, q_oracle.data(), &value),
          "oracle meanreg");
    for (size_t a = 0; a < arcs; ++a) {
      worst_ibp = std::max(worst_ibp, std::abs(q[a] - q_oracle[a]));
    }
  }
  auto report = [&](const char* name, double worst, double tol) {
    const bool pass = worst <= tol;
    ok = ok && pass;
    std::cout << (pass ? "PASS" : "FAIL") << " " << name << " (max deviation "
              << worst << ", tolerance " << tol << ")\n";
  };
  report("forward_logz vs enumeration", worst_logz, 1e-9);
  report("crf_marginals vs enumeration", worst_marg, 1e-8);
  report("ibp_infer vs convex solver", worst_ibp, 1e-5);
  return ok ? 0 : 1;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"bregman-crf sequence labeling engine"};
  app.require_subcommand(1);
  SharedOptions shared;

  auto* train_cmd = app.add_subcommand("train", "train a linear scorer");
  std::string train_path, dev_path, model_out, metrics_out;
  std::string structure = "none";
  double lr = 0.1;
  int32_t epochs = 10, batch_size = 16;
  train_cmd->add_option("--train", train_path, "training TSV")->required();
  train_cmd->add_option("--dev", dev_path, "development TSV")->required();
  train_cmd->add_option("--model-out", model_out, "model JSON output");
  train_cmd->add_option("--metrics-out", metrics_out,
                        "JSON-lines metrics output");
  train_cmd->add_option("--structure", structure, "tag structure: none|bies");
  train_cmd->add_option("--lr", lr, "learning rate");
  train_cmd->add_option("--epochs", epochs, "training epochs");
  train_cmd->add_option("--batch", batch_size, "minibatch size");
  add_shared(train_cmd, shared);

  auto* decode_cmd = app.add_subcommand("decode", "tag a file with a model");
  std::string model_path, input, output;
  bool repair = false;
  decode_cmd->add_option("--model", model_path, "model JSON")->required();
  decode_cmd->add_option("--input", input, "input TSV")->required();
  decode_cmd->add_option("--output", output, "predictions TSV")->required();
  decode_cmd->add_flag("--repair", repair,
                       "project invalid outputs onto a valid path");
  add_shared(decode_cmd, shared);

  auto* marg_cmd =
      app.add_subcommand("marginals", "dump per-sentence marginal tensors");
  marg_cmd->add_option("--model", model_path, "model JSON")->required();
  marg_cmd->add_option("--input", input, "input TSV")->required();
  marg_cmd->add_option("--output", output, "tensor text output")->required();
  add_shared(marg_cmd, shared);

  auto* synth_cmd =
      app.add_subcommand("synth", "generate synthetic tagging data");
  SynthConfig synth_cfg;
  std::string train_out, test_out, task = "pos";
  synth_cmd->add_option("--train-out", train_out, "training TSV output")
      ->required();
  synth_cmd->add_option("--test-out", test_out, "test TSV output");
  synth_cmd->add_option("--train-count", synth_cfg.train_count,
                        "training sentences");
  synth_cmd->add_option("--test-count", synth_cfg.test_count,
                        "test sentences");
  synth_cmd->add_option("--num-tags", synth_cfg.num_tags,
                        "tag count (pos task)");
  synth_cmd->add_option("--types", synth_cfg.num_types,
                        "segment types (bies task)");
  synth_cmd->add_option("--vocab", synth_cfg.vocab_size, "token vocabulary");
  synth_cmd->add_option("--min-len", synth_cfg.min_len, "minimum length");
  synth_cmd->add_option("--max-len", synth_cfg.max_len, "maximum length");
  synth_cmd->add_option("--task", task, "task: pos|bies");
  synth_cmd->add_option("--partial-groups", synth_cfg.partial_groups,
                        "split train into this many one-tag subsets");
  add_shared(synth_cmd, shared);

  auto* bench_cmd =
      app.add_subcommand("bench", "time forward/IBP/MF over a grid");
  BenchConfig bench_cfg;
  std::string json_out;
  bench_cmd->add_option("--ns", bench_cfg.lengths, "sequence lengths")
      ->delimiter(',');
  bench_cmd->add_option("--tags", bench_cfg.tag_counts, "tag counts")
      ->delimiter(',');
  bench_cmd->add_option("--batches", bench_cfg.batch_sizes, "batch sizes")
      ->delimiter(',');
  bench_cmd->add_option("--ibp-iters", bench_cfg.ibp_iters, "IBP sweeps")
      ->delimiter(',');
  bench_cmd->add_option("--mf-iters", bench_cfg.mf_iters, "MF iterations")
      ->delimiter(',');
  bench_cmd->add_option("--reps", bench_cfg.reps, "repetitions per cell");
  bench_cmd->add_option("--json", json_out, "machine-readable output path");
  add_shared(bench_cmd, shared);

  auto* oracle_cmd = app.add_subcommand(
      "oracle-check", "verify the engine against desk-scale oracles");
  int32_t count = 200, max_len = 6, max_tags = 3;
  double mask_fraction = 0.2;
  oracle_cmd->add_option("--count", count, "instances");
  oracle_cmd->add_option("--max-len", max_len, "maximum length");
  oracle_cmd->add_option("--max-tags", max_tags, "maximum tag count");
  oracle_cmd->add_option("--masks", mask_fraction,
                         "fraction of masked instances");
  add_shared(oracle_cmd, shared);

  CLI11_PARSE(app, argc, argv);

  if (train_cmd->parsed()) {
    return cmd_train(shared, train_path, dev_path, model_out, metrics_out,
                     structure, lr, epochs, batch_size);
  }
  if (decode_cmd->parsed()) {
    return cmd_decode(shared, model_path, input, output, repair);
  }
  if (marg_cmd->parsed()) {
    return cmd_marginals(shared, model_path, input, output);
  }
  if (synth_cmd->parsed()) {
    synth_cfg.seed = shared.seed;
    synth_cfg.bies = task == "bies";
    if (task != "pos" && task != "bies") {
      throw CliError(4, "unknown task '" + task + "'");
    }
    return cmd_synth(synth_cfg, train_out, test_out);
  }
  if (bench_cmd->parsed()) {
    bench_cfg.reps = std::max<int32_t>(1, bench_cfg.reps);
    bench_cfg.threads = shared.threads;
    bench_cfg.seed = shared.seed;
    return cmd_bench(bench_cfg, json_out);
  }
  if (oracle_cmd->parsed()) {
    return cmd_oracle_check(count, shared.seed, max_len, max_tags,
                            mask_fraction);
  }
  return 0;
}

}  // namespace
}  // namespace cli

int main(int argc, char** argv) {
  try {
    return cli::dispatch(argc, argv);
  } catch (const cli::CliError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
