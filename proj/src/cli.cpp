#include "pfl/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pfl/analysis.hpp"
#include "pfl/circuit.hpp"
#include "pfl/classifier.hpp"
#include "pfl/corpus.hpp"
#include "pfl/errors.hpp"
#include "pfl/io.hpp"
#include "pfl/period.hpp"
#include "pfl/training.hpp"

namespace pfl {

namespace {

namespace fs = std::filesystem;

// Seed streams per command, so one --seed drives independent generators.
enum SeedStream : std::uint64_t {
  kEvalFunctions = 4,
  kPeriodFunction = 5,
  kHaarSamples = 6,
  kClassifierSplit = 7,
  kClassifierInit = 8,
  kClassifierBatches = 9,
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::uint64_t seed = 0;
  std::string out_dir;
};

struct TrainArgs {
  int qubits = 0;
  int dataset_size = 10;
  int epochs = 3000;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double epsilon = 1e-8;
  double k = 1.0;
  std::string target = "qft";
  double sigma = 2.0;
  int ancilla = 0;
  int max_period = 0;
  double loss_threshold = 1e-6;
};

struct EvalArgs {
  std::string matrix;
  int qubits = 0;
  std::vector<int> periods;
  double k = 1.0;
  std::string out;
};

struct EchoArgs {
  std::string matrix;
  std::string reference = "qft";
  std::string out;
};

struct SpectrumArgs {
  std::string matrix;
  int haar_samples = 0;
  int qubits = 0;
  std::string out;
};

struct PeriodArgs {
  std::string matrix;
  int qubits = 0;
  int r = 0;
};

struct CorpusArgs {
  int qubits = 4;
  int per_class = 200;
  int dataset_size = 8;
  int epochs = 3000;
  double lr = 1e-3;
  double k = 1.0;
  double threshold = 1e-6;
  int max_attempts = 5;
  int threads = 0;
};

struct ClassifyTrainArgs {
  std::string corpus;
  std::vector<int> hidden;
  int epochs = 50;
  int batch_size = 32;
  int patience = 5;
  double lr = 1e-3;
};

struct ClassifyEvalArgs {
  std::string model;
  std::string corpus;
  bool score_qft = false;
  std::string scores;
};

fs::path out_path(const Globals& g, const std::string& name) { return fs::path(g.out_dir) / name; }

// Writes to `path` when given, else to `fallback`.
template <typename Fn>
void emit(const std::string& path, std::ostream& fallback, Fn&& write) {
  if (path.empty()) {
    write(fallback);
    return;
  }
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream file(p, std::ios::trunc);
  if (!file) throw std::runtime_error("cannot write " + path);
  write(file);
}

void require_square_power_of_two(const ComplexMatrixd& u, const std::string& path) {
  if (u.rows() != u.cols() || !is_power_of_two(u.rows())) {
    throw DimensionError(path + ": matrix is not 2^n x 2^n");
  }
}

int cmd_train(const Globals& g, const TrainArgs& a, std::ostream& out, std::ostream& err) {
  LossConfig loss_cfg;
  loss_cfg.k = a.k;
  loss_cfg.gaussian_sigma = a.sigma;
  try {
    loss_cfg.target = parse_target_kind(a.target);
    loss_cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  AdamConfig adam{a.lr, a.beta1, a.beta2, a.epsilon};
  try {
    adam.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (a.max_period > register_dim(a.qubits)) throw UsageError("--max-period exceeds 2^qubits");

  const auto dataset = make_dataset(a.qubits, a.qubits, a.dataset_size, loss_cfg, derive_seed(g.seed, 1), a.max_period);
  TrainOptions options;
  options.epochs = a.epochs;
  options.seed = derive_seed(g.seed, 2);
  options.ancilla = a.ancilla;

  TrainResult result;
  try {
    result = train(dataset, loss_cfg, adam, options);
  } catch (const DivergenceError& e) {
    err << "training diverged: " << e.what() << '\n';
    return kExitNotConverged;
  }

  fs::create_directories(g.out_dir);
  std::vector<PeriodicFunction> functions;
  RunManifest manifest;
  for (std::size_t s = 0; s < dataset.samples.size(); ++s) {
    functions.push_back(dataset.samples[s].function);
    manifest.dataset.push_back("dataset.json#" + std::to_string(s));
  }
  write_functions(out_path(g, "dataset.json"), functions);
  write_unitary(out_path(g, "unitary.umat"), result.m3);
  manifest.n = a.qubits;
  manifest.m = a.qubits;
  manifest.ancilla = a.ancilla;
  manifest.k = a.k;
  manifest.target = std::string(to_string(loss_cfg.target));
  manifest.gaussian_sigma = a.sigma;
  manifest.adam = adam;
  manifest.epochs = a.epochs;
  manifest.seed = g.seed;
  manifest.loss_history = result.loss_history;
  manifest.matrix_path = "unitary.umat";
  write_run_manifest(out_path(g, "manifest.json"), manifest);
  {
    std::ofstream csv(out_path(g, "loss_history.csv"), std::ios::trunc);
    if (!csv) throw std::runtime_error("cannot write loss_history.csv");
    write_loss_history_csv(csv, result.loss_history);
  }

  const double final_loss = mean_loss(result.m3, dataset, a.k);
  const double defect = unitarity_defect(result.m3);
  out << "metric,value\n" << std::setprecision(17);
  out << "final_loss," << final_loss << '\n';
  out << "unitarity_defect," << defect << '\n';
  if (!(final_loss <= a.loss_threshold)) {
    err << "not converged: final loss " << final_loss << " above threshold " << a.loss_threshold << '\n';
    return kExitNotConverged;
  }
  return kExitOk;
}

int cmd_eval(const Globals& g, const EvalArgs& a, std::ostream& out) {
  const auto m3 = read_unitary(a.matrix);
  require_square_power_of_two(m3, a.matrix);
  if (m3.rows() < register_dim(a.qubits)) throw DimensionError(a.matrix + ": matrix smaller than 2^qubits");
  for (const int r : a.periods) {
    if (r < 1 || r > register_dim(a.qubits)) throw UsageError("--periods: " + std::to_string(r) + " not in [1, 2^qubits]");
  }
  emit(a.out, out, [&](std::ostream& csv) {
    csv << "period,loss,distance\n" << std::setprecision(17);
    for (const int r : a.periods) {
      const auto f = generate_periodic_function(a.qubits, a.qubits, r, derive_seed(g.seed, kEvalFunctions, r));
      const auto reference = reference_distribution(f);
      csv << r << ',' << loss(m3, f, reference, a.k) << ','
          << distribution_distance(output_distribution(m3, f), reference) << '\n';
    }
  });
  return kExitOk;
}

int cmd_echo(const EchoArgs& a, std::ostream& out) {
  const auto subject = read_unitary(a.matrix);
  require_square_power_of_two(subject, a.matrix);
  const int n = qubits_for_dim(subject.rows());
  const ComplexMatrixd reference = a.reference == "qft" ? inverse_qft_matrix(n) : read_unitary(a.reference);
  const auto report = echo_report(subject, reference, n, a.matrix, a.reference);
  emit(a.out, out, [&](std::ostream& csv) { write_echo_csv(csv, std::span(&report, 1)); });
  return kExitOk;
}

int cmd_spectrum(const Globals& g, const SpectrumArgs& a, std::ostream& out) {
  Histogram h;
  if (!a.matrix.empty()) {
    const auto u = read_unitary(a.matrix);
    require_square_power_of_two(u, a.matrix);
    h = eigenphase_histogram(u);
  } else {
    if (a.haar_samples < 1) throw UsageError("spectrum needs --matrix or --haar-samples");
    if (a.qubits < 1) throw UsageError("--haar-samples needs --qubits");
    for (int s = 0; s < a.haar_samples; ++s) {
      h.add(eigenphases(haar_random_unitary(a.qubits, derive_seed(g.seed, kHaarSamples, s))));
    }
  }
  emit(a.out, out, [&](std::ostream& csv) { write_histogram_csv(csv, h); });
  return kExitOk;
}

int cmd_period(const Globals& g, const PeriodArgs& a, std::ostream& out, std::ostream& err) {
  if (a.r > register_dim(a.qubits)) throw UsageError("--r exceeds 2^qubits");
  ComplexMatrixd m3;
  if (a.matrix.empty()) {
    m3 = inverse_qft_matrix(a.qubits);
  } else {
    m3 = read_unitary(a.matrix);
    require_square_power_of_two(m3, a.matrix);
    if (m3.rows() < register_dim(a.qubits)) throw DimensionError(a.matrix + ": matrix smaller than 2^qubits");
  }
  const auto f = generate_periodic_function(a.qubits, a.qubits, a.r, derive_seed(g.seed, kPeriodFunction, a.r));
  try {
    out << estimate_period(output_distribution(m3, f), a.qubits) << '\n';
  } catch (const EstimationError& e) {
    err << "period estimation failed: " << e.what() << '\n';
    return kExitEstimationFailed;
  }
  return kExitOk;
}

int cmd_corpus(const Globals& g, const CorpusArgs& a, std::ostream& out) {
  CorpusOptions options;
  options.per_class = a.per_class;
  options.max_attempts = a.max_attempts;
  options.threads = a.threads;
  options.learn.dataset_size = a.dataset_size;
  options.learn.epochs = a.epochs;
  options.learn.loss.k = a.k;
  options.learn.adam.alpha = a.lr;
  options.learn.threshold = a.threshold;
  const auto corpus = build_corpus(a.qubits, options, g.seed);
  const auto manifest = write_corpus(g.out_dir, corpus, options.learn);
  out << "metric,value\n";
  out << "manifest," << csv_field(manifest.string()) << '\n';
  out << "learned," << corpus.count(1) << '\n';
  out << "haar," << corpus.count(0) << '\n';
  return kExitOk;
}

LabeledUnitaryCorpus load_corpus(const std::string& path) {
  auto corpus = read_corpus(path);
  if (corpus.entries.empty()) throw std::runtime_error(path + ": corpus is empty");
  if (corpus.count(0) == 0 || corpus.count(1) == 0) throw std::runtime_error(path + ": corpus needs both labels");
  if (corpus.entries.size() < 10) throw std::runtime_error(path + ": corpus needs at least 10 entries");
  return corpus;
}

int cmd_classify_train(const Globals& g, const ClassifyTrainArgs& a, std::ostream& out) {
  const auto corpus = load_corpus(a.corpus);
  const auto split = split_corpus(corpus, derive_seed(g.seed, kClassifierSplit));
  const auto train_set = to_examples(corpus, split.train);
  const auto validation_set = to_examples(corpus, split.validation);

  MlpConfig net_cfg;
  net_cfg.input_dim = static_cast<int>(2 * register_dim(corpus.n) * register_dim(corpus.n));
  net_cfg.hidden_dims = a.hidden.empty() ? shape_rule_hidden_dims(net_cfg.input_dim) : a.hidden;
  net_cfg.seed = derive_seed(g.seed, kClassifierInit);

  ClassifierTrainConfig cfg;
  cfg.adam.alpha = a.lr;
  cfg.max_epochs = a.epochs;
  cfg.batch_size = a.batch_size;
  cfg.patience = a.patience;
  cfg.seed = derive_seed(g.seed, kClassifierBatches);
  try {
    cfg.adam.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  const auto result = train_classifier(Mlp::initialized(net_cfg), train_set, validation_set, cfg);
  fs::create_directories(g.out_dir);
  write_mlp(out_path(g, "classifier.mlpc"), result.net);
  {
    std::ofstream csv(out_path(g, "classifier_metrics.csv"), std::ios::trunc);
    if (!csv) throw std::runtime_error("cannot write classifier_metrics.csv");
    csv << "epoch,train_loss,train_accuracy,validation_loss,validation_accuracy\n" << std::setprecision(17);
    for (const auto& m : result.history) {
      csv << m.epoch << ',' << m.train_loss << ',' << m.train_accuracy << ',' << m.validation_loss << ','
          << m.validation_accuracy << '\n';
    }
  }
  const auto& best = result.history.at(static_cast<std::size_t>(result.best_epoch - 1));
  out << "metric,value\n" << std::setprecision(17);
  out << "best_epoch," << result.best_epoch << '\n';
  out << "validation_accuracy," << best.validation_accuracy << '\n';
  return kExitOk;
}

int cmd_classify_eval(const Globals& g, const ClassifyEvalArgs& a, std::ostream& out) {
  if (a.corpus.empty() && !a.score_qft) throw UsageError("classify-eval needs --corpus and/or --score-qft");
  const auto net = read_mlp(a.model);

  std::ostringstream report;
  report << "metric,value\n" << std::setprecision(17);
  if (!a.corpus.empty()) {
    const auto corpus = load_corpus(a.corpus);
    if (net.input_dim() != 2 * register_dim(corpus.n) * register_dim(corpus.n)) {
      throw DimensionError(a.model + ": classifier input does not match corpus n");
    }
    const auto split = split_corpus(corpus, derive_seed(g.seed, kClassifierSplit));
    const auto test_set = to_examples(corpus, split.test);
    const auto evaluation = evaluate(net, test_set);
    report << "test_accuracy," << evaluation.accuracy << '\n';
    report << "test_loss," << evaluation.mean_loss << '\n';
    const std::string scores_path = a.scores.empty() ? out_path(g, "scores.csv").string() : a.scores;
    emit(scores_path, out, [&](std::ostream& csv) {
      csv << "index,matrix_path,label,score\n" << std::setprecision(17);
      for (std::size_t t = 0; t < split.test.size(); ++t) {
        const auto i = split.test[t];
        csv << i << ',' << csv_field(corpus.entries[i].source) << ',' << corpus.entries[i].label << ','
            << evaluation.scores[t] << '\n';
      }
    });
  }
  if (a.score_qft) {
    const int n = qubits_for_dim(static_cast<std::int64_t>(std::llround(std::sqrt(net.input_dim() / 2.0))));
    if (2 * register_dim(n) * register_dim(n) != net.input_dim()) {
      throw DimensionError(a.model + ": classifier input is not 2 * 4^n");
    }
    report << "qft_score," << forward(net, flatten_unitary(inverse_qft_matrix(n))) << '\n';
  }
  out << report.str();
  return kExitOk;
}

std::string default_out_dir() {
  if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') return env;
  return ".";
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learn and analyse post-processing unitaries for quantum period finding"};
  app.require_subcommand(1);

  Globals g;
  g.out_dir = default_out_dir();
  auto add_globals = [&](CLI::App* cmd) {
    cmd->add_option("--seed", g.seed, "Base seed")->capture_default_str();
    cmd->add_option("--out-dir", g.out_dir, std::string("Output directory (default $") + kOutDirEnv + " or .)");
  };
  const auto qubit_range = CLI::Range(1, 10);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Learn a post-processing unitary");
  add_globals(train_cmd);
  train_cmd->add_option("--qubits", train_args.qubits, "System qubits n")->required()->check(qubit_range);
  train_cmd->add_option("--dataset-size", train_args.dataset_size)->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--epochs", train_args.epochs)->capture_default_str()->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", train_args.lr, "ADAM step size alpha")->capture_default_str();
  train_cmd->add_option("--beta1", train_args.beta1)->capture_default_str();
  train_cmd->add_option("--beta2", train_args.beta2)->capture_default_str();
  train_cmd->add_option("--epsilon", train_args.epsilon)->capture_default_str();
  train_cmd->add_option("--k", train_args.k, "Unitarity penalty weight")->capture_default_str();
  train_cmd->add_option("--target", train_args.target)
      ->capture_default_str()
      ->check(CLI::IsMember({"qft", "single-peak", "step", "gaussian"}));
  train_cmd->add_option("--sigma", train_args.sigma, "Width of the gaussian target")->capture_default_str();
  train_cmd->add_option("--ancilla", train_args.ancilla)->capture_default_str()->check(CLI::Range(0, 4));
  train_cmd->add_option("--max-period", train_args.max_period, "Largest dataset period (0 = 2^(n-1))")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--loss-threshold", train_args.loss_threshold)->capture_default_str();

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Per-period loss and distance to the QFT reference");
  add_globals(eval_cmd);
  eval_cmd->add_option("--matrix", eval_args.matrix)->required();
  eval_cmd->add_option("--qubits", eval_args.qubits)->required()->check(qubit_range);
  eval_cmd->add_option("--periods", eval_args.periods)->required()->delimiter(',');
  eval_cmd->add_option("--k", eval_args.k)->capture_default_str();
  eval_cmd->add_option("--out", eval_args.out, "CSV path (default stdout)");

  EchoArgs echo_args;
  auto* echo_cmd = app.add_subcommand("echo", "Loschmidt echo against a reference");
  add_globals(echo_cmd);
  echo_cmd->add_option("--matrix", echo_args.matrix)->required();
  echo_cmd->add_option("--reference", echo_args.reference, "qft or a matrix path")->capture_default_str();
  echo_cmd->add_option("--out", echo_args.out, "CSV path (default stdout)");

  SpectrumArgs spectrum_args;
  auto* spectrum_cmd = app.add_subcommand("spectrum", "Eigenphase histogram");
  add_globals(spectrum_cmd);
  auto* matrix_opt = spectrum_cmd->add_option("--matrix", spectrum_args.matrix);
  auto* haar_opt =
      spectrum_cmd->add_option("--haar-samples", spectrum_args.haar_samples)->check(CLI::PositiveNumber);
  matrix_opt->excludes(haar_opt);
  spectrum_cmd->add_option("--qubits", spectrum_args.qubits)->check(qubit_range);
  spectrum_cmd->add_option("--out", spectrum_args.out, "CSV path (default stdout)");

  PeriodArgs period_args;
  auto* period_cmd = app.add_subcommand("period", "Estimate the period of a random function");
  add_globals(period_cmd);
  period_cmd->add_option("--matrix", period_args.matrix, "Post-processing matrix (default inverse QFT)");
  period_cmd->add_option("--qubits", period_args.qubits)->required()->check(qubit_range);
  period_cmd->add_option("--r", period_args.r)->required()->check(CLI::PositiveNumber);

  CorpusArgs corpus_args;
  auto* corpus_cmd = app.add_subcommand("corpus", "Build a labelled corpus of learned and Haar unitaries");
  add_globals(corpus_cmd);
  corpus_cmd->add_option("--qubits", corpus_args.qubits)->capture_default_str()->check(qubit_range);
  corpus_cmd->add_option("--per-class", corpus_args.per_class)->capture_default_str()->check(CLI::PositiveNumber);
  corpus_cmd->add_option("--dataset-size", corpus_args.dataset_size)->capture_default_str()->check(CLI::PositiveNumber);
  corpus_cmd->add_option("--epochs", corpus_args.epochs)->capture_default_str()->check(CLI::PositiveNumber);
  corpus_cmd->add_option("--lr", corpus_args.lr)->capture_default_str();
  corpus_cmd->add_option("--k", corpus_args.k)->capture_default_str();
  corpus_cmd->add_option("--loss-threshold", corpus_args.threshold)->capture_default_str();
  corpus_cmd->add_option("--max-attempts", corpus_args.max_attempts)->capture_default_str()->check(CLI::PositiveNumber);
  corpus_cmd->add_option("--threads", corpus_args.threads, "0 = hardware concurrency")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);

  ClassifyTrainArgs ct_args;
  auto* ct_cmd = app.add_subcommand("classify-train", "Train the learned-vs-random classifier");
  add_globals(ct_cmd);
  ct_cmd->add_option("--corpus", ct_args.corpus, "corpus.json")->required();
  ct_cmd->add_option("--hidden", ct_args.hidden, "Hidden widths (default 2*input,512)")->delimiter(',');
  ct_cmd->add_option("--epochs", ct_args.epochs)->capture_default_str()->check(CLI::PositiveNumber);
  ct_cmd->add_option("--batch-size", ct_args.batch_size)->capture_default_str()->check(CLI::PositiveNumber);
  ct_cmd->add_option("--patience", ct_args.patience)->capture_default_str()->check(CLI::PositiveNumber);
  ct_cmd->add_option("--lr", ct_args.lr)->capture_default_str();

  ClassifyEvalArgs ce_args;
  auto* ce_cmd = app.add_subcommand("classify-eval", "Score a corpus test split and/or the inverse QFT");
  add_globals(ce_cmd);
  ce_cmd->add_option("--model", ce_args.model, "classifier.mlpc")->required();
  ce_cmd->add_option("--corpus", ce_args.corpus, "corpus.json");
  ce_cmd->add_flag("--score-qft", ce_args.score_qft, "Score the inverse QFT matrix");
  ce_cmd->add_option("--scores", ce_args.scores, "Per-matrix score CSV (default <out-dir>/scores.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train_cmd) return cmd_train(g, train_args, out, err);
    if (*eval_cmd) return cmd_eval(g, eval_args, out);
    if (*echo_cmd) return cmd_echo(echo_args, out);
    if (*spectrum_cmd) return cmd_spectrum(g, spectrum_args, out);
    if (*period_cmd) return cmd_period(g, period_args, out, err);
    if (*corpus_cmd) return cmd_corpus(g, corpus_args, out);
    if (*ct_cmd) return cmd_classify_train(g, ct_args, out);
    if (*ce_cmd) return cmd_classify_eval(g, ce_args, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDataError;
  }
  return kExitUsage;
}

}  // namespace pfl
