#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pfl/classifier.hpp"
#include "pfl/training.hpp"

namespace pfl {

/// Mixes a base seed with stream coordinates into an independent seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

struct LearnConfig {
  int dataset_size = 8;
  int epochs = 3000;
  LossConfig loss{};
  AdamConfig adam{};
  double threshold = 1e-6;  // gate on training loss, held-out loss and unitarity defect
};

/// One training run with its acceptance gate evaluated.
struct LearnedRun {
  std::uint64_t seed = 0;
  TrainingDataset dataset;
  std::vector<double> loss_history;
  ComplexMatrixd m3;
  double train_loss = 0.0;  // mean loss of the final matrix over the dataset
  double test_loss = 0.0;   // worst loss over fresh functions of every training period
  double defect = 0.0;
  bool accepted = false;
};

LearnedRun learn_unitary(int n, const LearnConfig& config, std::uint64_t seed);

struct CorpusEntry {
  ComplexMatrixd matrix;
  int label = 0;  // 1 = learned, 0 = Haar random
  std::uint64_t seed = 0;
  std::optional<LearnedRun> run;  // present for learned entries
  std::string source;             // matrix path when loaded from disk
};

struct LabeledUnitaryCorpus {
  int n = 0;
  std::vector<CorpusEntry> entries;

  std::size_t count(int label) const;
};

struct CorpusOptions {
  int per_class = 1;
  LearnConfig learn{};
  int max_attempts = 5;  // training runs per learned entry before giving up
  int threads = 0;       // 0 = hardware concurrency
};

/// per_class learned matrices (independent runs, rejected runs retried with
/// fresh seeds) followed by per_class Haar matrices. Deterministic in `seed`
/// regardless of thread count.
LabeledUnitaryCorpus build_corpus(int n, const CorpusOptions& options, std::uint64_t seed);

struct CorpusSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

/// Stratified 75/25 train-pool/test split, then 10% of the pool for
/// validation. Split sizes round up: test = ceil(N/4), validation =
/// ceil((N - test)/10). Needs at least 10 entries.
CorpusSplit split_corpus(const std::vector<int>& labels, std::uint64_t seed);
CorpusSplit split_corpus(const LabeledUnitaryCorpus& corpus, std::uint64_t seed);

std::vector<LabeledExample> to_examples(const LabeledUnitaryCorpus& corpus,
                                        const std::vector<std::size_t>& indices);

}  // namespace pfl
