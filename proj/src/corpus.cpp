#include "pfl/corpus.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>

#include "pfl/errors.hpp"

namespace pfl {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = splitmix64(base);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  return splitmix64(h ^ c);
}

LearnedRun learn_unitary(int n, const LearnConfig& config, std::uint64_t seed) {
  LearnedRun run;
  run.seed = seed;
  run.dataset = make_dataset(n, n, config.dataset_size, config.loss, derive_seed(seed, 1));

  TrainOptions options;
  options.epochs = config.epochs;
  options.seed = derive_seed(seed, 2);
  try {
    auto trained = train(run.dataset, config.loss, config.adam, options);
    run.m3 = std::move(trained.m3);
    run.loss_history = std::move(trained.loss_history);
  } catch (const DivergenceError&) {
    run.accepted = false;
    run.train_loss = run.test_loss = run.defect = std::numeric_limits<double>::infinity();
    return run;
  }

  run.train_loss = mean_loss(run.m3, run.dataset, config.loss.k);
  run.defect = unitarity_defect(run.m3);
  const int max_period = static_cast<int>(std::max<std::int64_t>(1, register_dim(n) / 2));
  run.test_loss = 0.0;
  for (int period = 1; period <= max_period; ++period) {
    const auto f = generate_periodic_function(n, n, period, derive_seed(seed, 3, static_cast<std::uint64_t>(period)));
    const auto target = target_distribution(config.loss.target, f, config.loss.gaussian_sigma);
    run.test_loss = std::max(run.test_loss, loss(run.m3, f, target, config.loss.k));
  }
  run.accepted = run.train_loss <= config.threshold && run.test_loss <= config.threshold &&
                 run.defect <= config.threshold;
  return run;
}

std::size_t LabeledUnitaryCorpus::count(int label) const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [label](const auto& e) { return e.label == label; }));
}

LabeledUnitaryCorpus build_corpus(int n, const CorpusOptions& options, std::uint64_t seed) {
  if (options.per_class < 1) throw std::invalid_argument("build_corpus: per_class must be >= 1");
  if (options.max_attempts < 1) throw std::invalid_argument("build_corpus: max_attempts must be >= 1");

  LabeledUnitaryCorpus corpus;
  corpus.n = n;
  const auto per_class = static_cast<std::size_t>(options.per_class);
  corpus.entries.resize(2 * per_class);

  auto build_entry = [&](std::size_t index) {
    auto& entry = corpus.entries[index];
    if (index < per_class) {
      entry.label = 1;
      for (int attempt = 0; attempt < options.max_attempts; ++attempt) {
        const auto run_seed = derive_seed(seed, 1, index, static_cast<std::uint64_t>(attempt));
        auto run = learn_unitary(n, options.learn, run_seed);
        if (run.accepted) {
          entry.seed = run_seed;
          entry.matrix = run.m3;
          entry.run = std::move(run);
          return;
        }
      }
      throw std::runtime_error("build_corpus: learned entry " + std::to_string(index) + " failed " +
                               std::to_string(options.max_attempts) + " training attempts");
    }
    entry.label = 0;
    entry.seed = derive_seed(seed, 0, index - per_class);
    entry.matrix = haar_random_unitary(n, entry.seed);
  };

  unsigned threads = options.threads > 0 ? static_cast<unsigned>(options.threads)
                                         : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(corpus.entries.size()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < corpus.entries.size(); i = next++) {
      try {
        build_entry(i);
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return corpus;
}

CorpusSplit split_corpus(const std::vector<int>& labels, std::uint64_t seed) {
  if (labels.size() < 10) throw std::invalid_argument("split_corpus: need at least 10 entries");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> by_label[2];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw std::invalid_argument("split_corpus: labels must be 0 or 1");
    by_label[labels[i]].push_back(i);
  }
  for (auto& group : by_label) std::shuffle(group.begin(), group.end(), rng);

  // Alternating the classes makes every contiguous block balanced within one.
  const int first = static_cast<int>(rng() & 1u);
  std::vector<std::size_t> interleaved;
  interleaved.reserve(labels.size());
  const auto shared = std::min(by_label[0].size(), by_label[1].size());
  for (std::size_t k = 0; k < shared; ++k) {
    interleaved.push_back(by_label[first][k]);
    interleaved.push_back(by_label[1 - first][k]);
  }
  for (const auto& group : by_label) {
    interleaved.insert(interleaved.end(), group.begin() + static_cast<std::ptrdiff_t>(shared), group.end());
  }

  const auto total = interleaved.size();
  const auto test_count = (total + 3) / 4;
  const auto validation_count = (total - test_count + 9) / 10;
  CorpusSplit split;
  auto it = interleaved.begin();
  split.test.assign(it, it + static_cast<std::ptrdiff_t>(test_count));
  it += static_cast<std::ptrdiff_t>(test_count);
  split.validation.assign(it, it + static_cast<std::ptrdiff_t>(validation_count));
  it += static_cast<std::ptrdiff_t>(validation_count);
  split.train.assign(it, interleaved.end());
  return split;
}

CorpusSplit split_corpus(const LabeledUnitaryCorpus& corpus, std::uint64_t seed) {
  std::vector<int> labels;
  labels.reserve(corpus.entries.size());
  for (const auto& e : corpus.entries) labels.push_back(e.label);
  return split_corpus(labels, seed);
}

std::vector<LabeledExample> to_examples(const LabeledUnitaryCorpus& corpus,
                                        const std::vector<std::size_t>& indices) {
  std::vector<LabeledExample> out;
  out.reserve(indices.size());
  for (const auto i : indices) {
    const auto& e = corpus.entries.at(i);
    out.push_back({flatten_unitary(e.matrix), e.label});
  }
  return out;
}

}  // namespace pfl
