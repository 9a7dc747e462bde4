#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "pfl/cli.hpp"
#include "pfl/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run pflearn(std::vector<std::string> args) {
  args.insert(args.begin(), "pflearn");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = pfl::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    std::vector<std::string> cells;
    std::stringstream cells_in(line);
    std::string cell;
    while (std::getline(cells_in, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::string metric(const std::string& csv, const std::string& name) {
  for (const auto& row : parse_csv(csv)) {
    if (row.size() == 2 && row[0] == name) return row[1];
  }
  return {};
}

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(pflearn({}).code, pfl::kExitUsage);
  EXPECT_EQ(pflearn({"frobnicate"}).code, pfl::kExitUsage);
  EXPECT_EQ(pflearn({"train", "--qubits", "0"}).code, pfl::kExitUsage);
  EXPECT_EQ(pflearn({"train", "--qubits", "11"}).code, pfl::kExitUsage);
  EXPECT_EQ(pflearn({"train", "--qubits", "3", "--target", "sawtooth"}).code, pfl::kExitUsage);
  EXPECT_EQ(pflearn({"train", "--qubits", "3", "--lr", "-1"}).code, pfl::kExitUsage);
  EXPECT_EQ(pflearn({"spectrum"}).code, pfl::kExitUsage);
  EXPECT_EQ(pflearn({"period", "--qubits", "3", "--r", "9"}).code, pfl::kExitUsage);
  const auto r = pflearn({"train"});
  EXPECT_EQ(r.code, pfl::kExitUsage);
  EXPECT_NE(r.err.find("--qubits"), std::string::npos);
  EXPECT_EQ(pflearn({"--help"}).code, pfl::kExitOk);
}

TEST(Cli, TrainWritesArtifactsAndIsReproducible) {
  oracle::TempDir a("cli_a"), b("cli_b");
  const std::vector<std::string> args{"train", "--qubits", "2", "--dataset-size", "4", "--epochs", "3000", "--seed", "3"};
  auto with_dir = [&](const oracle::TempDir& d) {
    auto v = args;
    v.push_back("--out-dir");
    v.push_back(d.path().string());
    return v;
  };
  const auto first = pflearn(with_dir(a));
  ASSERT_EQ(first.code, pfl::kExitOk) << first.err;
  EXPECT_LE(std::stod(metric(first.out, "final_loss")), 1e-6);
  for (const char* name : {"unitary.umat", "manifest.json", "dataset.json", "loss_history.csv"}) {
    EXPECT_TRUE(fs::exists(a / name)) << name;
  }
  const auto manifest = pfl::read_run_manifest(a / "manifest.json");
  EXPECT_EQ(manifest.n, 2);
  EXPECT_EQ(manifest.seed, 3u);
  EXPECT_EQ(manifest.loss_history.size(), 3000u);
  EXPECT_EQ(pfl::read_functions(a / "dataset.json").size(), 4u);
  EXPECT_EQ(parse_csv(slurp(a / "loss_history.csv")).size(), 3001u);

  const auto second = pflearn(with_dir(b));
  EXPECT_EQ(second.out, first.out);
  for (const char* name : {"unitary.umat", "manifest.json", "dataset.json", "loss_history.csv"}) {
    EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
  }
}

TEST(Cli, TrainNonConvergenceStillWritesArtifacts) {
  oracle::TempDir dir("cli_nc");
  const auto r = pflearn({"train", "--qubits", "2", "--dataset-size", "2", "--epochs", "3", "--out-dir",
                          dir.path().string()});
  EXPECT_EQ(r.code, pfl::kExitNotConverged);
  EXPECT_TRUE(fs::exists(dir / "unitary.umat"));
  EXPECT_NE(r.err.find("not converged"), std::string::npos);
}

TEST(Cli, OutDirFromEnvironment) {
  oracle::TempDir dir("cli_env");
  ::setenv(pfl::kOutDirEnv, dir.path().c_str(), 1);
  const auto r = pflearn({"train", "--qubits", "1", "--dataset-size", "1", "--epochs", "2"});
  ::unsetenv(pfl::kOutDirEnv);
  EXPECT_EQ(r.code, pfl::kExitNotConverged);
  EXPECT_TRUE(fs::exists(dir / "unitary.umat"));
}

TEST(Cli, EvalOnInverseQft) {
  oracle::TempDir dir("cli_eval");
  pfl::write_unitary(dir / "qft.umat", pfl::inverse_qft_matrix(4));
  const auto r = pflearn({"eval", "--matrix", (dir / "qft.umat").string(), "--qubits", "4", "--periods", "1,3,8,11,16"});
  ASSERT_EQ(r.code, pfl::kExitOk) << r.err;
  const auto rows = parse_csv(r.out);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"period", "loss", "distance"}));
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LT(std::stod(rows[i][2]), 1e-12);

  const auto to_file = pflearn({"eval", "--matrix", (dir / "qft.umat").string(), "--qubits", "4", "--periods", "2",
                                "--out", (dir / "eval.csv").string()});
  EXPECT_EQ(to_file.code, pfl::kExitOk);
  EXPECT_TRUE(to_file.out.empty());
  EXPECT_EQ(parse_csv(slurp(dir / "eval.csv")).size(), 2u);
}

TEST(Cli, UnreadableMatrix) {
  oracle::TempDir dir("cli_bad");
  std::ofstream(dir / "bad.umat") << "BADMAGIC0000000000000000";
  const auto r = pflearn({"eval", "--matrix", (dir / "bad.umat").string(), "--qubits", "2", "--periods", "1"});
  EXPECT_EQ(r.code, pfl::kExitDataError);
  EXPECT_NE(r.err.find("offset 0"), std::string::npos) << r.err;
  EXPECT_EQ(pflearn({"echo", "--matrix", (dir / "missing.umat").string()}).code, pfl::kExitDataError);
}

TEST(Cli, Echo) {
  oracle::TempDir dir("cli_echo");
  pfl::write_unitary(dir / "id.umat", pfl::ComplexMatrixd::Identity(8, 8));
  pfl::write_unitary(dir / "small.umat", pfl::ComplexMatrixd::Identity(4, 4));
  const auto r = pflearn({"echo", "--matrix", (dir / "id.umat").string(), "--reference", (dir / "id.umat").string()});
  ASSERT_EQ(r.code, pfl::kExitOk) << r.err;
  const auto rows = parse_csv(r.out);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"subject_path", "reference", "echo_zero", "echo_uniform"}));
  EXPECT_NEAR(std::stod(rows[1][2]), 1.0, 1e-12);
  EXPECT_NEAR(std::stod(rows[1][3]), 1.0, 1e-12);

  const auto mismatch =
      pflearn({"echo", "--matrix", (dir / "id.umat").string(), "--reference", (dir / "small.umat").string()});
  EXPECT_EQ(mismatch.code, pfl::kExitDataError);

  const auto vs_qft = pflearn({"echo", "--matrix", (dir / "id.umat").string()});
  EXPECT_EQ(vs_qft.code, pfl::kExitOk);
  EXPECT_NEAR(std::stod(parse_csv(vs_qft.out)[1][2]), 1.0 / 8.0, 1e-12);
}

TEST(Cli, Spectrum) {
  oracle::TempDir dir("cli_shape");
  pfl::write_unitary(dir / "id.umat", pfl::ComplexMatrixd::Identity(8, 8));
  const auto single = pflearn({"spectrum", "--matrix", (dir / "id.umat").string()});
  ASSERT_EQ(single.code, pfl::kExitOk) << single.err;
  auto rows = parse_csv(single.out);
  ASSERT_EQ(rows.size(), 21u);
  int occupied = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) occupied += rows[i][2] != "0";
  EXPECT_EQ(occupied, 1);

  const auto haar = pflearn({"spectrum", "--haar-samples", "50", "--qubits", "3", "--seed", "2"});
  ASSERT_EQ(haar.code, pfl::kExitOk);
  rows = parse_csv(haar.out);
  long total = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) total += std::stol(rows[i][2]);
  EXPECT_EQ(total, 50 * 8);
  EXPECT_EQ(pflearn({"spectrum", "--haar-samples", "50", "--qubits", "3", "--seed", "2"}).out, haar.out);

  pfl::write_unitary(dir / "scaled.umat", 2.0 * pfl::ComplexMatrixd::Identity(4, 4));
  EXPECT_EQ(pflearn({"spectrum", "--matrix", (dir / "scaled.umat").string()}).code, pfl::kExitDataError);
  EXPECT_EQ(pflearn({"spectrum", "--haar-samples", "3"}).code, pfl::kExitUsage);
}

TEST(Cli, Period) {
  auto r = pflearn({"period", "--qubits", "5", "--r", "8"});
  ASSERT_EQ(r.code, pfl::kExitOk) << r.err;
  EXPECT_EQ(r.out, "8\n");
  r = pflearn({"period", "--qubits", "5", "--r", "1"});
  EXPECT_EQ(r.out, "1\n");

  oracle::TempDir dir("cli_period");
  pfl::write_unitary(dir / "zero.umat", pfl::ComplexMatrixd::Zero(8, 8));
  r = pflearn({"period", "--qubits", "3", "--r", "2", "--matrix", (dir / "zero.umat").string()});
  EXPECT_EQ(r.code, pfl::kExitEstimationFailed);
}

TEST(Cli, CorpusAndClassifier) {
  oracle::TempDir dir("cli_corpus");
  const auto corpus_dir = dir / "corpus";
  const auto c = pflearn({"corpus", "--qubits", "2", "--per-class", "10", "--dataset-size", "4", "--threads", "1",
                          "--seed", "5", "--out-dir", corpus_dir.string()});
  ASSERT_EQ(c.code, pfl::kExitOk) << c.err;
  EXPECT_EQ(metric(c.out, "learned"), "10");
  const auto manifest = corpus_dir / "corpus.json";
  ASSERT_TRUE(fs::exists(manifest));

  const auto model_dir = dir / "model";
  const auto t = pflearn({"classify-train", "--corpus", manifest.string(), "--hidden", "16,8", "--epochs", "5",
                          "--seed", "1", "--out-dir", model_dir.string()});
  ASSERT_EQ(t.code, pfl::kExitOk) << t.err;
  EXPECT_TRUE(fs::exists(model_dir / "classifier.mlpc"));
  const auto metrics = parse_csv(slurp(model_dir / "classifier_metrics.csv"));
  ASSERT_GE(metrics.size(), 2u);
  EXPECT_EQ(metrics[0], (std::vector<std::string>{"epoch", "train_loss", "train_accuracy", "validation_loss",
                                                  "validation_accuracy"}));

  const auto e = pflearn({"classify-eval", "--model", (model_dir / "classifier.mlpc").string(), "--corpus",
                          manifest.string(), "--seed", "1", "--score-qft", "--out-dir", model_dir.string()});
  ASSERT_EQ(e.code, pfl::kExitOk) << e.err;
  const double accuracy = std::stod(metric(e.out, "test_accuracy"));
  EXPECT_GE(accuracy, 0.0);
  EXPECT_LE(accuracy, 1.0);
  const double qft = std::stod(metric(e.out, "qft_score"));
  EXPECT_GT(qft, 0.0);
  EXPECT_LT(qft, 1.0);
  const auto scores = parse_csv(slurp(model_dir / "scores.csv"));
  EXPECT_EQ(scores.size(), 1u + 5u);  // ceil(20 / 4) test matrices

  const auto only_qft = pflearn({"classify-eval", "--model", (model_dir / "classifier.mlpc").string(), "--score-qft"});
  EXPECT_EQ(metric(only_qft.out, "qft_score"), metric(e.out, "qft_score"));
  EXPECT_EQ(pflearn({"classify-eval", "--model", (model_dir / "classifier.mlpc").string()}).code, pfl::kExitUsage);
}

TEST(Cli, EmptyCorpusRejected) {
  oracle::TempDir dir("cli_empty");
  std::ofstream(dir / "corpus.json") << R"({"n": 2, "entries": []})";
  const auto r = pflearn({"classify-train", "--corpus", (dir / "corpus.json").string(), "--out-dir", dir.path().string()});
  EXPECT_EQ(r.code, pfl::kExitDataError);
  EXPECT_NE(r.err.find("empty"), std::string::npos);
}
