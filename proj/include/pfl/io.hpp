#pragma once

// Persistence: binary unitary and classifier files, JSON manifests, CSV.
//
// Unitary file ("UMAT0001"), all integers little-endian u32:
//   [0, 8)   magic
//   [8, 12)  n_qubits
//   [12, 16) rows
//   [16, 20) cols
//   [20, 24) reserved, zero
//   [24, ..) rows*cols entries in row-major order, each Re then Im as
//            little-endian IEEE-754 binary64
//
// Classifier file ("MLPC0001"):
//   magic, u32 layer count L, L pairs of u32 (in_dim, out_dim), then per
//   layer the out x in weights in row-major order followed by the out
//   biases, all little-endian binary64.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pfl/circuit.hpp"
#include "pfl/classifier.hpp"
#include "pfl/corpus.hpp"
#include "pfl/training.hpp"

namespace pfl {

inline constexpr char kUnitaryMagic[] = "UMAT0001";
inline constexpr char kClassifierMagic[] = "MLPC0001";
inline constexpr std::size_t kUnitaryHeaderBytes = 24;

std::vector<std::uint8_t> encode_unitary(const ComplexMatrixd& u);
ComplexMatrixd decode_unitary(const std::vector<std::uint8_t>& bytes);

void write_unitary(const std::filesystem::path& path, const ComplexMatrixd& u);
ComplexMatrixd read_unitary(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_mlp(const Mlp& net);
Mlp decode_mlp(const std::vector<std::uint8_t>& bytes);

void write_mlp(const std::filesystem::path& path, const Mlp& net);
Mlp read_mlp(const std::filesystem::path& path);

/// {"n":..,"m":..,"r":..,"table":[..]}
std::string periodic_function_to_json(const PeriodicFunction& f);
PeriodicFunction periodic_function_from_json(const std::string& text);

void write_functions(const std::filesystem::path& path, const std::vector<PeriodicFunction>& functions);
std::vector<PeriodicFunction> read_functions(const std::filesystem::path& path);

/// Metadata written beside every trained matrix.
struct RunManifest {
  int n = 0;
  int m = 0;
  int ancilla = 0;
  double k = 1.0;
  std::string target = "qft";
  double gaussian_sigma = 2.0;
  AdamConfig adam{};
  int epochs = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> dataset;  // "<file>#<index>" references
  std::vector<double> loss_history;
  std::string matrix_path;
};

void write_run_manifest(const std::filesystem::path& path, const RunManifest& manifest);
RunManifest read_run_manifest(const std::filesystem::path& path);

/// Writes matrices, per-run datasets and manifests under `dir` plus the
/// corpus manifest `dir/corpus.json`; returns the manifest path.
std::filesystem::path write_corpus(const std::filesystem::path& dir, const LabeledUnitaryCorpus& corpus,
                                   const LearnConfig& learn);

/// Loads a corpus manifest and every matrix it names. Learned-run details
/// are not reloaded.
LabeledUnitaryCorpus read_corpus(const std::filesystem::path& manifest_path);

/// RFC-4180 field quoting.
std::string csv_field(const std::string& value);

void write_loss_history_csv(std::ostream& out, const std::vector<double>& history);

}  // namespace pfl
