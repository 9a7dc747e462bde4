#include "pfl/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "pfl/errors.hpp"

namespace pfl {

using nlohmann::json;

namespace {

class ByteWriter {
 public:
  void raw(const char* text, std::size_t count) { bytes_.insert(bytes_.end(), text, text + count); }

  void u32(std::uint32_t v) {
    for (int shift = 0; shift < 32; shift += 8) bytes_.push_back(static_cast<std::uint8_t>(v >> shift));
  }

  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int shift = 0; shift < 64; shift += 8) bytes_.push_back(static_cast<std::uint8_t>(bits >> shift));
  }

  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  ByteReader(const std::vector<std::uint8_t>& bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}

  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

  void expect_magic(const char* magic) {
    require(8);
    if (std::memcmp(bytes_.data(), magic, 8) != 0) throw FormatError(what_ + ": bad magic", 0);
    pos_ = 8;
  }

  std::uint32_t u32() {
    require(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(bytes_[pos_ + k]) << (8 * k);
    pos_ += 4;
    return v;
  }

  double f64() {
    require(8);
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(bytes_[pos_ + k]) << (8 * k);
    const auto at = pos_;
    pos_ += 8;
    const double v = std::bit_cast<double>(bits);
    if (!std::isfinite(v)) throw FormatError(what_ + ": non-finite value", at);
    return v;
  }

  void expect_end() const {
    if (pos_ != bytes_.size()) throw FormatError(what_ + ": trailing bytes", pos_);
  }

  [[noreturn]] void fail(const std::string& message, std::size_t at) const { throw FormatError(what_ + ": " + message, at); }

 private:
  void require(std::size_t count) const {
    if (remaining() < count) throw FormatError(what_ + ": truncated", bytes_.size());
  }

  const std::vector<std::uint8_t>& bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what(), 0);
  }
}

void write_json(const std::filesystem::path& path, const json& doc) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

json function_json(const PeriodicFunction& f) {
  return json{{"n", f.n}, {"m", f.m}, {"r", f.period}, {"table", f.table}};
}

PeriodicFunction function_from(const json& j) {
  try {
    PeriodicFunction f;
    f.n = j.at("n").get<int>();
    f.m = j.at("m").get<int>();
    f.period = j.at("r").get<int>();
    f.table = j.at("table").get<std::vector<std::uint32_t>>();
    f.validate();
    return f;
  } catch (const json::exception& e) {
    throw FormatError(std::string("periodic function: ") + e.what(), 0);
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what(), 0);
  }
}

}  // namespace

std::vector<std::uint8_t> encode_unitary(const ComplexMatrixd& u) {
  if (u.rows() != u.cols()) throw DimensionError("unitary file: matrix is not square");
  const int n = qubits_for_dim(u.rows());
  ByteWriter w;
  w.raw(kUnitaryMagic, 8);
  w.u32(static_cast<std::uint32_t>(n));
  w.u32(static_cast<std::uint32_t>(u.rows()));
  w.u32(static_cast<std::uint32_t>(u.cols()));
  w.u32(0);
  for (Eigen::Index r = 0; r < u.rows(); ++r) {
    for (Eigen::Index c = 0; c < u.cols(); ++c) {
      w.f64(u(r, c).real());
      w.f64(u(r, c).imag());
    }
  }
  return w.take();
}

ComplexMatrixd decode_unitary(const std::vector<std::uint8_t>& bytes) {
  ByteReader in(bytes, "unitary file");
  in.expect_magic(kUnitaryMagic);
  const auto n = in.u32();
  if (n < 1 || n > 15) in.fail("n_qubits " + std::to_string(n) + " out of range", 8);
  const auto rows = in.u32();
  const auto dim = std::uint32_t{1} << n;
  if (rows != dim) in.fail("rows != 2^n_qubits", 12);
  const auto cols = in.u32();
  if (cols != dim) in.fail("cols != 2^n_qubits", 16);
  in.u32();  // reserved
  const std::size_t expected = kUnitaryHeaderBytes + std::size_t{rows} * cols * 16;
  if (bytes.size() < expected) throw FormatError("unitary file: truncated", bytes.size());
  ComplexMatrixd u(rows, cols);
  for (Eigen::Index r = 0; r < u.rows(); ++r) {
    for (Eigen::Index c = 0; c < u.cols(); ++c) {
      const double re = in.f64();
      const double im = in.f64();
      u(r, c) = {re, im};
    }
  }
  in.expect_end();
  return u;
}

void write_unitary(const std::filesystem::path& path, const ComplexMatrixd& u) { write_bytes(path, encode_unitary(u)); }

ComplexMatrixd read_unitary(const std::filesystem::path& path) {
  try {
    return decode_unitary(read_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.offset());
  }
}

std::vector<std::uint8_t> encode_mlp(const Mlp& net) {
  ByteWriter w;
  w.raw(kClassifierMagic, 8);
  w.u32(static_cast<std::uint32_t>(net.layer_count()));
  for (int l = 0; l < net.layer_count(); ++l) {
    w.u32(static_cast<std::uint32_t>(net.dims()[l]));
    w.u32(static_cast<std::uint32_t>(net.dims()[l + 1]));
  }
  for (int l = 0; l < net.layer_count(); ++l) {
    const auto weights = net.weight(l);
    for (Eigen::Index r = 0; r < weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < weights.cols(); ++c) w.f64(weights(r, c));
    }
    const auto bias = net.bias(l);
    for (Eigen::Index r = 0; r < bias.size(); ++r) w.f64(bias[r]);
  }
  return w.take();
}

Mlp decode_mlp(const std::vector<std::uint8_t>& bytes) {
  ByteReader in(bytes, "classifier file");
  in.expect_magic(kClassifierMagic);
  const auto layers = in.u32();
  if (layers < 1 || layers > 64) in.fail("layer count out of range", 8);
  std::vector<int> dims;
  for (std::uint32_t l = 0; l < layers; ++l) {
    const auto at = in.offset();
    const auto input = in.u32();
    const auto output = in.u32();
    if (input < 1 || output < 1 || input > (1u << 24) || output > (1u << 24)) in.fail("layer width out of range", at);
    if (l == 0) {
      dims.push_back(static_cast<int>(input));
    } else if (static_cast<int>(input) != dims.back()) {
      in.fail("layer widths do not chain", at);
    }
    dims.push_back(static_cast<int>(output));
  }
  if (dims.back() != 1) in.fail("output layer must have one unit", in.offset());
  Mlp net(dims);
  for (int l = 0; l < net.layer_count(); ++l) {
    auto weights = net.weight(l);
    for (Eigen::Index r = 0; r < weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < weights.cols(); ++c) weights(r, c) = in.f64();
    }
    auto bias = net.bias(l);
    for (Eigen::Index r = 0; r < bias.size(); ++r) bias[r] = in.f64();
  }
  in.expect_end();
  return net;
}

void write_mlp(const std::filesystem::path& path, const Mlp& net) { write_bytes(path, encode_mlp(net)); }

Mlp read_mlp(const std::filesystem::path& path) {
  try {
    return decode_mlp(read_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.offset());
  }
}

std::string periodic_function_to_json(const PeriodicFunction& f) { return function_json(f).dump(); }

PeriodicFunction periodic_function_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("periodic function: ") + e.what(), 0);
  }
  return function_from(j);
}

void write_functions(const std::filesystem::path& path, const std::vector<PeriodicFunction>& functions) {
  json doc = json::array();
  for (const auto& f : functions) doc.push_back(function_json(f));
  write_json(path, doc);
}

std::vector<PeriodicFunction> read_functions(const std::filesystem::path& path) {
  const auto doc = read_json(path);
  if (!doc.is_array()) throw FormatError(path.string() + ": expected an array of functions", 0);
  std::vector<PeriodicFunction> out;
  for (const auto& j : doc) out.push_back(function_from(j));
  return out;
}

void write_run_manifest(const std::filesystem::path& path, const RunManifest& m) {
  json doc{{"n", m.n},
           {"m", m.m},
           {"ancilla", m.ancilla},
           {"k", m.k},
           {"target", m.target},
           {"gaussian_sigma", m.gaussian_sigma},
           {"alpha", m.adam.alpha},
           {"beta1", m.adam.beta1},
           {"beta2", m.adam.beta2},
           {"epsilon", m.adam.epsilon},
           {"epochs", m.epochs},
           {"seed", m.seed},
           {"matrix_path", m.matrix_path},
           {"dataset", m.dataset},
           {"loss_history", m.loss_history}};
  write_json(path, doc);
}

RunManifest read_run_manifest(const std::filesystem::path& path) {
  const auto doc = read_json(path);
  try {
    RunManifest m;
    m.n = doc.at("n").get<int>();
    m.m = doc.at("m").get<int>();
    m.ancilla = doc.at("ancilla").get<int>();
    m.k = doc.at("k").get<double>();
    m.target = doc.at("target").get<std::string>();
    m.gaussian_sigma = doc.value("gaussian_sigma", 2.0);
    m.adam.alpha = doc.at("alpha").get<double>();
    m.adam.beta1 = doc.at("beta1").get<double>();
    m.adam.beta2 = doc.at("beta2").get<double>();
    m.adam.epsilon = doc.at("epsilon").get<double>();
    m.epochs = doc.at("epochs").get<int>();
    m.seed = doc.at("seed").get<std::uint64_t>();
    m.matrix_path = doc.value("matrix_path", std::string{});
    m.dataset = doc.at("dataset").get<std::vector<std::string>>();
    m.loss_history = doc.at("loss_history").get<std::vector<double>>();
    return m;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what(), 0);
  }
}

std::filesystem::path write_corpus(const std::filesystem::path& dir, const LabeledUnitaryCorpus& corpus,
                                   const LearnConfig& learn) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "matrices");
  json entries = json::array();
  for (std::size_t i = 0; i < corpus.entries.size(); ++i) {
    const auto& e = corpus.entries[i];
    std::ostringstream stem;
    stem << (e.label == 1 ? "learned_" : "haar_") << std::setw(5) << std::setfill('0') << i;
    const fs::path matrix_rel = fs::path("matrices") / (stem.str() + ".umat");
    write_unitary(dir / matrix_rel, e.matrix);
    json provenance{{"seed", e.seed}};
    if (e.run) {
      const fs::path dataset_rel = fs::path("runs") / (stem.str() + "_dataset.json");
      const fs::path manifest_rel = fs::path("runs") / (stem.str() + ".json");
      std::vector<PeriodicFunction> functions;
      RunManifest m;
      for (std::size_t s = 0; s < e.run->dataset.samples.size(); ++s) {
        functions.push_back(e.run->dataset.samples[s].function);
        m.dataset.push_back(dataset_rel.filename().string() + "#" + std::to_string(s));
      }
      write_functions(dir / dataset_rel, functions);
      m.n = corpus.n;
      m.m = corpus.n;
      m.k = learn.loss.k;
      m.target = std::string(to_string(learn.loss.target));
      m.gaussian_sigma = learn.loss.gaussian_sigma;
      m.adam = learn.adam;
      m.epochs = learn.epochs;
      m.seed = e.seed;
      m.loss_history = e.run->loss_history;
      m.matrix_path = (fs::path("..") / matrix_rel).generic_string();
      write_run_manifest(dir / manifest_rel, m);
      provenance["training_manifest"] = manifest_rel.generic_string();
    } else {
      provenance["source"] = "haar";
    }
    entries.push_back({{"matrix_path", matrix_rel.generic_string()}, {"label", e.label}, {"provenance", provenance}});
  }
  const auto manifest = dir / "corpus.json";
  write_json(manifest, json{{"n", corpus.n}, {"entries", entries}});
  return manifest;
}

LabeledUnitaryCorpus read_corpus(const std::filesystem::path& manifest_path) {
  const auto doc = read_json(manifest_path);
  LabeledUnitaryCorpus corpus;
  try {
    corpus.n = doc.at("n").get<int>();
    const auto base = manifest_path.parent_path();
    for (const auto& item : doc.at("entries")) {
      CorpusEntry e;
      e.label = item.at("label").get<int>();
      if (e.label != 0 && e.label != 1) throw FormatError(manifest_path.string() + ": label must be 0 or 1", 0);
      e.seed = item.at("provenance").at("seed").get<std::uint64_t>();
      e.source = item.at("matrix_path").get<std::string>();
      e.matrix = read_unitary(base / e.source);
      if (e.matrix.rows() != register_dim(corpus.n)) {
        throw FormatError(manifest_path.string() + ": matrix size does not match corpus n", 0);
      }
      corpus.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw FormatError(manifest_path.string() + ": " + e.what(), 0);
  }
  return corpus;
}

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\r\n") == std::string::npos) return value;
  std::string quoted = "\"";
  for (const char c : value) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

void write_loss_history_csv(std::ostream& out, const std::vector<double>& history) {
  out << "epoch,mean_loss\n" << std::setprecision(17);
  for (std::size_t e = 0; e < history.size(); ++e) out << e + 1 << ',' << history[e] << '\n';
}

}  // namespace pfl
