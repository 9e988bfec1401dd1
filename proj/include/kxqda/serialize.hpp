#ifndef KXQDA_SERIALIZE_HPP
#define KXQDA_SERIALIZE_HPP

// Model containers (little-endian, matrices row-major):
//
//   KISSME  "KXQKISS1" u64 d, u64 p | basis d x p | M p x p
//   XQDA    "KXQXQDA1" u64 d, u64 b | W d x b | core b x b
//   k-XQDA  "KXQKXQD1" u32 kernel tag (0 linear, 1 rbf, 2 poly), u32 degree,
//           f64 gamma, f64 offset, f64 scale, u64 d, n, m, b |
//           train X n x d | train Z m x d | Theta (n+m) x b | Gamma_+ b x b
//
// Each model file gets a JSON sidecar (<file>.json) with the eigenvalues,
// ridge, subspace-dimension outcome and timings. Evaluation reports are
// written as JSON plus a (rank, mean accuracy) CSV.

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kxqda/dataset_io.hpp"
#include "kxqda/eval.hpp"
#include "kxqda/kernel_xqda.hpp"
#include "kxqda/kissme.hpp"
#include "kxqda/xqda.hpp"

namespace kxqda {

using Json = nlohmann::json;

inline constexpr std::array<char, 8> kKissmeMagic = {'K', 'X', 'Q', 'K', 'I', 'S', 'S', '1'};
inline constexpr std::array<char, 8> kXqdaMagic = {'K', 'X', 'Q', 'X', 'Q', 'D', 'A', '1'};
inline constexpr std::array<char, 8> kKxqdaMagic = {'K', 'X', 'Q', 'K', 'X', 'Q', 'D', '1'};

namespace io {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline void put_matrix(std::string& out, const Matrix& m) {
  const RowMajor rm = m;
  out.append(reinterpret_cast<const char*>(rm.data()), static_cast<std::size_t>(rm.size()) * sizeof(double));
}

inline Matrix get_matrix(Reader& rd, std::uint64_t rows, std::uint64_t cols) {
  require(rows < (1ULL << 31) && cols < (1ULL << 31), ErrorKind::ParseError, rd.name() + ": implausible matrix size");
  RowMajor rm(static_cast<Index>(rows), static_cast<Index>(cols));
  rd.get_doubles(rm.data(), static_cast<std::size_t>(rows * cols));
  return rm;
}

inline void expect_magic(Reader& rd, const std::array<char, 8>& magic) {
  require(rd.get<std::array<char, 8>>() == magic, ErrorKind::ParseError, rd.name() + ": wrong model magic");
}

inline std::vector<double> to_vector(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace io

// ---------------------------------------------------------------------------
// KISSME

inline std::string encode_kissme(const KissmeModel& model) {
  std::string out(kKissmeMagic.begin(), kKissmeMagic.end());
  io::put(out, std::uint64_t(model.basis.rows()));
  io::put(out, std::uint64_t(model.basis.cols()));
  io::put_matrix(out, model.basis);
  io::put_matrix(out, model.metric.matrix());
  return out;
}

inline KissmeModel decode_kissme(std::string bytes, const std::string& name = "kissme model") {
  io::Reader rd(std::move(bytes), name);
  io::expect_magic(rd, kKissmeMagic);
  const auto d = rd.get<std::uint64_t>();
  const auto p = rd.get<std::uint64_t>();
  KissmeModel m;
  m.basis = io::get_matrix(rd, d, p);
  m.metric = SymMatrix(io::get_matrix(rd, p, p));
  require(rd.at_end(), ErrorKind::ParseError, name + ": trailing bytes");
  m.embedding = m.basis * psd_factor(m.metric);
  return m;
}

// ---------------------------------------------------------------------------
// XQDA

inline std::string encode_xqda(const XqdaModel& model) {
  std::string out(kXqdaMagic.begin(), kXqdaMagic.end());
  io::put(out, std::uint64_t(model.w.rows()));
  io::put(out, std::uint64_t(model.b));
  io::put_matrix(out, model.w);
  io::put_matrix(out, model.core.matrix());
  return out;
}

inline XqdaModel decode_xqda(std::string bytes, const std::string& name = "xqda model") {
  io::Reader rd(std::move(bytes), name);
  io::expect_magic(rd, kXqdaMagic);
  const auto d = rd.get<std::uint64_t>();
  const auto b = rd.get<std::uint64_t>();
  XqdaModel m;
  m.w = io::get_matrix(rd, d, b);
  m.core = SymMatrix(io::get_matrix(rd, b, b));
  m.b = static_cast<Index>(b);
  require(rd.at_end(), ErrorKind::ParseError, name + ": trailing bytes");
  m.embedding = m.w * psd_factor(m.core);
  return m;
}

// ---------------------------------------------------------------------------
// k-XQDA

inline std::string encode_kxqda(const KxqdaModel& model) {
  std::string out(kKxqdaMagic.begin(), kKxqdaMagic.end());
  io::put(out, static_cast<std::uint32_t>(model.kernel.family));
  io::put(out, static_cast<std::uint32_t>(model.kernel.degree));
  io::put(out, model.kernel.gamma);
  io::put(out, model.kernel.offset);
  io::put(out, model.kernel.scale);
  io::put(out, std::uint64_t(model.train_x.dim()));
  io::put(out, std::uint64_t(model.train_x.size()));
  io::put(out, std::uint64_t(model.train_z.size()));
  io::put(out, std::uint64_t(model.b));
  io::put_matrix(out, model.train_x.samples().transpose());
  io::put_matrix(out, model.train_z.samples().transpose());
  io::put_matrix(out, model.theta);
  io::put_matrix(out, model.gamma_plus.matrix());
  return out;
}

inline KxqdaModel decode_kxqda(std::string bytes, const std::string& name = "kxqda model") {
  io::Reader rd(std::move(bytes), name);
  io::expect_magic(rd, kKxqdaMagic);
  KxqdaModel m;
  const auto tag = rd.get<std::uint32_t>();
  require(tag <= 2, ErrorKind::ParseError, name + ": unknown kernel tag");
  m.kernel.family = static_cast<KernelFamily>(tag);
  m.kernel.degree = static_cast<int>(rd.get<std::uint32_t>());
  m.kernel.gamma = rd.get<double>();
  m.kernel.offset = rd.get<double>();
  m.kernel.scale = rd.get<double>();
  const auto d = rd.get<std::uint64_t>();
  const auto n = rd.get<std::uint64_t>();
  const auto mm = rd.get<std::uint64_t>();
  const auto b = rd.get<std::uint64_t>();
  m.train_x = ViewMatrix(io::get_matrix(rd, n, d).transpose());
  m.train_z = ViewMatrix(io::get_matrix(rd, mm, d).transpose());
  m.theta = io::get_matrix(rd, n + mm, b);
  m.gamma_plus = SymMatrix(io::get_matrix(rd, b, b));
  m.b = static_cast<Index>(b);
  require(rd.at_end(), ErrorKind::ParseError, name + ": trailing bytes");
  m.embedding = m.theta * psd_factor(m.gamma_plus);
  return m;
}

// ---------------------------------------------------------------------------
// Any model + sidecar

inline std::string encode_model(const FittedModel& model) {
  return std::visit(
      [](const auto& m) -> std::string {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, KissmeModel>) return encode_kissme(m);
        else if constexpr (std::is_same_v<T, XqdaModel>) return encode_xqda(m);
        else return encode_kxqda(m);
      },
      model);
}

inline FittedModel decode_model(std::string bytes, const std::string& name = "model") {
  require(bytes.size() >= 8, ErrorKind::ParseError, name + ": truncated file");
  std::array<char, 8> magic{};
  std::copy_n(bytes.begin(), 8, magic.begin());
  if (magic == kKissmeMagic) return decode_kissme(std::move(bytes), name);
  if (magic == kXqdaMagic) return decode_xqda(std::move(bytes), name);
  if (magic == kKxqdaMagic) return decode_kxqda(std::move(bytes), name);
  fail(ErrorKind::ParseError, name + ": unknown model magic");
}

inline Json model_sidecar(const FittedModel& model) {
  return std::visit(
      [](const auto& m) -> Json {
        using T = std::decay_t<decltype(m)>;
        Json j;
        if constexpr (std::is_same_v<T, KissmeModel>) {
          j["method"] = "kissme";
          j["d"] = m.basis.rows();
          j["pca_dim"] = m.basis.cols();
          j["metric_rank"] = m.embedding.cols();
        } else if constexpr (std::is_same_v<T, XqdaModel>) {
          j["method"] = "xqda";
          j["d"] = m.w.rows();
          j["b"] = m.b;
          j["ridge"] = m.ridge;
          j["dimension_rule"] = to_string(m.rule);
          j["eigenvalues"] = io::to_vector(m.eigenvalues);
        } else {
          j["method"] = "kxqda";
          j["kernel"] = to_string(m.kernel);
          j["d"] = m.train_x.dim();
          j["n"] = m.train_x.size();
          j["m"] = m.train_z.size();
          j["b"] = m.b;
          j["lambda"] = m.lambda;
          j["dimension_rule"] = to_string(m.rule);
          j["eigenvalues"] = io::to_vector(m.eigenvalues);
        }
        return j;
      },
      model);
}

inline void save_model(const std::filesystem::path& path, const FittedModel& model, const Json& extra = Json::object()) {
  io::write_atomic(path, encode_model(model));
  Json side = model_sidecar(model);
  for (const auto& [k, v] : extra.items()) side[k] = v;
  io::write_atomic(path.string() + ".json", side.dump(2) + "\n");
}

inline FittedModel load_model(const std::filesystem::path& path) {
  return decode_model(io::read_all(path), path.string());
}

// ---------------------------------------------------------------------------
// Reports

inline Json to_json(const CmcCurve& c) {
  return Json{{"accuracy", c.accuracy}, {"evaluated_queries", c.evaluated}, {"excluded_queries", c.excluded}};
}

inline Json rank_table(const CmcCurve& c) {
  Json t = Json::object();
  for (int r : {1, 5, 10, 20}) t[std::to_string(r)] = c.at(static_cast<std::size_t>(r));
  return t;
}

inline Json to_json(const EvalReport& report, const Json& config_echo = Json::object()) {
  Json j;
  j["config"] = config_echo;
  j["method"] = to_string(report.model.method);
  j["kernel"] = to_string(report.model.kernel);
  j["trials_requested"] = report.protocol.trials;
  j["trials_failed"] = report.failed();
  j["seed"] = report.protocol.seed;
  j["mean"] = to_json(report.mean);
  j["rank_table"] = rank_table(report.mean);
  Json trials = Json::array();
  for (const auto& t : report.trials) {
    Json tj{{"index", t.index}, {"ok", t.ok}};
    if (t.ok) {
      tj["b"] = t.b;
      if (!t.kernel.empty()) tj["kernel"] = t.kernel;
      tj["cmc"] = to_json(t.cmc);
      tj["seconds"] = {{"fit", t.fit_seconds}, {"distance", t.distance_seconds}, {"cmc", t.cmc_seconds}};
    } else {
      tj["error"] = t.error;
      if (t.error_kind) tj["error_kind"] = to_string(*t.error_kind);
    }
    trials.push_back(std::move(tj));
  }
  j["trials"] = std::move(trials);
  return j;
}

inline std::string cmc_csv(const CmcCurve& c) {
  std::string out = "rank,mean_accuracy\n";
  for (std::size_t r = 0; r < c.accuracy.size(); ++r) {
    out += std::to_string(r + 1);
    out.push_back(',');
    io::append_double(out, c.accuracy[r]);
    out.push_back('\n');
  }
  return out;
}

}  // namespace kxqda

#endif  // KXQDA_SERIALIZE_HPP
