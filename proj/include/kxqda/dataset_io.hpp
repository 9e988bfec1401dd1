#ifndef KXQDA_DATASET_IO_HPP
#define KXQDA_DATASET_IO_HPP

// Feature and label files.
//
//   CSV     one sample per line, comma separated, '.' decimal point, no header.
//   binary  "KXQFEAT1" | uint64 d | uint64 n | n*d float64, row-major
//           (one sample per row), all little-endian.
//   labels  one 1-based integer per line.
//
// Numbers are written with the shortest representation that round-trips, so
// save -> load reproduces every double exactly.

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "kxqda/dataset.hpp"
#include "kxqda/error.hpp"

namespace kxqda {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

inline constexpr std::array<char, 8> kFeatureMagic = {'K', 'X', 'Q', 'F', 'E', 'A', 'T', '1'};

namespace io {

/// Writes via a sibling temp file and rename so readers never see a partial file.
inline void write_atomic(const std::filesystem::path& path, std::string_view bytes) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorKind::IoError, "cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    require(static_cast<bool>(out), ErrorKind::IoError, "write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  require(!ec, ErrorKind::IoError, "cannot rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
}

inline std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void append_double(std::string& out, double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.append(buf.data(), end);
}

inline double parse_double(std::string_view tok, const std::string& where) {
  while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t')) tok.remove_prefix(1);
  while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t' || tok.back() == '\r')) tok.remove_suffix(1);
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  require(ec == std::errc() && ptr == tok.data() + tok.size(), ErrorKind::ParseError,
          where + ": cannot parse number '" + std::string(tok) + "'");
  require(std::isfinite(v), ErrorKind::ParseError, where + ": non-finite value");
  return v;
}

template <typename T>
void put(std::string& out, const T& v) {
  const auto* p = reinterpret_cast<const char*>(&v);
  out.append(p, sizeof(T));
}

/// Bounds-checked little-endian reader over an in-memory file.
class Reader {
 public:
  Reader(std::string bytes, std::string name) : bytes_(std::move(bytes)), name_(std::move(name)) {}

  template <typename T>
  T get() {
    T v{};
    need(sizeof(T));
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  void get_doubles(double* dst, std::size_t count) {
    need(count * sizeof(double));
    std::memcpy(dst, bytes_.data() + pos_, count * sizeof(double));
    pos_ += count * sizeof(double);
  }

  bool at_end() const { return pos_ == bytes_.size(); }
  const std::string& name() const { return name_; }

 private:
  void need(std::size_t k) const {
    require(pos_ + k <= bytes_.size(), ErrorKind::ParseError, name_ + ": truncated file");
  }
  std::string bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace io

inline std::string features_to_csv(const ViewMatrix& view) {
  std::string out;
  for (Index i = 0; i < view.size(); ++i) {
    for (Index r = 0; r < view.dim(); ++r) {
      if (r) out.push_back(',');
      io::append_double(out, view.samples()(r, i));
    }
    out.push_back('\n');
  }
  return out;
}

inline ViewMatrix features_from_csv(std::string_view text, const std::string& name = "csv") {
  std::vector<double> values;
  Index dim = -1;
  Index rows = 0;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    Index cols = 0;
    const std::string where = name + ":" + std::to_string(line_no);
    while (true) {
      const auto comma = line.find(',');
      values.push_back(io::parse_double(line.substr(0, comma), where));
      ++cols;
      if (comma == std::string_view::npos) break;
      line = line.substr(comma + 1);
    }
    if (dim < 0) dim = cols;
    require(cols == dim, ErrorKind::ShapeError,
            where + ": expected " + std::to_string(dim) + " columns, got " + std::to_string(cols));
    ++rows;
  }
  require(rows > 0, ErrorKind::ParseError, name + ": no samples");
  // Row-major file -> column-per-sample matrix.
  Matrix samples = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
                       values.data(), rows, dim)
                       .transpose();
  return ViewMatrix(std::move(samples));
}

inline std::string features_to_binary(const ViewMatrix& view) {
  std::string out(kFeatureMagic.begin(), kFeatureMagic.end());
  io::put(out, static_cast<std::uint64_t>(view.dim()));
  io::put(out, static_cast<std::uint64_t>(view.size()));
  // Column-major d x n storage is exactly row-major n x d.
  out.append(reinterpret_cast<const char*>(view.samples().data()),
             static_cast<std::size_t>(view.samples().size()) * sizeof(double));
  return out;
}

inline bool has_feature_magic(std::string_view bytes) {
  return bytes.size() >= kFeatureMagic.size() &&
         std::equal(kFeatureMagic.begin(), kFeatureMagic.end(), bytes.begin());
}

inline ViewMatrix features_from_binary(std::string bytes, const std::string& name = "binary") {
  require(has_feature_magic(bytes), ErrorKind::ParseError, name + ": bad magic");
  io::Reader rd(std::move(bytes), name);
  rd.get<std::array<char, 8>>();
  const auto d = rd.get<std::uint64_t>();
  const auto n = rd.get<std::uint64_t>();
  require(d >= 1 && d < (1ULL << 31) && n < (1ULL << 31), ErrorKind::ParseError, name + ": implausible header");
  Matrix samples(static_cast<Index>(d), static_cast<Index>(n));
  rd.get_doubles(samples.data(), static_cast<std::size_t>(d * n));
  require(rd.at_end(), ErrorKind::ParseError, name + ": trailing bytes");
  return ViewMatrix(std::move(samples));
}

/// Reads a feature file, choosing the format from its leading bytes.
inline ViewMatrix load_view(const std::filesystem::path& path) {
  std::string bytes = io::read_all(path);
  if (has_feature_magic(bytes)) return features_from_binary(std::move(bytes), path.string());
  return features_from_csv(bytes, path.string());
}

inline std::string labels_to_text(const std::vector<int>& labels) {
  std::string out;
  for (int y : labels) {
    out += std::to_string(y);
    out.push_back('\n');
  }
  return out;
}

inline std::vector<int> labels_from_text(std::string_view text, const std::string& name = "labels") {
  std::vector<int> labels;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.remove_suffix(1);
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
    if (line.empty()) continue;
    long v = 0;
    auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
    const std::string where = name + ":" + std::to_string(line_no);
    require(ec == std::errc() && ptr == line.data() + line.size(), ErrorKind::ParseError,
            where + ": not an integer label '" + std::string(line) + "'");
    require(v >= 1 && v <= 1'000'000'000L, ErrorKind::LabelError, where + ": label out of range " + std::to_string(v));
    labels.push_back(static_cast<int>(v));
  }
  return labels;
}

inline CrossViewDataset load_features(const std::filesystem::path& path_x, const std::filesystem::path& path_z,
                                      const std::filesystem::path& path_labels_x,
                                      const std::filesystem::path& path_labels_z) {
  ViewMatrix x = load_view(path_x);
  ViewMatrix z = load_view(path_z);
  require(x.dim() == z.dim(), ErrorKind::ShapeError,
          "feature dimensions differ: " + path_x.string() + " has " + std::to_string(x.dim()) + ", " +
              path_z.string() + " has " + std::to_string(z.dim()));
  auto lx = labels_from_text(io::read_all(path_labels_x), path_labels_x.string());
  auto lz = labels_from_text(io::read_all(path_labels_z), path_labels_z.string());
  require(static_cast<Index>(lx.size()) == x.size(), ErrorKind::LabelError,
          path_labels_x.string() + ": " + std::to_string(lx.size()) + " labels for " + std::to_string(x.size()) +
              " samples");
  require(static_cast<Index>(lz.size()) == z.size(), ErrorKind::LabelError,
          path_labels_z.string() + ": " + std::to_string(lz.size()) + " labels for " + std::to_string(z.size()) +
              " samples");
  return CrossViewDataset(std::move(x), std::move(z), std::move(lx), std::move(lz));
}

enum class FeatureFormat { Csv, Binary };

inline void save_features(const CrossViewDataset& ds, const std::filesystem::path& path_x,
                          const std::filesystem::path& path_z, const std::filesystem::path& path_labels_x,
                          const std::filesystem::path& path_labels_z, FeatureFormat format = FeatureFormat::Csv) {
  auto encode = [&](const ViewMatrix& v) {
    return format == FeatureFormat::Csv ? features_to_csv(v) : features_to_binary(v);
  };
  io::write_atomic(path_x, encode(ds.x()));
  io::write_atomic(path_z, encode(ds.z()));
  io::write_atomic(path_labels_x, labels_to_text(ds.labels_x()));
  io::write_atomic(path_labels_z, labels_to_text(ds.labels_z()));
}

}  // namespace kxqda

#endif  // KXQDA_DATASET_IO_HPP
