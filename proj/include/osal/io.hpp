#pragma once

// Feature and label file formats.
//
// OSF1 binary (little-endian):
//   "OSF1" | u32 version = 1 | u64 n | u64 d | n*d IEEE-754 float32, row-major
// with an optional sidecar "<path>.ids" (or "<stem>.ids") holding exactly n newline-separated ids.
//
// CSV: header "id,f0,f1,...,f{d-1}", then one row per sample.
//
// Label files are CSV with header "id,label".

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

#include "osal/error.hpp"
#include "osal/features.hpp"

namespace osal {

static_assert(std::endian::native == std::endian::little, "OSF1 I/O assumes a little-endian host");

enum class FeatureFormat { osf1, csv };

inline constexpr char kOsf1Magic[4] = {'O', 'S', 'F', '1'};
inline constexpr std::uint32_t kOsf1Version = 1;

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

// Splits text into lines, dropping a trailing '\r' and a final empty line.
inline std::vector<std::string_view> lines(std::string_view text) {
  auto out = split(text, '\n');
  if (!out.empty() && out.back().empty()) out.pop_back();
  for (auto& l : out)
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

inline std::string location(const std::filesystem::path& path, std::size_t line, std::size_t column) {
  return path.string() + ":" + std::to_string(line) + ": column " + std::to_string(column);
}

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T get(std::string_view bytes, std::size_t offset) {
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  return value;
}

// Shortest representation that parses back to the same float.
inline void append_float(std::string& out, float v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace detail

inline std::filesystem::path ids_sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".ids");
}

inline FeatureFormat format_from_name(std::string_view name) {
  if (name == "osf1" || name == "binary") return FeatureFormat::osf1;
  if (name == "csv") return FeatureFormat::csv;
  throw invalid_argument("unknown feature format '" + std::string(name) + "'");
}

// Guesses the format from the extension: ".csv" is CSV, anything else OSF1.
inline FeatureFormat format_from_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? FeatureFormat::csv : FeatureFormat::osf1;
}

inline std::vector<std::string> read_ids(const std::filesystem::path& path, std::size_t expected) {
  const std::string text = detail::read_file(path);
  std::vector<std::string> ids;
  for (auto line : detail::lines(text)) ids.emplace_back(line);
  if (ids.size() != expected)
    throw data_error(path.string() + ": expected " + std::to_string(expected) + " ids, found " +
                     std::to_string(ids.size()));
  return ids;
}

inline FeatureMatrix parse_osf1(std::string_view bytes, const std::filesystem::path& origin,
                                std::vector<std::string> ids = {}) {
  constexpr std::size_t header = 4 + 4 + 8 + 8;
  const std::string where = origin.string();
  if (bytes.size() < header) throw data_error(where + ": truncated OSF1 header");
  if (std::memcmp(bytes.data(), kOsf1Magic, 4) != 0) throw data_error(where + ": bad magic, expected 'OSF1'");
  const auto version = detail::get<std::uint32_t>(bytes, 4);
  if (version != kOsf1Version) throw data_error(where + ": unsupported OSF1 version " + std::to_string(version));
  const auto n = detail::get<std::uint64_t>(bytes, 8);
  const auto d = detail::get<std::uint64_t>(bytes, 16);
  if (n < 2) throw data_error(where + ": header declares n=" + std::to_string(n) + ", need at least 2");
  if (d < 1) throw data_error(where + ": header declares d=0");
  if (d > (bytes.size() - header) / sizeof(float) / n || bytes.size() - header != n * d * sizeof(float))
    throw data_error(where + ": payload is " + std::to_string(bytes.size() - header) + " bytes, header (n=" +
                     std::to_string(n) + ", d=" + std::to_string(d) + ") requires " +
                     std::to_string(n * d * sizeof(float)));
  std::vector<float> values(n * d);
  std::memcpy(values.data(), bytes.data() + header, values.size() * sizeof(float));
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]))
      throw data_error(where + ": non-finite value at row " + std::to_string(i / d) + ", column " +
                       std::to_string(i % d));
  }
  return FeatureMatrix(n, d, std::move(values), std::move(ids));
}

inline FeatureMatrix parse_csv(std::string_view text, const std::filesystem::path& origin) {
  const auto rows = detail::lines(text);
  if (rows.empty()) throw data_error(origin.string() + ": empty CSV file");
  const auto header = detail::split(rows[0], ',');
  if (header.size() < 2 || detail::trim(header[0]) != "id")
    throw data_error(detail::location(origin, 1, 1) + ": header must be 'id,f0,...'");
  const std::size_t d = header.size() - 1;
  for (std::size_t j = 0; j < d; ++j) {
    if (detail::trim(header[j + 1]) != "f" + std::to_string(j))
      throw data_error(detail::location(origin, 1, j + 2) + ": expected column name 'f" + std::to_string(j) + "'");
  }

  std::vector<float> values;
  std::vector<std::string> ids;
  values.reserve((rows.size() - 1) * d);
  ids.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto cells = detail::split(rows[r], ',');
    if (cells.size() != d + 1)
      throw data_error(detail::location(origin, r + 1, 1) + ": expected " + std::to_string(d + 1) + " fields, found " +
                       std::to_string(cells.size()));
    ids.emplace_back(detail::trim(cells[0]));
    for (std::size_t j = 0; j < d; ++j) {
      const auto cell = detail::trim(cells[j + 1]);
      float v = 0.0f;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
        throw data_error(detail::location(origin, r + 1, j + 2) + ": cannot parse '" + std::string(cell) +
                         "' as a number (sample row " + std::to_string(r - 1) + ", feature " + std::to_string(j) + ")");
      if (!std::isfinite(v))
        throw data_error(detail::location(origin, r + 1, j + 2) + ": non-finite value at row " + std::to_string(r - 1) +
                         ", column " + std::to_string(j));
      values.push_back(v);
    }
  }
  const std::size_t n = ids.size();
  if (n < 2) throw data_error(origin.string() + ": need at least 2 samples, found " + std::to_string(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (ids[i].empty()) ids[i] = "sample_" + std::to_string(i);
  }
  try {
    return FeatureMatrix(n, d, std::move(values), std::move(ids));
  } catch (const data_error& e) {
    throw data_error(origin.string() + ": " + e.what());
  }
}

inline FeatureMatrix load_features(const std::filesystem::path& path, FeatureFormat format) {
  const std::string bytes = detail::read_file(path);
  if (format == FeatureFormat::csv) return parse_csv(bytes, path);

  std::vector<std::string> ids;
  auto sidecar = ids_sidecar_path(path);
  if (!std::filesystem::exists(sidecar)) sidecar = std::filesystem::path(path).replace_extension(".ids");
  if (std::filesystem::exists(sidecar)) {
    if (bytes.size() < 24) throw data_error(path.string() + ": truncated OSF1 header");
    ids = read_ids(sidecar, detail::get<std::uint64_t>(bytes, 8));
  }
  try {
    return parse_osf1(bytes, path, std::move(ids));
  } catch (const data_error& e) {
    const std::string what = e.what();
    if (what.rfind(path.string(), 0) == 0) throw;
    throw data_error(path.string() + ": " + what);
  }
}

inline FeatureMatrix load_features(const std::filesystem::path& path) {
  return load_features(path, format_from_path(path));
}

inline std::string encode_osf1(const FeatureMatrix& f) {
  std::string out;
  out.reserve(24 + f.values().size() * sizeof(float));
  out.append(kOsf1Magic, 4);
  detail::put<std::uint32_t>(out, kOsf1Version);
  detail::put<std::uint64_t>(out, f.n());
  detail::put<std::uint64_t>(out, f.d());
  out.append(reinterpret_cast<const char*>(f.values().data()), f.values().size() * sizeof(float));
  return out;
}

inline std::string encode_csv(const FeatureMatrix& f) {
  std::string out = "id";
  for (std::size_t j = 0; j < f.d(); ++j) out += ",f" + std::to_string(j);
  out += '\n';
  for (std::size_t i = 0; i < f.n(); ++i) {
    out += f.id(i);
    for (float v : f.row(i)) {
      out += ',';
      detail::append_float(out, v);
    }
    out += '\n';
  }
  return out;
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw error("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw error("failed writing '" + path.string() + "'");
}

// Writes the matrix; OSF1 output also gets an ids sidecar.
inline void save_features(const FeatureMatrix& f, const std::filesystem::path& path, FeatureFormat format) {
  if (format == FeatureFormat::csv) {
    write_file(path, encode_csv(f));
    return;
  }
  write_file(path, encode_osf1(f));
  std::string ids;
  for (const auto& id : f.ids()) ids += id + '\n';
  write_file(ids_sidecar_path(path), ids);
}

// Labels keyed by sample id, in file order.
struct LabelFile {
  std::vector<std::string> ids;
  std::vector<int> labels;
};

inline LabelFile parse_labels(std::string_view text, const std::filesystem::path& origin) {
  const auto rows = detail::lines(text);
  if (rows.empty()) throw data_error(origin.string() + ": empty label file");
  const auto header = detail::split(rows[0], ',');
  if (header.size() != 2 || detail::trim(header[0]) != "id" || detail::trim(header[1]) != "label")
    throw data_error(detail::location(origin, 1, 1) + ": header must be 'id,label'");
  LabelFile out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto cells = detail::split(rows[r], ',');
    if (cells.size() != 2)
      throw data_error(detail::location(origin, r + 1, 1) + ": expected 2 fields, found " + std::to_string(cells.size()));
    const auto cell = detail::trim(cells[1]);
    int label = 0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), label);
    if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
      throw data_error(detail::location(origin, r + 1, 2) + ": label '" + std::string(cell) + "' is not an integer");
    out.ids.emplace_back(detail::trim(cells[0]));
    out.labels.push_back(label);
  }
  return out;
}

inline LabelFile load_labels(const std::filesystem::path& path) {
  return parse_labels(detail::read_file(path), path);
}

inline std::string encode_labels(const std::vector<std::string>& ids, std::span<const int> labels) {
  if (ids.size() != labels.size()) throw invalid_argument("ids and labels differ in length");
  std::string out = "id,label\n";
  for (std::size_t i = 0; i < ids.size(); ++i) out += ids[i] + "," + std::to_string(labels[i]) + "\n";
  return out;
}

}  // namespace osal
