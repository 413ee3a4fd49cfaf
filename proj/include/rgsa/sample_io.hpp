#pragma once

// Evaluated-sample files: comma-separated text with header `x1,...,xn,g` and
// one run per line, plus a JSON sidecar `<file>.meta.json` holding the
// measure tag and seed.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "rgsa/error.hpp"
#include "rgsa/estimators.hpp"

namespace rgsa {

/// Shortest-round-trip-safe decimal: 17 significant digits.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string sidecar_path(const std::string& path) { return path + ".meta.json"; }

inline void write_sample(const EvaluatedSample& s, const std::string& path) {
  s.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write sample file '" + path + "'");
  for (std::size_t i = 0; i < s.dim(); ++i) out << 'x' << i + 1 << ',';
  out << "g\n";
  for (std::size_t r = 0; r < s.size(); ++r) {
    for (std::size_t i = 0; i < s.dim(); ++i) out << format_double(s.inputs(r, i)) << ',';
    out << format_double(s.outputs[r]) << '\n';
  }
  std::ofstream meta(sidecar_path(path), std::ios::binary);
  if (!meta) throw DataError("cannot write sample sidecar for '" + path + "'");
  const nlohmann::ordered_json j{{"measure", s.measure_tag}, {"seed", s.seed}, {"n", s.dim()}, {"runs", s.size()}};
  meta << j.dump(2) << '\n';
  if (!out || !meta) throw DataError("write failure on sample file '" + path + "'");
}

namespace detail {

inline double parse_number(std::string_view field, std::size_t line) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) field.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
    throw DataError("sample file line " + std::to_string(line) + ": '" + std::string(field) + "' is not a number");
  }
  return v;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

/// Reads a sample file. The sidecar is optional; without it the tag is empty
/// and the seed 0.
inline EvaluatedSample read_sample(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open sample file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError("sample file '" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split_commas(line);
  if (header.size() < 2 || header.back() != "g") throw DataError("sample header must be x1,...,xn,g");
  const std::size_t n = header.size() - 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (header[i] != "x" + std::to_string(i + 1)) throw DataError("sample header must be x1,...,xn,g");
  }
  std::vector<double> values, outputs;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_commas(line);
    if (fields.size() != n + 1) {
      throw DataError("sample file line " + std::to_string(lineno) + ": expected " + std::to_string(n + 1) + " fields");
    }
    for (std::size_t i = 0; i < n; ++i) values.push_back(detail::parse_number(fields[i], lineno));
    outputs.push_back(detail::parse_number(fields[n], lineno));
  }
  EvaluatedSample s;
  s.inputs = Matrix(outputs.size(), n);
  s.inputs.values = std::move(values);
  s.outputs = std::move(outputs);
  if (std::filesystem::exists(sidecar_path(path))) {
    std::ifstream meta(sidecar_path(path));
    try {
      const auto j = nlohmann::json::parse(meta);
      s.measure_tag = j.value("measure", std::string{});
      s.seed = j.value("seed", std::uint64_t{0});
      if (j.contains("n") && j["n"].get<std::size_t>() != n) throw DataError("sample sidecar disagrees on n");
    } catch (const nlohmann::json::exception& e) {
      throw DataError("malformed sample sidecar for '" + path + "': " + e.what());
    }
  }
  s.validate();
  return s;
}

}  // namespace rgsa
