#pragma once

// Text formats: P-value files, grid specs, CSV cells and provenance preambles.

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "hcsparse/errors.hpp"
#include "hcsparse/models.hpp"

namespace hcsparse {

inline constexpr std::string_view kVersion = "hcsparse 0.1.0";

/// CSV number: 12 significant digits, '.' separator, locale independent.
inline std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.12g}", v);
}

/// Reads whitespace-separated decimal P-values. Every value must lie in (0, 1);
/// the first offending token is reported with its 1-based line and column.
inline PValueSample read_pvalues(std::istream& in) {
  PValueSample s;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
      if (pos >= line.size()) break;
      const std::size_t start = pos;
      while (pos < line.size() && !std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
      const std::string token = line.substr(start, pos - start);
      const std::size_t col = start + 1;

      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(token.c_str(), &end);
      if (end != token.c_str() + token.size() || errno == ERANGE || !std::isfinite(v)) {
        throw ParseError(fmt::format("line {}, column {}: cannot parse '{}' as a number", line_no,
                                     col, token),
                         line_no, col);
      }
      if (!(v > 0.0 && v < 1.0)) {
        throw ParseError(fmt::format("line {}, column {}: P-value {} is outside (0, 1)", line_no,
                                     col, token),
                         line_no, col);
      }
      s.pvalues.push_back(v);
    }
  }
  if (s.pvalues.empty()) throw ParseError("input contains no P-values", line_no, 0);
  return s;
}

inline PValueSample read_pvalues(std::string_view text) {
  std::istringstream in{std::string(text)};
  return read_pvalues(in);
}

/// One value per line with round-trip precision.
inline void write_pvalues(std::ostream& out, const PValueSample& s) {
  for (double v : s.pvalues) out << fmt::format("{:.17g}\n", v);
}

/// Parses `lo:hi:step` (or a single number). Points are lo + i step for
/// i = 0, 1, ...; hi is included when it is reached to within 1e-9 steps.
inline std::vector<double> parse_grid(std::string_view spec) {
  auto to_double = [&](std::string_view part) {
    const std::string s(part);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
      throw DomainError("malformed grid '" + std::string(spec) + "'");
    }
    return v;
  };
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= spec.size(); ++i) {
    if (i == spec.size() || spec[i] == ':') {
      parts.push_back(spec.substr(start, i - start));
      start = i + 1;
    }
  }
  if (parts.size() == 1) return {to_double(parts[0])};
  if (parts.size() != 3) throw DomainError("grid must be lo:hi:step, got '" + std::string(spec) + "'");
  const double lo = to_double(parts[0]);
  const double hi = to_double(parts[1]);
  const double step = to_double(parts[2]);
  if (!(step > 0.0) || hi < lo) throw DomainError("grid needs step > 0 and hi >= lo");
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = lo + static_cast<double>(i) * step;
  return out;
}

/// Provenance preamble for CSV outputs: '#'-prefixed lines carrying the tool
/// version, the subcommand, the seed and the echoed configuration.
inline void write_csv_preamble(std::ostream& out, std::string_view command, std::uint64_t seed,
                               std::string_view config) {
  out << "# " << kVersion << '\n';
  out << "# command: " << command << '\n';
  out << "# seed: " << seed << '\n';
  std::istringstream lines{std::string(config)};
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty()) out << "# config: " << line << '\n';
  }
}

inline void write_csv_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    out << cells[i];
  }
  out << '\n';
}

}  // namespace hcsparse
