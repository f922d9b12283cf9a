#pragma once

#include <cctype>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "helix/genome.hpp"
#include "helix/nn.hpp"

namespace helix::io {

namespace detail {

inline std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::vector<double> parse_numbers(const std::string& line, std::size_t lineno) {
  std::vector<double> out;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) {
    cell = trim(cell);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(cell, &used);
    } catch (const std::exception&) {
      throw Error("line " + std::to_string(lineno) + ": '" + cell + "' is not a number");
    }
    if (used != cell.size()) throw Error("line " + std::to_string(lineno) + ": '" + cell + "' is not a number");
    out.push_back(v);
  }
  return out;
}

/// A header line is one whose first field is not a number.
inline bool is_header(const std::string& line) {
  const std::string first = trim(line.substr(0, line.find(',')));
  if (first.empty()) return false;
  try {
    std::size_t used = 0;
    std::stod(first, &used);
    return used != first.size();
  } catch (const std::exception&) {
    return true;
  }
}

}  // namespace detail

/// T rows of 5 comma-separated probabilities (A,C,G,T,blank). An optional
/// header line is skipped.
inline nn::ProbMatrix read_prob_csv(std::istream& is) {
  std::vector<double> values;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (lineno == 1 && detail::is_header(line)) continue;
    const auto row = detail::parse_numbers(line, lineno);
    if (row.size() != nn::kSymbols) throw Error("line " + std::to_string(lineno) + ": expected 5 columns");
    values.insert(values.end(), row.begin(), row.end());
  }
  nn::ProbMatrix p(values.size() / nn::kSymbols);
  for (std::size_t t = 0; t < p.timesteps(); ++t)
    for (std::size_t s = 0; s < nn::kSymbols; ++s) p(t, s) = values[t * nn::kSymbols + s];
  return p;
}

inline void write_prob_csv(std::ostream& os, const nn::ProbMatrix& p) {
  os << "A,C,G,T,blank\n";
  os.precision(17);
  for (std::size_t t = 0; t < p.timesteps(); ++t) {
    for (std::size_t s = 0; s < nn::kSymbols; ++s) os << (s ? "," : "") << p(t, s);
    os << '\n';
  }
}

/// Newline-delimited ACGT reads, blank lines ignored. Offsets are the line
/// order; alignment recovers the real ones.
inline std::vector<Read> read_reads(std::istream& is) {
  std::vector<Read> reads;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    try {
      reads.emplace_back(std::string_view(line));
    } catch (const Error& e) {
      throw Error("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return reads;
}

/// Raw signal: numbers separated by commas and/or newlines.
inline std::vector<double> read_signal(std::istream& is) {
  std::vector<double> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (lineno == 1 && detail::is_header(line)) continue;
    const auto row = detail::parse_numbers(line, lineno);
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

}  // namespace helix::io
