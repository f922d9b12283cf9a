#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace helix {

/// Raised for malformed inputs anywhere in the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Base : std::uint8_t { A = 0, C = 1, G = 2, T = 3 };

inline constexpr std::array<Base, 4> kBases{Base::A, Base::C, Base::G, Base::T};

/// A CTC output symbol: a base or the blank. Indexes 0..3 are A,C,G,T, 4 is blank.
class CtcSymbol {
 public:
  static constexpr std::size_t kCount = 5;
  static constexpr std::uint8_t kBlankIndex = 4;

  constexpr CtcSymbol() = default;
  constexpr CtcSymbol(Base b) : index_(static_cast<std::uint8_t>(b)) {}  // NOLINT

  static constexpr CtcSymbol blank() {
    CtcSymbol s;
    s.index_ = kBlankIndex;
    return s;
  }
  static constexpr CtcSymbol from_index(std::size_t i) {
    if (i >= kCount) throw Error("CtcSymbol index out of range");
    CtcSymbol s;
    s.index_ = static_cast<std::uint8_t>(i);
    return s;
  }

  constexpr bool is_blank() const { return index_ == kBlankIndex; }
  constexpr std::size_t index() const { return index_; }
  constexpr Base base() const {
    if (is_blank()) throw Error("blank has no base value");
    return static_cast<Base>(index_);
  }

  friend constexpr bool operator==(CtcSymbol, CtcSymbol) = default;

 private:
  std::uint8_t index_ = kBlankIndex;
};

constexpr char to_char(Base b) {
  constexpr char table[] = {'A', 'C', 'G', 'T'};
  return table[static_cast<std::size_t>(b)];
}

constexpr char to_char(CtcSymbol s) { return s.is_blank() ? '-' : to_char(s.base()); }

inline Base base_from_char(char c) {
  switch (c) {
    case 'A': case 'a': return Base::A;
    case 'C': case 'c': return Base::C;
    case 'G': case 'g': return Base::G;
    case 'T': case 't': return Base::T;
    default: throw Error(std::string("not a DNA base: '") + c + "'");
  }
}

using Sequence = std::vector<Base>;

inline Sequence parse_sequence(std::string_view text) {
  Sequence out;
  out.reserve(text.size());
  for (char c : text) out.push_back(base_from_char(c));
  return out;
}

inline std::string to_string(const Sequence& seq) {
  std::string s;
  s.reserve(seq.size());
  for (Base b : seq) s.push_back(to_char(b));
  return s;
}

/// A base-called fragment. `origin_offset` is the start index of the signal
/// window (or, once aligned, the truth coordinate) the read came from.
struct Read {
  Sequence symbols;
  std::size_t origin_offset = 0;

  Read() = default;
  Read(Sequence s, std::size_t offset = 0) : symbols(std::move(s)), origin_offset(offset) {}
  Read(std::string_view text, std::size_t offset = 0)
      : symbols(parse_sequence(text)), origin_offset(offset) {}

  std::size_t size() const { return symbols.size(); }
  bool empty() const { return symbols.empty(); }
  std::string str() const { return to_string(symbols); }

  friend bool operator==(const Read&, const Read&) = default;
};

// ---------------------------------------------------------------------------
// 3-bit symbol code used by the comparator array.
// A=001 C=010 G=011 T=100 blank=101.

inline constexpr std::uint8_t encode3(CtcSymbol s) {
  constexpr std::uint8_t table[] = {0b001, 0b010, 0b011, 0b100, 0b101};
  return table[s.index()];
}

inline constexpr std::uint8_t encode3(Base b) { return encode3(CtcSymbol(b)); }

inline CtcSymbol decode3(std::uint8_t code) {
  if (code < 0b001 || code > 0b101) throw Error("invalid 3-bit symbol code");
  return CtcSymbol::from_index(code - 1u);
}

// ---------------------------------------------------------------------------

/// Levenshtein distance with unit costs, two-row DP.
template <typename T>
std::size_t edit_distance(const std::vector<T>& a, const std::vector<T>& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline std::size_t edit_distance(std::string_view a, std::string_view b) {
  return edit_distance(parse_sequence(a), parse_sequence(b));
}

/// 1 - edit_distance / |truth|, floored at 0.
inline double read_accuracy(const Sequence& called, const Sequence& truth) {
  if (truth.empty()) return called.empty() ? 1.0 : 0.0;
  double d = static_cast<double>(edit_distance(called, truth));
  return std::max(0.0, 1.0 - d / static_cast<double>(truth.size()));
}

// ---------------------------------------------------------------------------
// Majority vote helpers shared by error classification and read voting.

using BaseTally = std::array<std::size_t, 4>;

/// Plurality winner; ties go to the smallest base (A < C < G < T).
inline std::optional<Base> majority(const BaseTally& tally) {
  std::size_t best = 0;
  std::optional<Base> winner;
  for (std::size_t k = 0; k < 4; ++k) {
    if (tally[k] > best) {
      best = tally[k];
      winner = static_cast<Base>(k);
    }
  }
  return winner;
}

enum class PositionClass : std::uint8_t { correct, random, systematic };

inline const char* to_string(PositionClass c) {
  switch (c) {
    case PositionClass::correct: return "correct";
    case PositionClass::random: return "random";
    case PositionClass::systematic: return "systematic";
  }
  return "?";
}

struct ErrorReport {
  std::size_t random_count = 0;
  std::size_t systematic_count = 0;
  std::vector<PositionClass> per_position;
  std::vector<BaseTally> tallies;

  std::size_t error_count() const { return random_count + systematic_count; }
};

/// Classifies every position of `truth` against the reads covering it.
///
/// Each read's `origin_offset` is its start coordinate in `truth`. A position is
/// systematic when the vote disagrees with truth, random when some read
/// disagrees but the vote is right. Positions no read covers are reported as
/// systematic (voting cannot recover them).
inline ErrorReport classify_errors(const std::vector<Read>& reads, const Sequence& truth) {
  if (reads.empty()) throw Error("classify_errors: empty read set");
  ErrorReport report;
  report.tallies.assign(truth.size(), BaseTally{});
  for (const Read& r : reads) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      std::size_t pos = r.origin_offset + i;
      if (pos >= truth.size()) break;
      ++report.tallies[pos][static_cast<std::size_t>(r.symbols[i])];
    }
  }
  report.per_position.reserve(truth.size());
  for (std::size_t pos = 0; pos < truth.size(); ++pos) {
    const BaseTally& t = report.tallies[pos];
    auto vote = majority(t);
    std::size_t agree = t[static_cast<std::size_t>(truth[pos])];
    std::size_t total = t[0] + t[1] + t[2] + t[3];
    PositionClass c = PositionClass::correct;
    if (!vote || *vote != truth[pos]) {
      c = PositionClass::systematic;
      ++report.systematic_count;
    } else if (agree != total) {
      c = PositionClass::random;
      ++report.random_count;
    }
    report.per_position.push_back(c);
  }
  return report;
}

inline nlohmann::json to_json(const ErrorReport& r) {
  nlohmann::json j;
  j["random_count"] = r.random_count;
  j["systematic_count"] = r.systematic_count;
  auto positions = nlohmann::json::array();
  for (PositionClass c : r.per_position) positions.push_back(to_string(c));
  j["per_position"] = std::move(positions);
  return j;
}

}  // namespace helix
