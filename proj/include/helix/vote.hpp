#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "helix/genome.hpp"

namespace helix::vote {

struct MatchResult {
  std::size_t length = 0;
  std::size_t pos_a = 0;
  std::size_t pos_b = 0;
};

/// Longest common substring of a and b. Among equally long matches the one
/// with the smallest (pos_a, pos_b) wins; length 0 reports (0, 0).
inline MatchResult longest_match(const Sequence& a, const Sequence& b) {
  MatchResult best;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : 0;
      const std::size_t len = cur[j];
      if (len == 0) continue;
      const MatchResult cand{len, i - len, j - len};
      if (len > best.length ||
          (len == best.length && std::pair(cand.pos_a, cand.pos_b) < std::pair(best.pos_a, best.pos_b)))
        best = cand;
    }
    std::swap(prev, cur);
  }
  return best;
}

inline MatchResult longest_match(const Read& a, const Read& b) { return longest_match(a.symbols, b.symbols); }

/// Longest match usable to chain b after a: b may not start before a, so the
/// match must satisfy pos_a >= pos_b.
inline MatchResult chain_match(const Sequence& a, const Sequence& b) {
  MatchResult best;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : 0;
      // pos_a >= pos_b reduces to i >= j for every run length ending here.
      if (i < j) continue;
      const std::size_t len = cur[j];
      if (len == 0) continue;
      const MatchResult cand{len, i - len, j - len};
      if (len > best.length ||
          (len == best.length && std::pair(cand.pos_a, cand.pos_b) < std::pair(best.pos_a, best.pos_b)))
        best = cand;
    }
    std::swap(prev, cur);
  }
  return best;
}

struct ConsensusRead {
  Sequence consensus;
  std::vector<BaseTally> tallies;   // per consensus column
  std::vector<std::size_t> offsets;  // column where each input read starts
  std::vector<std::size_t> gaps;     // reads placed by concatenation (no shared substring)

  std::string str() const { return to_string(consensus); }
};

/// Chains reads in their given order: each read is placed against its
/// predecessor by their longest chain-compatible match, or appended after it
/// when they share nothing. Each column is then decided by plurality vote.
inline ConsensusRead align_and_vote(const std::vector<Read>& reads) {
  ConsensusRead out;
  if (reads.empty()) return out;
  out.offsets.push_back(0);
  for (std::size_t r = 1; r < reads.size(); ++r) {
    const Read& a = reads[r - 1];
    const Read& b = reads[r];
    const MatchResult m = chain_match(a.symbols, b.symbols);
    if (m.length == 0) {
      out.offsets.push_back(out.offsets.back() + a.size());
      out.gaps.push_back(r);
    } else {
      out.offsets.push_back(out.offsets.back() + m.pos_a - m.pos_b);
    }
  }
  std::size_t width = 0;
  for (std::size_t r = 0; r < reads.size(); ++r) width = std::max(width, out.offsets[r] + reads[r].size());
  out.tallies.assign(width, BaseTally{});
  for (std::size_t r = 0; r < reads.size(); ++r)
    for (std::size_t i = 0; i < reads[r].size(); ++i)
      ++out.tallies[out.offsets[r] + i][static_cast<std::size_t>(reads[r].symbols[i])];
  for (const BaseTally& t : out.tallies) {
    if (auto b = majority(t)) out.consensus.push_back(*b);
  }
  return out;
}

inline nlohmann::json to_json(const ConsensusRead& c) {
  nlohmann::json j;
  j["consensus"] = c.str();
  auto tallies = nlohmann::json::array();
  for (const auto& t : c.tallies) tallies.push_back({{"A", t[0]}, {"C", t[1]}, {"G", t[2]}, {"T", t[3]}});
  j["tallies"] = std::move(tallies);
  j["offsets"] = c.offsets;
  j["gaps"] = c.gaps;
  return j;
}

// ---------------------------------------------------------------------------
// Gapped pileup on a backbone read.

/// What an overlap alignment places on each backbone column.
struct PileupColumn {
  enum class Kind : std::uint8_t { uncovered, base, gap } kind = Kind::uncovered;
  Base base = Base::A;
  std::optional<Base> inserted_before;  // first base the other read inserts before this column
};

/// Overlap alignment of `other` against `backbone` (end gaps free; match +2,
/// mismatch -1, gap -2, so a long overlap with a substitution beats a short
/// exact one). Ties in the traceback prefer the diagonal.
inline std::vector<PileupColumn> overlap_align(const Sequence& backbone, const Sequence& other) {
  const std::size_t n = backbone.size(), m = other.size();
  std::vector<PileupColumn> cols(n);
  if (n == 0 || m == 0) return cols;
  std::vector<int> score((n + 1) * (m + 1), 0);
  auto at = [&](std::size_t i, std::size_t j) -> int& { return score[i * (m + 1) + j]; };
  constexpr int kGap = -2;
  auto sub = [&](std::size_t i, std::size_t j) { return backbone[i - 1] == other[j - 1] ? 2 : -1; };
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      at(i, j) = std::max({at(i - 1, j - 1) + sub(i, j), at(i - 1, j) + kGap, at(i, j - 1) + kGap});
  // Best cell on the last row or column.
  std::size_t bi = n, bj = m;
  int best = at(n, m);
  for (std::size_t j = 0; j <= m; ++j)
    if (at(n, j) > best) best = at(n, j), bi = n, bj = j;
  for (std::size_t i = 0; i <= n; ++i)
    if (at(i, m) > best) best = at(i, m), bi = i, bj = m;

  std::size_t i = bi, j = bj;
  while (i > 0 && j > 0) {
    if (at(i, j) == at(i - 1, j - 1) + sub(i, j)) {
      cols[i - 1].kind = PileupColumn::Kind::base;
      cols[i - 1].base = other[j - 1];
      --i, --j;
    } else if (at(i, j) == at(i - 1, j) + kGap) {
      cols[i - 1].kind = PileupColumn::Kind::gap;
      --i;
    } else {
      // other[j-1] sits between backbone columns i-1 and i
      if (i < n) cols[i].inserted_before = other[j - 1];
      --j;
    }
  }
  return cols;
}

/// Consensus over the backbone's span: every other read is overlap-aligned to
/// the backbone and each column takes the plurality of base / gap votes among
/// the reads covering it, the backbone counting as one. Ties keep the
/// backbone. An insertion is kept when a strict majority of covering reads
/// carry one.
inline Sequence pileup_consensus(const Sequence& backbone, const std::vector<Sequence>& others) {
  std::vector<std::vector<PileupColumn>> aligned;
  for (const auto& o : others) aligned.push_back(overlap_align(backbone, o));
  Sequence out;
  for (std::size_t c = 0; c < backbone.size(); ++c) {
    BaseTally inserted{};
    std::size_t covering = 1, insertions = 0;
    std::array<std::size_t, 5> votes{};  // A, C, G, T, gap
    ++votes[static_cast<std::size_t>(backbone[c])];
    for (const auto& cols : aligned) {
      const PileupColumn& pc = cols[c];
      if (pc.kind == PileupColumn::Kind::uncovered) continue;
      ++covering;
      ++votes[pc.kind == PileupColumn::Kind::gap ? 4 : static_cast<std::size_t>(pc.base)];
      if (pc.inserted_before) {
        ++insertions;
        ++inserted[static_cast<std::size_t>(*pc.inserted_before)];
      }
    }
    if (2 * insertions > covering) out.push_back(*majority(inserted));
    std::size_t winner = static_cast<std::size_t>(backbone[c]);
    for (std::size_t k = 0; k < votes.size(); ++k)
      if (votes[k] > votes[winner]) winner = k;
    if (winner < 4) out.push_back(static_cast<Base>(winner));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Binary comparator array.
//
// Each stored symbol takes 6 cells: its 3-bit code, one complementary cell
// pair per bit (bit 0 -> LRS,HRS; bit 1 -> HRS,LRS). A query bit drives the
// pair's two read bit-lines with (low, high) for 0 and (high, low) for 1. With
// G_LRS = 1, G_HRS = 0, V_high = 1, V_low = 0 a pair conducts one unit exactly
// when stored and query bits differ, so a row's source-line current counts
// mismatching bits and zero current means a match. Columns beyond the query
// are left floating. Unwritten symbol slots hold code 000, which matches no
// valid symbol.

struct ComparatorConfig {
  std::size_t rows = 256;
  std::size_t cols = 256;
  double per_cell_error = 0.0;  // probability a cell read returns the opposite state
};

inline constexpr std::size_t kCellsPerSymbol = 6;

class ComparatorArray {
 public:
  explicit ComparatorArray(ComparatorConfig cfg = {}) : cfg_(cfg) {
    if (cfg_.rows == 0 || cfg_.cols < kCellsPerSymbol) throw Error("ComparatorArray: bad geometry");
    if (!(cfg_.per_cell_error >= 0.0 && cfg_.per_cell_error <= 1.0))
      throw Error("ComparatorArray: per_cell_error must be a probability");
    // cell state: true = LRS
    cells_.assign(cfg_.rows * cfg_.cols, false);
    for (std::size_t r = 0; r < cfg_.rows; ++r)
      for (std::size_t s = 0; s < symbols_per_row(); ++s) write_code(r, s, 0);
  }

  const ComparatorConfig& config() const { return cfg_; }
  std::size_t symbols_per_row() const { return cfg_.cols / kCellsPerSymbol; }
  std::size_t stored_rows() const { return stored_; }

  /// Writes `fragment` into the next free row.
  std::size_t store(const Sequence& fragment) {
    if (stored_ >= cfg_.rows) throw Error("ComparatorArray: array full");
    if (fragment.size() > symbols_per_row()) throw Error("ComparatorArray: fragment wider than a row");
    for (std::size_t s = 0; s < fragment.size(); ++s) write_code(stored_, s, encode3(fragment[s]));
    return stored_++;
  }

  bool cell_lrs(std::size_t row, std::size_t col) const { return cells_[row * cfg_.cols + col]; }

  /// Source-line current of every stored row, in units of one LRS cell at
  /// V_high, with `query` applied starting at symbol slot `offset`.
  template <typename Rng>
  std::vector<std::uint32_t> sl_currents(const Sequence& query, std::size_t offset, Rng& rng) const {
    check_query(query, offset);
    std::vector<std::uint32_t> out(stored_, 0);
    const std::size_t first = offset * kCellsPerSymbol;
    const std::size_t ncells = query.size() * kCellsPerSymbol;
    std::vector<bool> high(ncells);
    for (std::size_t s = 0; s < query.size(); ++s) {
      const std::uint8_t code = encode3(query[s]);
      for (std::size_t b = 0; b < 3; ++b) {
        const bool bit = (code >> (2 - b)) & 1u;
        high[s * 6 + 2 * b] = bit;       // bit 1 drives (high, low)
        high[s * 6 + 2 * b + 1] = !bit;  // bit 0 drives (low, high)
      }
    }
    FlipSampler<Rng> flips(cfg_.per_cell_error, rng);
    for (std::size_t r = 0; r < stored_; ++r) {
      std::uint32_t current = 0;
      for (std::size_t c = 0; c < ncells; ++c) {
        bool lrs = cell_lrs(r, first + c);
        if (flips.next()) lrs = !lrs;
        if (lrs && high[c]) ++current;
      }
      out[r] = current;
    }
    return out;
  }

  /// Per stored row: true when its symbols at `offset` equal `query`.
  template <typename Rng>
  std::vector<bool> compare(const Sequence& query, std::size_t offset, Rng& rng) const {
    auto currents = sl_currents(query, offset, rng);
    std::vector<bool> out(currents.size());
    for (std::size_t r = 0; r < currents.size(); ++r) out[r] = currents[r] == 0;
    return out;
  }

  std::vector<bool> compare(const Sequence& query, std::size_t offset = 0) const {
    if (cfg_.per_cell_error > 0.0) throw Error("ComparatorArray: noisy compare needs a random source");
    std::mt19937_64 unused(0);
    return compare(query, offset, unused);
  }

 private:
  // Yields one Bernoulli(p) flag per cell read, drawing geometric gaps between
  // flips instead of one variate per cell.
  template <typename Rng>
  class FlipSampler {
   public:
    FlipSampler(double p, Rng& rng) : p_(p), rng_(rng) { draw(); }
    bool next() {
      if (p_ <= 0.0) return false;
      if (gap_ == 0) {
        draw();
        return true;
      }
      --gap_;
      return false;
    }

   private:
    void draw() {
      if (p_ <= 0.0) return;
      if (p_ >= 1.0) {
        gap_ = 0;
        return;
      }
      std::geometric_distribution<std::uint64_t> g(p_);
      gap_ = g(rng_);
    }
    double p_;
    Rng& rng_;
    std::uint64_t gap_ = 0;
  };

  void write_code(std::size_t row, std::size_t slot, std::uint8_t code) {
    for (std::size_t b = 0; b < 3; ++b) {
      const bool bit = (code >> (2 - b)) & 1u;
      const std::size_t c = row * cfg_.cols + slot * kCellsPerSymbol + 2 * b;
      cells_[c] = !bit;     // bit 0: LRS first
      cells_[c + 1] = bit;  // bit 1: LRS second
    }
  }

  void check_query(const Sequence& query, std::size_t offset) const {
    if (offset + query.size() > symbols_per_row()) throw Error("ComparatorArray: query wider than the array");
  }

  ComparatorConfig cfg_;
  std::vector<bool> cells_;
  std::size_t stored_ = 0;
};

/// Longest match found on a comparator array: every suffix of `a` is stored as
/// a row, then substrings of `b` are applied longest first. Matches the
/// software longest_match (including tie order) when the array is error free.
template <typename Rng>
MatchResult comparator_longest_match(const Sequence& a, const Sequence& b, const ComparatorConfig& cfg, Rng& rng) {
  ComparatorArray array(cfg);
  if (a.size() > cfg.rows) throw Error("comparator_longest_match: read has more suffixes than rows");
  for (std::size_t i = 0; i < a.size(); ++i) array.store(Sequence(a.begin() + static_cast<std::ptrdiff_t>(i), a.end()));
  for (std::size_t len = std::min(a.size(), b.size()); len > 0; --len) {
    std::optional<MatchResult> best;
    for (std::size_t j = 0; j + len <= b.size(); ++j) {
      Sequence q(b.begin() + static_cast<std::ptrdiff_t>(j), b.begin() + static_cast<std::ptrdiff_t>(j + len));
      auto hits = array.compare(q, 0, rng);
      for (std::size_t i = 0; i < hits.size(); ++i) {
        if (!hits[i]) continue;
        MatchResult m{len, i, j};
        if (!best || std::pair(m.pos_a, m.pos_b) < std::pair(best->pos_a, best->pos_b)) best = m;
        break;
      }
    }
    if (best) return *best;
  }
  return {};
}

// ---------------------------------------------------------------------------
// Voting statistics

/// P(at least ceil(c/2) of c reads are wrong) for iid per-read error p.
inline double binomial_vote_error(double p, std::size_t coverage) {
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  const std::size_t need = (coverage + 1) / 2;
  double total = 0.0;
  for (std::size_t k = need; k <= coverage; ++k) {
    const double logc = std::lgamma(double(coverage) + 1) - std::lgamma(double(k) + 1) -
                        std::lgamma(double(coverage - k) + 1);
    total += std::exp(logc + double(k) * std::log(p) + double(coverage - k) * std::log1p(-p));
  }
  return total;
}

}  // namespace helix::vote
