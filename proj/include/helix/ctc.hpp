#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "helix/genome.hpp"
#include "helix/nn.hpp"
#include "helix/quant.hpp"

namespace helix::ctc {

using nn::ProbMatrix;
using LabelSequence = std::vector<CtcSymbol>;

/// Standard CTC collapse: merge adjacent repeats, then drop blanks.
inline Sequence collapse(std::span<const CtcSymbol> labels) {
  Sequence out;
  std::optional<CtcSymbol> prev;
  for (CtcSymbol s : labels) {
    if (!(prev && *prev == s) && !s.is_blank()) out.push_back(s.base());
    prev = s;
  }
  return out;
}

/// Sum over all alignments of d to p of the product of per-step probabilities,
/// by the forward recursion over the blank-interleaved label.
inline double ctc_prob(const Sequence& d, const ProbMatrix& p) {
  const std::size_t T = p.timesteps();
  if (T == 0) return d.empty() ? 1.0 : 0.0;
  const std::size_t S = 2 * d.size() + 1;
  auto label = [&](std::size_t s) {
    return s % 2 == 0 ? CtcSymbol::blank() : CtcSymbol(d[s / 2]);
  };
  std::vector<double> alpha(S, 0.0), next(S, 0.0);
  alpha[0] = p(0, CtcSymbol::blank());
  if (S > 1) alpha[1] = p(0, label(1));
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t s = 0; s < S; ++s) {
      double a = alpha[s];
      if (s >= 1) a += alpha[s - 1];
      if (s >= 2 && s % 2 == 1 && d[s / 2] != d[s / 2 - 1]) a += alpha[s - 2];
      next[s] = a * p(t, label(s));
    }
    std::swap(alpha, next);
  }
  return S > 1 ? alpha[S - 1] + alpha[S - 2] : alpha[S - 1];
}

inline double ctc_prob(std::string_view d, const ProbMatrix& p) { return ctc_prob(parse_sequence(d), p); }

// ---------------------------------------------------------------------------
// Beam search

struct BeamEntry {
  Sequence prefix;
  double prob_blank = 0.0;     // mass of alignments ending in blank
  double prob_nonblank = 0.0;  // mass of alignments ending in the last base
  double total() const { return prob_blank + prob_nonblank; }
};

struct DecodeResult {
  Read read;
  double probability = 0.0;
};

/// Higher total first; equal totals fall back to lexicographic prefix order.
inline bool beam_before(const BeamEntry& a, const BeamEntry& b) {
  if (a.total() != b.total()) return a.total() > b.total();
  return std::lexicographical_compare(a.prefix.begin(), a.prefix.end(), b.prefix.begin(), b.prefix.end());
}

/// Forms every product beam_mass[i] * symbol_prob[j] (row-major) exactly.
struct ExactProducts {
  std::vector<double> operator()(std::span<const double> masses, std::span<const double> probs) const {
    std::vector<double> out(masses.size() * probs.size());
    for (std::size_t i = 0; i < masses.size(); ++i)
      for (std::size_t j = 0; j < probs.size(); ++j) out[i * probs.size() + j] = masses[i] * probs[j];
    return out;
  }
};

/// Products formed on a crossbar: beam masses programmed as cell conductances,
/// symbol probabilities driven as word-line voltages. With `bit_width` > 0
/// both operand vectors pass through per-tensor quantization first.
struct CrossbarProducts {
  int bit_width = 0;

  std::vector<double> operator()(std::span<const double> masses, std::span<const double> probs) const {
    if (bit_width == 0) return ExactProducts{}(masses, probs);
    auto g = quant::fake_quantize(masses, bit_width);
    auto v = quant::fake_quantize(probs, bit_width);
    return ExactProducts{}(g, v);
  }
};

/// CTC prefix beam search keeping `width` prefixes per step. Prefixes that
/// collapse to the same read are merged by construction.
template <typename Products = ExactProducts>
DecodeResult beam_search(const ProbMatrix& p, std::size_t width = 10, const Products& products = {}) {
  if (width == 0) throw Error("beam_search: width must be at least 1");
  if (p.empty()) throw Error("beam_search: empty probability matrix");
  std::vector<BeamEntry> beams{{{}, 1.0, 0.0}};
  const std::size_t blank = CtcSymbol::kBlankIndex;
  std::vector<double> masses;
  for (std::size_t t = 0; t < p.timesteps(); ++t) {
    masses.clear();
    for (const auto& b : beams) {
      masses.push_back(b.prob_blank);
      masses.push_back(b.prob_nonblank);
    }
    const auto table = products(masses, p.row(t));
    auto prod = [&](std::size_t beam, bool nonblank, std::size_t sym) {
      return table[(2 * beam + (nonblank ? 1 : 0)) * nn::kSymbols + sym];
    };

    std::map<Sequence, BeamEntry> next;
    auto slot = [&](const Sequence& prefix) -> BeamEntry& {
      auto [it, inserted] = next.try_emplace(prefix);
      if (inserted) it->second.prefix = prefix;
      return it->second;
    };
    for (std::size_t i = 0; i < beams.size(); ++i) {
      const BeamEntry& b = beams[i];
      slot(b.prefix).prob_blank += prod(i, false, blank) + prod(i, true, blank);
      for (std::size_t c = 0; c < 4; ++c) {
        const Base base = static_cast<Base>(c);
        Sequence extended = b.prefix;
        extended.push_back(base);
        if (!b.prefix.empty() && b.prefix.back() == base) {
          slot(b.prefix).prob_nonblank += prod(i, true, c);
          slot(extended).prob_nonblank += prod(i, false, c);
        } else {
          slot(extended).prob_nonblank += prod(i, false, c) + prod(i, true, c);
        }
      }
    }
    beams.clear();
    for (auto& [_, e] : next) beams.push_back(std::move(e));
    std::sort(beams.begin(), beams.end(), beam_before);
    if (beams.size() > width) beams.resize(width);
  }
  return {Read(beams.front().prefix), beams.front().total()};
}

// ---------------------------------------------------------------------------
// One beam step mapped onto a crossbar.
//
// The k step-t candidates and k' step-(t+1) candidates give k*k' products.
// Product r = i*k' + j sits on diagonal cell (r, r): the cell conductance holds
// p_t[i], word-line r is driven with p_{t+1}[j], and bit-line r carries their
// product. Products whose two-symbol strings collapse to the same prefix are
// gathered onto adjacent bit-lines and summed by closing the transistors
// between those bit-lines.

struct SymbolProb {
  CtcSymbol symbol;
  double prob = 0.0;
};

struct MergedProduct {
  Sequence collapsed;
  double prob = 0.0;
};

struct BeamStepOutput {
  std::vector<double> products;       // row-major k x k'
  std::vector<MergedProduct> merged;  // empty when merge is off
};

inline Sequence collapse_pair(CtcSymbol a, CtcSymbol b) {
  const CtcSymbol pair[] = {a, b};
  return collapse(pair);
}

/// Reference beam step: products in (i, j) order, each merged group summed in
/// that same order. Groups are listed by first appearance.
inline BeamStepOutput software_beam_step(std::span<const SymbolProb> top_k,
                                         std::span<const SymbolProb> next, bool merge) {
  BeamStepOutput out;
  for (const auto& a : top_k)
    for (const auto& b : next) out.products.push_back(a.prob * b.prob);
  if (!merge) return out;
  std::size_t r = 0;
  for (const auto& a : top_k) {
    for (const auto& b : next) {
      Sequence key = collapse_pair(a.symbol, b.symbol);
      auto it = std::find_if(out.merged.begin(), out.merged.end(),
                             [&](const MergedProduct& m) { return m.collapsed == key; });
      if (it == out.merged.end()) out.merged.push_back({std::move(key), out.products[r]});
      else it->prob += out.products[r];
      ++r;
    }
  }
  return out;
}

struct CrossbarCtcConfig {
  std::size_t array_size = 128;
  int bit_width = 0;  // 0: ideal analog values
};

inline BeamStepOutput crossbar_beam_step(std::span<const SymbolProb> top_k, std::span<const SymbolProb> next,
                                         bool merge, const CrossbarCtcConfig& cfg = {}) {
  const std::size_t k = top_k.size(), kn = next.size();
  if (k * kn > cfg.array_size) throw Error("crossbar_beam_step: k x k' products exceed the array size");

  std::vector<double> conductance(k), wordline(kn);
  for (std::size_t i = 0; i < k; ++i) conductance[i] = top_k[i].prob;
  for (std::size_t j = 0; j < kn; ++j) wordline[j] = next[j].prob;
  if (cfg.bit_width > 0) {
    conductance = quant::fake_quantize(conductance, cfg.bit_width);
    wordline = quant::fake_quantize(wordline, cfg.bit_width);
  }

  // Diagonal cells, one per product: bit-line current = G * V.
  BeamStepOutput out;
  out.products.resize(k * kn);
  std::vector<Sequence> keys(k * kn);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < kn; ++j) {
      const std::size_t r = i * kn + j;
      out.products[r] = conductance[i] * wordline[j];
      keys[r] = collapse_pair(top_k[i].symbol, next[j].symbol);
    }
  }
  if (!merge) return out;

  // Bit-line order: groups contiguous, groups by first appearance, cells in
  // index order within a group.
  std::vector<std::size_t> order(k * kn);
  std::vector<std::size_t> group_of(k * kn);
  std::vector<Sequence> groups;
  for (std::size_t r = 0; r < keys.size(); ++r) {
    auto it = std::find(groups.begin(), groups.end(), keys[r]);
    group_of[r] = static_cast<std::size_t>(it - groups.begin());
    if (it == groups.end()) groups.push_back(keys[r]);
  }
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return group_of[a] < group_of[b]; });

  // Closed switches join each run of same-group bit-lines into one node.
  for (std::size_t pos = 0; pos < order.size();) {
    const std::size_t g = group_of[order[pos]];
    double current = 0.0;
    for (; pos < order.size() && group_of[order[pos]] == g; ++pos) current += out.products[order[pos]];
    out.merged.push_back({groups[g], current});
  }
  return out;
}

}  // namespace helix::ctc
