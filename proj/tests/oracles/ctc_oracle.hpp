#pragma once

#include <cmath>
#include <vector>

#include "helix/ctc.hpp"

namespace oracle {

using helix::CtcSymbol;
using helix::Sequence;

/// Collapse rule applied to a full label string: drop repeats, then blanks.
inline Sequence collapse_labels(const std::vector<CtcSymbol>& labels) {
  Sequence out;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    if (t > 0 && labels[t] == labels[t - 1]) continue;
    if (!labels[t].is_blank()) out.push_back(labels[t].base());
  }
  return out;
}

/// Every label string of length L (5^L of them) that collapses to d.
inline std::vector<std::vector<CtcSymbol>> enumerate_alignments(const Sequence& d, std::size_t L) {
  if (L > 8) throw helix::Error("enumerate_alignments: L must be at most 8");
  std::vector<std::vector<CtcSymbol>> out;
  std::size_t total = 1;
  for (std::size_t i = 0; i < L; ++i) total *= 5;
  std::vector<CtcSymbol> labels(L);
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    for (std::size_t t = 0; t < L; ++t) {
      labels[t] = CtcSymbol::from_index(c % 5);
      c /= 5;
    }
    if (collapse_labels(labels) == d) out.push_back(labels);
  }
  return out;
}

inline double brute_ctc_prob(const Sequence& d, const helix::nn::ProbMatrix& p) {
  double total = 0.0;
  for (const auto& a : enumerate_alignments(d, p.timesteps())) {
    double prod = 1.0;
    for (std::size_t t = 0; t < a.size(); ++t) prod *= p(t, a[t]);
    total += prod;
  }
  return total;
}

/// All base sequences of length <= n.
inline std::vector<Sequence> all_reads(std::size_t n) {
  std::vector<Sequence> out{{}};
  std::size_t begin = 0;
  for (std::size_t len = 1; len <= n; ++len) {
    const std::size_t end = out.size();
    for (std::size_t i = begin; i < end; ++i)
      for (auto b : helix::kBases) {
        Sequence s = out[i];
        s.push_back(b);
        out.push_back(s);
      }
    begin = end;
  }
  return out;
}

/// Most probable read by exhaustive scoring of every read up to length T.
inline std::pair<Sequence, double> exhaustive_decode(const helix::nn::ProbMatrix& p) {
  std::pair<Sequence, double> best{{}, -1.0};
  for (const auto& d : all_reads(p.timesteps())) {
    const double v = helix::ctc::ctc_prob(d, p);
    if (v > best.second) best = {d, v};
  }
  return best;
}

template <typename Rng>
helix::nn::ProbMatrix random_prob_matrix(std::size_t T, Rng& rng) {
  std::uniform_real_distribution<double> u(0.01, 1.0);
  helix::nn::ProbMatrix p(T);
  for (std::size_t t = 0; t < T; ++t) {
    double sum = 0.0;
    for (std::size_t s = 0; s < 5; ++s) sum += (p(t, s) = u(rng));
    for (std::size_t s = 0; s < 5; ++s) p(t, s) /= sum;
  }
  return p;
}

}  // namespace oracle
