#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "helix/genome.hpp"

namespace oracle {

/// Edit distance by plain recursion over the three edit moves (small inputs).
inline std::size_t brute_edit(const helix::Sequence& a, const helix::Sequence& b, std::size_t i = 0,
                              std::size_t j = 0) {
  if (i == a.size()) return b.size() - j;
  if (j == b.size()) return a.size() - i;
  if (a[i] == b[j]) return brute_edit(a, b, i + 1, j + 1);
  return 1 + std::min({brute_edit(a, b, i + 1, j), brute_edit(a, b, i, j + 1), brute_edit(a, b, i + 1, j + 1)});
}

/// Binomial tail sum_{k >= ceil(c/2)} C(c,k) p^k (1-p)^(c-k), by a running
/// product of combination ratios.
inline double binomial_tail(double p, std::size_t c) {
  std::vector<double> pmf(c + 1);
  pmf[0] = std::pow(1.0 - p, static_cast<double>(c));
  for (std::size_t k = 1; k <= c; ++k)
    pmf[k] = pmf[k - 1] * static_cast<double>(c - k + 1) / static_cast<double>(k) * p / (1.0 - p);
  double tail = 0.0;
  for (std::size_t k = (c + 1) / 2; k <= c; ++k) tail += pmf[k];
  return tail;
}

template <typename Rng>
helix::Sequence random_bases(std::size_t n, Rng& rng) {
  std::uniform_int_distribution<int> d(0, 3);
  helix::Sequence s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(static_cast<helix::Base>(d(rng)));
  return s;
}

}  // namespace oracle
