#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <span>
#include <type_traits>
#include <variant>
#include <vector>

#include "helix/genome.hpp"
#include "helix/nn.hpp"

namespace helix::synthetic {

/// Nanopore-like signal model: each base holds its mean current level for a
/// random dwell of dwell_min..dwell_max samples, plus Gaussian noise.
struct SignalConfig {
  std::array<double, 4> levels{-1.5, -0.5, 0.5, 1.5};
  double noise_sigma = 0.1;
  std::size_t dwell_min = 1;
  std::size_t dwell_max = 3;

  void validate() const {
    if (dwell_min == 0 || dwell_max < dwell_min) throw Error("SignalConfig: need 1 <= dwell_min <= dwell_max");
    if (noise_sigma < 0.0) throw Error("SignalConfig: noise must be non-negative");
  }
};

struct Signal {
  std::vector<double> samples;
  std::vector<std::size_t> base_index;  // truth position that produced each sample
};

/// Uniform random bases; with `no_repeats` adjacent bases always differ, so a
/// blank-free collapse of the signal recovers the sequence.
template <typename Rng>
Sequence random_sequence(std::size_t n, Rng& rng, bool no_repeats = true) {
  Sequence s;
  s.reserve(n);
  std::uniform_int_distribution<int> any(0, 3), other(1, 3);
  for (std::size_t i = 0; i < n; ++i) {
    if (no_repeats && i > 0) s.push_back(static_cast<Base>((static_cast<int>(s.back()) + other(rng)) % 4));
    else s.push_back(static_cast<Base>(any(rng)));
  }
  return s;
}

template <typename Rng>
Signal generate_signal(const Sequence& truth, const SignalConfig& cfg, Rng& rng) {
  cfg.validate();
  Signal out;
  std::uniform_int_distribution<std::size_t> dwell(cfg.dwell_min, cfg.dwell_max);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const std::size_t d = dwell(rng);
    for (std::size_t k = 0; k < d; ++k) {
      double v = cfg.levels[static_cast<std::size_t>(truth[i])];
      if (cfg.noise_sigma > 0.0) v += cfg.noise_sigma * noise(rng);
      out.samples.push_back(v);
      out.base_index.push_back(i);
    }
  }
  return out;
}

/// Truth bases under samples [start, start + length).
inline Sequence window_truth(const Sequence& truth, const Signal& signal, std::size_t start, std::size_t length) {
  if (start + length > signal.samples.size()) throw Error("window_truth: window past end of signal");
  const std::size_t first = signal.base_index[start], last = signal.base_index[start + length - 1];
  return Sequence(truth.begin() + static_cast<std::ptrdiff_t>(first),
                  truth.begin() + static_cast<std::ptrdiff_t>(last + 1));
}

enum class SubstitutionMode {
  uniform,     // wrong base uniform over the other three
  complement,  // wrong base fixed (A<->T, C<->G): a two-way vote
};

template <typename Rng>
Sequence substitute(const Sequence& s, double p, SubstitutionMode mode, Rng& rng) {
  std::bernoulli_distribution hit(p);
  std::uniform_int_distribution<int> other(1, 3);
  Sequence out = s;
  for (Base& b : out) {
    if (!hit(rng)) continue;
    if (mode == SubstitutionMode::complement) b = static_cast<Base>(3 - static_cast<int>(b));
    else b = static_cast<Base>((static_cast<int>(b) + other(rng)) % 4);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Hand-set weights that make any topology a nearest-level classifier.
//
// Channel 0 carries the signal through every layer (center conv tap, a GRU
// with Z = 0 and candidate tanh(g x), or an LSTM with saturated gates), the
// others stay zero. The fc layer scores base k by beta * (2 u_k h - u_k^2),
// where u_k is the feature value a constant level-k signal produces, so the
// softmax peaks at the nearest level. Blank is never preferred.

inline nn::BasecallerWeights level_classifier(const nn::NetTopology& topology, const SignalConfig& signal,
                                              double gain = 1.0, double sharpness = 12.0) {
  nn::BasecallerWeights w = nn::zero_weights(topology);
  for (auto& c : w.conv) c.tap((c.kernel - 1) / 2, 0, 0) = gain;
  for (auto& layer : w.rnn) {
    std::visit([&](auto& p) {
      using P = std::decay_t<decltype(p)>;
      if constexpr (std::is_same_v<P, nn::GruParams>) {
        for (double& b : p.b_z) b = -0.5;  // sigmoid(0) - 0.5 = 0: no memory
        p.W_h(0, 0) = gain;
      } else {
        for (double& b : p.b_i) b = 20.0;
        for (double& b : p.b_o) b = 20.0;
        for (double& b : p.b_f) b = -20.0;
        p.W_g(0, 0) = gain;
      }
    }, layer);
  }

  // Feature value per level: run constant signals through the stack and read
  // channel 0 at the fc input.
  std::array<double, 4> u{};
  w.fc.w.data.assign(w.fc.w.data.size(), 0.0);
  w.fc.w(0, 0) = 1.0;  // logit A reads channel 0 directly
  for (std::size_t k = 0; k < 4; ++k) {
    std::vector<double> constant(topology.input_length, signal.levels[k]);
    const nn::ProbMatrix p = nn::basecaller_forward(topology, w, constant);
    // softmax of (h, 0, 0, 0, 0) gives p_A / p_C = e^h
    const std::size_t mid = p.timesteps() / 2;
    u[k] = std::log(p(mid, 0) / p(mid, 1));
  }
  double min_gap = INFINITY, max_sq = 0.0;
  for (std::size_t a = 0; a < 4; ++a) {
    max_sq = std::max(max_sq, u[a] * u[a]);
    for (std::size_t b = a + 1; b < 4; ++b) min_gap = std::min(min_gap, std::abs(u[a] - u[b]));
  }
  if (!(min_gap > 1e-9)) throw Error("level_classifier: levels collapse to the same feature");
  const double beta = sharpness / (min_gap * min_gap);
  w.fc.w.data.assign(w.fc.w.data.size(), 0.0);
  for (std::size_t k = 0; k < 4; ++k) {
    w.fc.w(k, 0) = 2.0 * beta * u[k];
    w.fc.bias[k] = -beta * u[k] * u[k];
  }
  w.fc.bias[CtcSymbol::kBlankIndex] = -beta * max_sq - 10.0;
  return w;
}

}  // namespace helix::synthetic
