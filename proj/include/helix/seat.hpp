#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "helix/ctc.hpp"
#include "helix/genome.hpp"
#include "helix/nn.hpp"
#include "helix/synthetic.hpp"
#include "helix/vote.hpp"

namespace helix::seat {

inline constexpr double kProbFloor = 1e-12;

inline double safe_log(double p) { return std::log(std::max(p, kProbFloor)); }

/// Overlapping windows cut from one signal stream, each with its truth read.
struct TrainSample {
  std::vector<std::vector<double>> windows;
  std::vector<Sequence> truths;   // G_i for window i
  Sequence stream_truth;          // bases spanned by all windows, for vote accuracy
};

struct SeatConfig {
  double eta = 1.0;
  std::size_t vote_arity = 3;

  void validate() const {
    if (!(eta >= 0.0 && eta <= 1.0)) throw Error("SeatConfig: eta must be in [0,1]");
    if (vote_arity < 3 || vote_arity % 2 == 0) throw Error("SeatConfig: vote_arity must be odd and >= 3");
  }
};

/// Network plus the arithmetic it runs with: float, or per-tensor fixed point
/// at `bit_width` bits.
struct Model {
  nn::NetTopology topology;
  nn::BasecallerWeights weights;
  int bit_width = 0;  // 0: float
  std::size_t beam_width = 10;

  nn::ProbMatrix forward(std::span<const double> window) const {
    if (bit_width == 0) return nn::basecaller_forward(topology, weights, window);
    return nn::basecaller_forward(topology, weights, window, nn::QuantizedArithmetic<>{bit_width});
  }

  Read decode(std::span<const double> window) const {
    return ctc::beam_search(forward(window), beam_width).read;
  }
};

// ---------------------------------------------------------------------------
// Losses over precomputed probabilities, usable without a model.

/// sum_i -ln p(G_i | R_i)
inline double loss0_from_probs(std::span<const double> p_truth) {
  double total = 0.0;
  for (double p : p_truth) total -= safe_log(p);
  return total;
}

/// sum_i [ -eta ln p(G_i|R_i) + (ln p(G_i|R_i) - ln p(C_i|R_i))^2 ]
inline double loss1_from_probs(std::span<const double> p_truth, std::span<const double> p_consensus, double eta) {
  if (p_truth.size() != p_consensus.size()) throw Error("loss1: probability lists differ in length");
  double total = 0.0;
  for (std::size_t i = 0; i < p_truth.size(); ++i) {
    const double lg = safe_log(p_truth[i]), lc = safe_log(p_consensus[i]);
    total += -eta * lg + (lg - lc) * (lg - lc);
  }
  return total;
}

// ---------------------------------------------------------------------------

inline double loss0(const std::vector<TrainSample>& samples, const Model& model) {
  std::vector<double> p;
  for (const auto& s : samples)
    for (std::size_t i = 0; i < s.windows.size(); ++i) p.push_back(ctc::ctc_prob(s.truths[i], model.forward(s.windows[i])));
  return loss0_from_probs(p);
}

/// C_i: the other predicted reads of the `arity` window centred on i
/// (clipped at the stream ends) are piled up on read i and voted per column.
inline std::vector<Sequence> consensus_targets(const std::vector<Read>& predicted, std::size_t arity) {
  std::vector<Sequence> out;
  const std::size_t half = arity / 2;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(predicted.size(), i + half + 1);
    std::vector<Sequence> others;
    for (std::size_t j = lo; j < hi; ++j)
      if (j != i) others.push_back(predicted[j].symbols);
    out.push_back(vote::pileup_consensus(predicted[i].symbols, others));
  }
  return out;
}

/// Consensus targets for every sample under the current model.
inline std::vector<std::vector<Sequence>> consensus_for(const std::vector<TrainSample>& samples, const Model& model,
                                                        const SeatConfig& cfg) {
  std::vector<std::vector<Sequence>> out;
  for (const auto& s : samples) {
    std::vector<Read> predicted;
    for (const auto& w : s.windows) predicted.push_back(model.decode(w));
    out.push_back(consensus_targets(predicted, cfg.vote_arity));
  }
  return out;
}

/// loss1 with consensus targets held fixed.
inline double loss1_with(const std::vector<TrainSample>& samples, const Model& model, const SeatConfig& cfg,
                         const std::vector<std::vector<Sequence>>& consensus) {
  std::vector<double> pg, pc;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& s = samples[k];
    for (std::size_t i = 0; i < s.windows.size(); ++i) {
      const nn::ProbMatrix p = model.forward(s.windows[i]);
      pg.push_back(ctc::ctc_prob(s.truths[i], p));
      pc.push_back(ctc::ctc_prob(consensus[k][i], p));
    }
  }
  return loss1_from_probs(pg, pc, cfg.eta);
}

inline double loss1(const std::vector<TrainSample>& samples, const Model& model, const SeatConfig& cfg) {
  cfg.validate();
  return loss1_with(samples, model, cfg, consensus_for(samples, model, cfg));
}

// ---------------------------------------------------------------------------
// Accuracy

struct Accuracy {
  double read = 0.0;  // mean per-window read accuracy
  double vote = 0.0;  // mean per-stream consensus accuracy
};

inline Accuracy evaluate(const std::vector<TrainSample>& samples, const Model& model) {
  Accuracy acc;
  std::size_t windows = 0;
  for (const auto& s : samples) {
    std::vector<Read> reads;
    for (std::size_t i = 0; i < s.windows.size(); ++i) {
      reads.push_back(model.decode(s.windows[i]));
      acc.read += read_accuracy(reads.back().symbols, s.truths[i]);
      ++windows;
    }
    acc.vote += read_accuracy(vote::align_and_vote(reads).consensus, s.stream_truth);
  }
  if (windows) acc.read /= static_cast<double>(windows);
  if (!samples.empty()) acc.vote /= static_cast<double>(samples.size());
  return acc;
}

// ---------------------------------------------------------------------------
// Synthetic task

struct ToyTaskConfig {
  std::size_t streams = 4;
  std::size_t bases_per_stream = 24;
  synthetic::SignalConfig signal{};
};

/// Streams of non-repeating bases turned into signals and cut into the
/// topology's sliding windows.
template <typename Rng>
std::vector<TrainSample> make_toy_dataset(const nn::NetTopology& topology, const ToyTaskConfig& cfg, Rng& rng) {
  std::vector<TrainSample> out;
  for (std::size_t k = 0; k < cfg.streams; ++k) {
    Sequence truth;
    synthetic::Signal sig;
    // Redraw until the stream holds at least one window.
    do {
      truth = synthetic::random_sequence(cfg.bases_per_stream, rng);
      sig = synthetic::generate_signal(truth, cfg.signal, rng);
    } while (sig.samples.size() < topology.input_length);
    TrainSample s;
    const auto starts = nn::window_starts(sig.samples.size(), topology.input_length, topology.sliding_offset);
    for (std::size_t st : starts) {
      s.windows.emplace_back(sig.samples.begin() + static_cast<std::ptrdiff_t>(st),
                             sig.samples.begin() + static_cast<std::ptrdiff_t>(st + topology.input_length));
      s.truths.push_back(synthetic::window_truth(truth, sig, st, topology.input_length));
    }
    const std::size_t first = sig.base_index[starts.front()];
    const std::size_t last = sig.base_index[starts.back() + topology.input_length - 1];
    s.stream_truth.assign(truth.begin() + static_cast<std::ptrdiff_t>(first),
                          truth.begin() + static_cast<std::ptrdiff_t>(last + 1));
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training

enum class LossKind { loss0, loss1 };

struct TrainConfig {
  LossKind loss = LossKind::loss0;
  SeatConfig seat{};
  std::size_t steps = 50;
  double lr = 0.05;
  double fd_step = 1e-4;
  // Adam moment decay
  double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  std::size_t max_parameters = 2000;
  // For a quantized model, probe the gradient on the float network at the
  // rounded weights and apply it to the float weights (straight-through).
  bool straight_through = true;
};

struct TraceRow {
  std::size_t step = 0;
  double loss = 0.0;
  double read_accuracy = 0.0;
  double vote_accuracy = 0.0;
};

struct TrainResult {
  Model model;
  std::vector<TraceRow> trace;
  bool diverged = false;
};

/// Central finite-difference gradient of `f` at `x`.
inline std::vector<double> central_gradient(const std::function<double(std::span<const double>)>& f,
                                            std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// Forward finite-difference gradient, the independent second stencil.
inline std::vector<double> forward_gradient(const std::function<double(std::span<const double>)>& f,
                                            std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  const double base = f(x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    g[i] = (f(x) - base) / h;
    x[i] = keep;
  }
  return g;
}

/// Loss as a function of the flattened parameters. loss1 consensus targets
/// are the ones passed in.
inline double loss_at(const Model& base, std::span<const double> params, const std::vector<TrainSample>& data,
                      const TrainConfig& cfg, const std::vector<std::vector<Sequence>>* consensus) {
  Model m = base;
  m.weights.assign(params);
  if (cfg.loss == LossKind::loss0) return loss0(data, m);
  return loss1_with(data, m, cfg.seat, *consensus);
}

/// Finite-difference training with Adam updates. The consensus targets of
/// loss1 are recomputed from the current model at the start of every step
/// and held fixed while that step's gradient is probed.
inline TrainResult train_toy(Model model, const std::vector<TrainSample>& data, const TrainConfig& cfg) {
  if (cfg.loss == LossKind::loss1) cfg.seat.validate();
  std::vector<double> x = model.weights.flatten();
  if (x.size() > cfg.max_parameters)
    throw Error("train_toy: " + std::to_string(x.size()) + " parameters exceed the finite-difference budget");
  std::vector<double> m1(x.size(), 0.0), m2(x.size(), 0.0);
  TrainResult result;

  auto record = [&](std::size_t step, double loss) {
    model.weights.assign(x);
    const Accuracy a = evaluate(data, model);
    result.trace.push_back({step, loss, a.read, a.vote});
  };

  for (std::size_t step = 0; step <= cfg.steps; ++step) {
    model.weights.assign(x);
    std::vector<std::vector<Sequence>> consensus;
    if (cfg.loss == LossKind::loss1) consensus = consensus_for(data, model, cfg.seat);
    auto f = [&](std::span<const double> p) { return loss_at(model, p, data, cfg, &consensus); };
    const double loss = f(x);
    if (!std::isfinite(loss)) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      result.trace.push_back({step, loss, nan, nan});
      result.diverged = true;
      break;
    }
    record(step, loss);
    if (step == cfg.steps || cfg.lr == 0.0) continue;
    std::vector<double> g;
    if (cfg.straight_through && model.bit_width > 0) {
      Model probe = model;
      probe.bit_width = 0;
      auto fp = [&](std::span<const double> p) { return loss_at(probe, p, data, cfg, &consensus); };
      g = central_gradient(fp, model.weights.fake_quantized(model.bit_width).flatten(), cfg.fd_step);
    } else {
      g = central_gradient(f, x, cfg.fd_step);
    }
    const double t = static_cast<double>(step + 1);
    for (std::size_t i = 0; i < x.size(); ++i) {
      m1[i] = cfg.beta1 * m1[i] + (1 - cfg.beta1) * g[i];
      m2[i] = cfg.beta2 * m2[i] + (1 - cfg.beta2) * g[i] * g[i];
      const double mh = m1[i] / (1 - std::pow(cfg.beta1, t));
      const double vh = m2[i] / (1 - std::pow(cfg.beta2, t));
      x[i] -= cfg.lr * mh / (std::sqrt(vh) + cfg.adam_eps);
    }
  }
  model.weights.assign(x);
  result.model = std::move(model);
  return result;
}

inline void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace) {
  os << "step,loss,read_accuracy,vote_accuracy\n";
  for (const auto& r : trace) os << r.step << ',' << r.loss << ',' << r.read_accuracy << ',' << r.vote_accuracy << '\n';
}

}  // namespace helix::seat
