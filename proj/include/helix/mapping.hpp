#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "helix/ledger.hpp"
#include "helix/nn.hpp"
#include "helix/pim.hpp"

namespace helix::pim {

// ---------------------------------------------------------------------------
// Network mapping

struct LayerMapping {
  std::string name;
  LayerShape shape;
  std::size_t arrays = 0;
  // Invocations on the window's critical path; input projections of a
  // recurrent layer overlap the recurrence and contribute none.
  std::size_t serial_invocations = 0;
};

struct NetworkMapping {
  std::string topology;
  int weight_bits = 5;
  std::size_t timesteps = 0;
  std::vector<LayerMapping> layers;
  std::size_t arrays = 0;
  double composed_macs = 0.0;
  std::optional<double> reported_macs;
  std::vector<std::string> warnings;

  std::uint64_t serial_invocations() const {
    std::uint64_t n = 0;
    for (const auto& l : layers) n += l.serial_invocations;
    return n;
  }

  /// MACs per window, preferring the reported count when one is configured.
  double macs() const { return reported_macs.value_or(composed_macs); }
};

inline NetworkMapping map_network(const nn::NetTopology& topology, const CrossbarConfig& cfg, int weight_bits) {
  topology.validate();
  cfg.validate();
  if (weight_bits < 1 || weight_bits > 32) throw Error("map_network: weight_bits out of range");
  NetworkMapping m;
  m.topology = topology.name;
  m.weight_bits = weight_bits;
  m.composed_macs = topology.macs();
  m.reported_macs = topology.reported.total_macs;
  m.warnings = topology.shape_warnings();

  auto add = [&](std::string name, std::size_t rows, std::size_t cols, std::size_t invocations,
                 std::size_t serial) {
    LayerMapping l{std::move(name), {rows, cols, invocations}, 0, serial};
    l.arrays = layer_arrays(l.shape, cfg, weight_bits);
    m.arrays += l.arrays;
    m.layers.push_back(std::move(l));
  };

  std::size_t len = topology.input_length;
  for (std::size_t i = 0; i < topology.conv.size(); ++i) {
    const auto& c = topology.conv[i];
    len = nn::conv_output_length(len, c.stride);
    add("conv" + std::to_string(i), c.kernel * c.in_channels, c.out_channels, len, len);
  }
  m.timesteps = len;
  const bool gru = topology.rnn.type == nn::RecurrentType::gru;
  const std::size_t gates = gru ? 3 : 4;
  // A GRU step needs two dependent recurrent rounds (U_z,U_r then U_h on R*H);
  // an LSTM step needs one.
  const std::size_t rounds = gru ? 2 : 1;
  std::size_t in = topology.conv_channels();
  for (std::size_t l = 0; l < topology.rnn.count; ++l) {
    const std::size_t h = topology.rnn.hidden;
    add("rnn" + std::to_string(l) + ".input", in, gates * h, len, 0);
    add("rnn" + std::to_string(l) + ".recurrent", h, gates * h, rounds * len, rounds * len);
    in = h;
  }
  add("fc", topology.fc_in, topology.fc_out, len, len);

  if (m.arrays > cfg.array_capacity())
    throw Error("map_network: " + topology.name + " needs " + std::to_string(m.arrays) +
                " arrays, chip has " + std::to_string(cfg.array_capacity()));
  return m;
}

/// Pipeline fill: every layer's stages drain once per window.
inline std::uint64_t fill_cycles(const NetworkMapping& m, const CrossbarConfig& cfg) {
  return m.layers.size() * (cfg.pipeline_stages - 1);
}

/// Seconds for one window's DNN part with `input_bits`-bit serial inputs.
inline double dnn_seconds(const NetworkMapping& m, const CrossbarConfig& cfg, int input_bits) {
  const double cycles = static_cast<double>(fill_cycles(m, cfg)) +
                        static_cast<double>(input_bits) * static_cast<double>(m.serial_invocations());
  return cycles / cfg.engine_freq_hz;
}

// ---------------------------------------------------------------------------
// Scheme ladder

enum class Scheme { isaac, bit16, seat, adc, ctc, helix };

inline constexpr std::array<Scheme, 6> kSchemes{Scheme::isaac, Scheme::bit16, Scheme::seat,
                                                Scheme::adc,   Scheme::ctc,   Scheme::helix};

inline const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::isaac: return "ISAAC";
    case Scheme::bit16: return "16-bit";
    case Scheme::seat: return "SEAT";
    case Scheme::adc: return "ADC";
    case Scheme::ctc: return "CTC";
    case Scheme::helix: return "Helix";
  }
  return "?";
}

inline Scheme scheme_from_string(const std::string& s) {
  for (Scheme k : kSchemes)
    if (s == to_string(k)) return k;
  throw Error("unknown scheme: " + s);
}

struct SchemeTraits {
  int bits = 32;
  LedgerVariant ledger = LedgerVariant::isaac;
  bool sot_adc = false;
  bool ctc_on_crossbar = false;
  bool vote_on_comparators = false;
};

inline SchemeTraits traits(Scheme s) {
  switch (s) {
    case Scheme::isaac: return {32, LedgerVariant::isaac, false, false, false};
    case Scheme::bit16: return {16, LedgerVariant::isaac, false, false, false};
    case Scheme::seat: return {5, LedgerVariant::isaac, false, false, false};
    case Scheme::adc: return {5, LedgerVariant::helix_no_comparators, true, false, false};
    case Scheme::ctc: return {5, LedgerVariant::helix_no_comparators, true, true, false};
    case Scheme::helix: return {5, LedgerVariant::helix, true, true, true};
  }
  throw Error("unknown scheme");
}

/// Published speed ratios and the 16-bit phase breakdown the host model is
/// fitted to.
struct HostAnchors {
  double bit16_over_isaac = 1.0625;
  double ctc_over_adc = 1.678;
  double helix_over_ctc = 2.22;
  double ctc_share = 0.167;
  double vote_share = 0.37;
};

struct WorkloadConfig {
  double bases_per_window = 30.0;
  std::size_t read_length = 30;
  double comparator_freq_hz = 100e6;
  // Crossbar CTC: program the diagonal, then read the bit-lines.
  std::size_t ctc_cycles_per_step = 2;
};

/// Host-side costs per window. Host CTC and vote run at one speed, so their
/// ratio is the measured CTC:vote share ratio.
struct HostModel {
  double ctc_s = 0.0;
  double vote_s = 0.0;
  double transfer_s = 0.0;       // probability matrices to the host; gone once CTC runs on the crossbar
  double vote_offload = 0.0;     // fraction of host vote work the comparator arrays absorb
  double seconds_per_share = 0.0;  // host time equal to 100% of the 16-bit window latency share
};

/// Crossbar CTC time per window.
inline double crossbar_ctc_seconds(const NetworkMapping& m, const CrossbarConfig& cfg, const WorkloadConfig& w) {
  return static_cast<double>(m.timesteps * w.ctc_cycles_per_step) / cfg.engine_freq_hz;
}

/// Comparator time per window: write one row per suffix, then one query per
/// candidate length.
inline double comparator_vote_seconds(const WorkloadConfig& w) {
  return static_cast<double>(2 * w.read_length) / w.comparator_freq_hz;
}

/// Slowdown when the SOT-MRAM ADC arrays of an engine cannot keep up with its
/// bit-line conversions.
inline double adc_slowdown(const CrossbarConfig& cfg, const AdcArrayConfig& adc, std::size_t adc_arrays_per_engine = 32) {
  const double needed = static_cast<double>(cfg.arrays_per_engine * cfg.cols) * cfg.engine_freq_hz;
  const double available = static_cast<double>(adc_arrays_per_engine) * adc.freq_hz;
  return std::max(1.0, needed / available);
}

/// Fits host CTC/vote time, transfer time and vote offload so the modeled
/// 16-bit/ISAAC, CTC/ADC and Helix/CTC ratios equal the anchors. With
/// T_b = H' + b*c for the host-bound schemes (H' = host + transfer + fill):
///   H' = (32 - 16 r) c / (r - 1)   from r = T_32 / T_16.
inline HostModel calibrate_host(const NetworkMapping& m, const CrossbarConfig& cfg, const HostAnchors& a = {},
                                const WorkloadConfig& w = {}) {
  const double r = a.bit16_over_isaac;
  if (!(r > 1.0 && r < 2.0)) throw Error("calibrate_host: 16-bit/ISAAC ratio must be in (1, 2)");
  if (!(a.ctc_share > 0 && a.vote_share > 0)) throw Error("calibrate_host: phase shares must be positive");
  const double c = static_cast<double>(m.serial_invocations()) / cfg.engine_freq_hz;
  const double fill = static_cast<double>(fill_cycles(m, cfg)) / cfg.engine_freq_hz;
  const double h_prime = (32.0 - 16.0 * r) * c / (r - 1.0);
  const double t5 = h_prime + 5.0 * c;
  const double ctc_x = crossbar_ctc_seconds(m, cfg, w);
  const double vote_x = comparator_vote_seconds(w);

  HostModel h;
  const double t_ctc = t5 / a.ctc_over_adc;
  h.vote_s = t_ctc - ctc_x - fill - 5.0 * c;
  if (!(h.vote_s > 0.0)) throw Error("calibrate_host: CTC/ADC anchor leaves no host vote time");
  h.ctc_s = h.vote_s * a.ctc_share / a.vote_share;
  h.transfer_s = h_prime - fill - h.ctc_s - h.vote_s;
  if (h.transfer_s < 0.0) throw Error("calibrate_host: anchors imply negative transfer time");
  const double t_helix = t_ctc / a.helix_over_ctc;
  const double residual = t_helix - ctc_x - vote_x - fill - 5.0 * c;
  h.vote_offload = 1.0 - residual / h.vote_s;
  if (h.vote_offload < 0.0 || h.vote_offload > 1.0)
    throw Error("calibrate_host: Helix/CTC anchor outside the offload model's reach");
  h.seconds_per_share = h.vote_s / a.vote_share;
  return h;
}

struct PhaseTimes {
  double dnn = 0.0, ctc = 0.0, vote = 0.0, transfer = 0.0;
  double total() const { return dnn + ctc + vote + transfer; }
};

inline PhaseTimes scheme_times(Scheme s, const NetworkMapping& m, const CrossbarConfig& cfg, const HostModel& h,
                               const WorkloadConfig& w = {}, const AdcArrayConfig& adc = default_adc()) {
  const SchemeTraits t = traits(s);
  PhaseTimes p;
  p.dnn = dnn_seconds(m, cfg, t.bits);
  if (t.sot_adc) p.dnn *= adc_slowdown(cfg, adc);
  if (t.ctc_on_crossbar) {
    p.ctc = crossbar_ctc_seconds(m, cfg, w);
  } else {
    p.ctc = h.ctc_s;
    p.transfer = h.transfer_s;
  }
  p.vote = t.vote_on_comparators ? comparator_vote_seconds(w) + (1.0 - h.vote_offload) * h.vote_s : h.vote_s;
  return p;
}

struct SchemeResult {
  Scheme scheme = Scheme::isaac;
  std::string topology;
  double bases_per_s = 0.0;
  double watts = 0.0;
  double mm2 = 0.0;
  PhaseTimes phases;

  double per_watt() const { return bases_per_s / watts; }
  double per_mm2() const { return bases_per_s / mm2; }
};

/// Every scheme of the ladder for one topology, host model fitted to it.
inline std::vector<SchemeResult> evaluate_schemes(const nn::NetTopology& topology, const CrossbarConfig& cfg = {},
                                                  const HostAnchors& anchors = {}, const WorkloadConfig& w = {},
                                                  const ComponentTable& components = default_components()) {
  // Timing does not depend on weight width beyond array count; check the
  // widest mapping fits and fit the host model on it.
  const NetworkMapping widest = map_network(topology, cfg, 32);
  const HostModel host = calibrate_host(widest, cfg, anchors, w);
  std::vector<SchemeResult> out;
  for (Scheme s : kSchemes) {
    const NetworkMapping m = map_network(topology, cfg, traits(s).bits);
    SchemeResult r;
    r.scheme = s;
    r.topology = topology.name;
    r.phases = scheme_times(s, m, cfg, host, w);
    r.bases_per_s = w.bases_per_window / r.phases.total();
    const auto ledger = ledger_rollup(cfg, traits(s).ledger, components);
    r.watts = ledger.totals.chip_w;
    r.mm2 = ledger.totals.chip_mm2;
    out.push_back(r);
  }
  return out;
}

}  // namespace helix::pim
