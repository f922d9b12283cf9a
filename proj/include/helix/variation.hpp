#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "helix/genome.hpp"

namespace helix::variation {

/// A positive parameter drawn lognormally with the given mean and relative
/// standard deviation (coefficient of variation).
struct Distribution {
  double mean = 1.0;
  double rel_sigma = 0.0;

  double log_sigma() const { return std::sqrt(std::log1p(rel_sigma * rel_sigma)); }
  double log_mean() const { return std::log(mean) - 0.5 * log_sigma() * log_sigma(); }

  /// Value at z standard deviations in log space.
  double at(double z) const { return std::exp(log_mean() + z * log_sigma()); }

  template <typename Rng>
  double sample(Rng& rng) const {
    if (rel_sigma == 0.0) return mean;
    std::normal_distribution<double> n(0.0, 1.0);
    return at(n(rng));
  }
};

struct VariationParams {
  Distribution width{384e-9, 0.10};       // write/read transistor width (m) at the reference cell size
  Distribution length{192e-9, 0.10};      // transistor length (m)
  Distribution vth{0.2, 0.10};            // threshold voltage (V)
  Distribution ra{25.0, 0.08};            // MTJ resistance-area product (ohm um^2)
  Distribution area{64e-9 * 128e-9, 0.05};  // MTJ cross-section (m^2)
  Distribution delta{22.0, 0.27};         // stability factor

  void validate() const {
    for (const Distribution* d : {&width, &length, &vth, &ra, &area, &delta}) {
      if (!(d->mean > 0.0)) throw Error("VariationParams: means must be positive");
      if (d->rel_sigma < 0.0) throw Error("VariationParams: sigma must be non-negative");
    }
  }

  VariationParams without_variation() const {
    VariationParams p = *this;
    for (Distribution* d : {&p.width, &p.length, &p.vth, &p.ra, &p.area, &p.delta}) d->rel_sigma = 0.0;
    return p;
  }
};

/// Fitting constants and drive conditions for the write model.
struct DeviceConstants {
  double tau0_s = 1e-9;
  double jc0 = 1.0;               // critical current density (A/m^2), set by calibrate_jc0
  double k_prime = 200e-6;        // transistor gain (A/V^2)
  double vgs = 1.0;               // gate drive (V)
  double reference_size_f2 = 60;  // cell size at which `width` is quoted
};

struct CellSample {
  double width = 0, length = 0, vth = 0, ra = 0, area = 0, delta = 0;

  /// Square-law saturation current of the write transistor.
  double write_current(const DeviceConstants& k) const {
    const double overdrive = k.vgs - vth;
    if (overdrive <= 0.0) return 0.0;
    return k.k_prime * (width / length) * overdrive * overdrive;
  }
};

/// Switching time t = tau0 * exp((1 - I / (A * Jc0)) * delta).
inline double write_duration(const CellSample& cell, const DeviceConstants& k) {
  const double i = cell.write_current(k);
  if (!(i > 0.0)) throw Error("write_duration: non-positive write current");
  const double ic = cell.area * k.jc0;
  if (!(ic > 0.0)) throw Error("write_duration: A * Jc0 must be positive");
  return k.tau0_s * std::exp((1.0 - i / ic) * cell.delta);
}

template <typename Rng>
CellSample sample_cell(const VariationParams& p, double size_f2, const DeviceConstants& k, Rng& rng) {
  CellSample c;
  c.width = p.width.sample(rng) * size_f2 / k.reference_size_f2;
  c.length = p.length.sample(rng);
  c.vth = p.vth.sample(rng);
  c.ra = p.ra.sample(rng);
  c.area = p.area.sample(rng);
  c.delta = p.delta.sample(rng);
  return c;
}

/// The slow corner: every parameter `z` log-sigmas in its adverse direction,
/// with delta at whichever extreme is slower.
inline double corner_duration(const VariationParams& p, double size_f2, const DeviceConstants& k, double z) {
  CellSample c;
  c.width = p.width.at(-z) * size_f2 / k.reference_size_f2;
  c.length = p.length.at(z);
  c.vth = p.vth.at(z);
  c.ra = p.ra.at(0);
  c.area = p.area.at(z);
  double worst = 0.0;
  for (double dz : {-z, z}) {
    c.delta = p.delta.at(dz);
    worst = std::max(worst, write_duration(c, k));
  }
  return worst;
}

/// Sigma multiple of the calibration corner: a one-sided tail of about 1e-10,
/// the resolution of a 10^10-sample Monte Carlo.
inline constexpr double kCornerSigmas = 6.36;

/// Solves Jc0 so the slow corner at `size_f2` switches in exactly `target_s`.
inline double calibrate_jc0(const VariationParams& p, double size_f2, DeviceConstants k,
                            double target_s = 1.56e-9, double z = kCornerSigmas) {
  p.validate();
  if (!(target_s > k.tau0_s)) throw Error("calibrate_jc0: target must exceed tau0");
  // corner duration grows with Jc0; bisect in log space.
  double lo = 1.0, hi = 1e16;
  for (int it = 0; it < 300; ++it) {
    const double mid = std::sqrt(lo * hi);
    k.jc0 = mid;
    if (corner_duration(p, size_f2, k, z) > target_s) hi = mid;
    else lo = mid;
  }
  return std::sqrt(lo * hi);
}

// ---------------------------------------------------------------------------
// Monte Carlo

struct McConfig {
  double size_f2 = 60;
  std::uint64_t samples = 1'000'000;
  std::uint64_t seed = 1;
  double threshold_s = 1.56e-9;
  unsigned workers = 1;
  std::uint64_t chunk = 1u << 16;
  std::size_t tail_keep = 1024;  // largest samples kept for exact tail quantiles
  // log10(seconds) histogram
  double hist_lo = -10.0, hist_hi = -8.0;
  std::size_t hist_bins = 200;
};

struct McResult {
  std::uint64_t samples = 0;
  double worst_s = 0.0;
  double mean_log_s = 0.0;
  std::uint64_t above_threshold = 0;
  std::vector<std::uint64_t> histogram;  // plus underflow/overflow in the first/last bin
  std::vector<double> tail;              // largest durations, descending

  /// Exact upper quantile while it lies inside the kept tail.
  double upper_quantile(double q) const {
    const double k = std::ceil((1.0 - q) * static_cast<double>(samples));
    const auto idx = static_cast<std::size_t>(std::max(0.0, k - 1.0));
    if (idx >= tail.size()) throw Error("upper_quantile: quantile outside the kept tail");
    return tail[idx];
  }
};

namespace detail {

inline McResult run_chunk(const VariationParams& p, const DeviceConstants& k, const McConfig& cfg,
                          std::uint64_t index, std::uint64_t count) {
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 rng(seq);
  McResult r;
  r.histogram.assign(cfg.hist_bins, 0);
  double sum_log = 0.0;
  for (std::uint64_t i = 0; i < count; ++i) {
    const double t = write_duration(sample_cell(p, cfg.size_f2, k, rng), k);
    r.worst_s = std::max(r.worst_s, t);
    if (t > cfg.threshold_s) ++r.above_threshold;
    const double lt = std::log10(t);
    sum_log += std::log(t);
    auto bin = static_cast<std::int64_t>(std::floor((lt - cfg.hist_lo) / (cfg.hist_hi - cfg.hist_lo) *
                                                    static_cast<double>(cfg.hist_bins)));
    bin = std::clamp<std::int64_t>(bin, 0, static_cast<std::int64_t>(cfg.hist_bins) - 1);
    ++r.histogram[static_cast<std::size_t>(bin)];
    if (r.tail.size() < cfg.tail_keep) {
      r.tail.push_back(t);
      std::push_heap(r.tail.begin(), r.tail.end(), std::greater<>());
    } else if (t > r.tail.front()) {
      std::pop_heap(r.tail.begin(), r.tail.end(), std::greater<>());
      r.tail.back() = t;
      std::push_heap(r.tail.begin(), r.tail.end(), std::greater<>());
    }
  }
  r.samples = count;
  r.mean_log_s = count ? sum_log / static_cast<double>(count) : 0.0;
  return r;
}

}  // namespace detail

/// Write-duration distribution at one cell size. Samples are drawn in chunks,
/// each from its own seeded stream, and merged in chunk order, so results do
/// not depend on the worker count.
inline McResult mc_sweep(const VariationParams& p, const DeviceConstants& k, const McConfig& cfg) {
  p.validate();
  if (cfg.samples < 10'000) throw Error("mc_sweep: at least 10^4 samples required");
  if (cfg.chunk == 0 || cfg.hist_bins == 0) throw Error("mc_sweep: bad chunking or histogram");
  const std::uint64_t chunks = (cfg.samples + cfg.chunk - 1) / cfg.chunk;
  std::vector<McResult> parts(chunks);
  const unsigned workers = std::max(1u, cfg.workers);
  auto run_range = [&](std::uint64_t first) {
    for (std::uint64_t c = first; c < chunks; c += workers) {
      const std::uint64_t n = std::min(cfg.chunk, cfg.samples - c * cfg.chunk);
      parts[c] = detail::run_chunk(p, k, cfg, c, n);
    }
  };
  if (workers == 1) {
    run_range(0);
  } else {
    std::vector<std::future<void>> jobs;
    for (unsigned w = 0; w < workers; ++w) jobs.push_back(std::async(std::launch::async, run_range, w));
    for (auto& j : jobs) j.get();
  }

  McResult out;
  out.histogram.assign(cfg.hist_bins, 0);
  double sum_log = 0.0;
  for (const McResult& r : parts) {
    out.samples += r.samples;
    out.worst_s = std::max(out.worst_s, r.worst_s);
    out.above_threshold += r.above_threshold;
    sum_log += r.mean_log_s * static_cast<double>(r.samples);
    for (std::size_t b = 0; b < cfg.hist_bins; ++b) out.histogram[b] += r.histogram[b];
    out.tail.insert(out.tail.end(), r.tail.begin(), r.tail.end());
  }
  out.mean_log_s = sum_log / static_cast<double>(out.samples);
  std::sort(out.tail.begin(), out.tail.end(), std::greater<>());
  if (out.tail.size() > cfg.tail_keep) out.tail.resize(cfg.tail_keep);
  return out;
}

inline nlohmann::json to_json(const McResult& r, const McConfig& cfg) {
  return {{"size_f2", cfg.size_f2},
          {"samples", r.samples},
          {"seed", cfg.seed},
          {"worst_s", r.worst_s},
          {"mean_log_s", r.mean_log_s},
          {"threshold_s", cfg.threshold_s},
          {"above_threshold", r.above_threshold}};
}

// ---------------------------------------------------------------------------
// Comparator read reliability.
//
// A cell's resistance is R = RA / A in its low state and R (1 + TMR) in its
// high state; a read senses against the geometric midpoint of the nominal
// states. A low cell is misread when its log-resistance exceeds the midpoint
// and a high cell when it falls below. RA and A are lognormal, so ln R is
// normal and both tails are Gaussian.

struct ReadModel {
  double mu = 0.0;       // mean of ln R_low
  double sigma = 0.0;    // std of ln R_low
  double log_gap = 0.0;  // ln(1 + TMR)
  double log_ref = 0.0;  // ln of the sense reference

  /// z-scores of the threshold for the low state (upper tail) and the high
  /// state (lower tail).
  double z_low() const { return (log_ref - mu) / sigma; }
  double z_high() const { return (mu + log_gap - log_ref) / sigma; }
};

inline ReadModel read_model(const VariationParams& p, double tmr) {
  if (!(tmr > 0.0)) throw Error("read_model: TMR must be positive");
  ReadModel m;
  const double s_ra = p.ra.log_sigma(), s_a = p.area.log_sigma();
  m.sigma = std::sqrt(s_ra * s_ra + s_a * s_a);
  if (!(m.sigma > 0.0)) throw Error("read_model: no resistance variation to estimate a tail from");
  m.mu = p.ra.log_mean() - p.area.log_mean();
  m.log_gap = std::log1p(tmr);
  const double nominal = std::log(p.ra.mean) - std::log(p.area.mean);
  m.log_ref = nominal + 0.5 * m.log_gap;
  return m;
}

inline double normal_upper_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

/// Per-cell misread probability, averaged over the two stored states.
inline double analytic_read_error(const ReadModel& m) {
  return 0.5 * (normal_upper_tail(m.z_low()) + normal_upper_tail(m.z_high()));
}

/// TMR at which the analytic per-cell misread probability equals `target`.
inline double calibrate_tmr(const VariationParams& p, double target = 1e-11) {
  double lo = 1e-3, hi = 100.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (analytic_read_error(read_model(p, mid)) > target) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Misread probability from `n` sampled cells: the sample mean and spread of
/// ln R_low are fitted and the Gaussian tails extrapolated to the reference.
template <typename Rng>
Estimate comparator_error_estimate(const VariationParams& p, double tmr, std::uint64_t n, Rng& rng) {
  if (n < 10'000) throw Error("comparator_error_estimate: at least 10^4 samples needed for a tail fit");
  const ReadModel nominal = read_model(p, tmr);
  double sum = 0.0, sum2 = 0.0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const double lr = std::log(p.ra.sample(rng)) - std::log(p.area.sample(rng));
    sum += lr;
    sum2 += lr * lr;
  }
  ReadModel fit = nominal;
  fit.mu = sum / static_cast<double>(n);
  fit.sigma = std::sqrt(std::max(0.0, sum2 / static_cast<double>(n) - fit.mu * fit.mu));
  const double value = analytic_read_error(fit);
  // Delta-method error from the sampling error of sigma dominates.
  const double rel_sigma_err = 1.0 / std::sqrt(2.0 * static_cast<double>(n));
  const double z = std::min(fit.z_low(), fit.z_high());
  return {value, value * z * z * rel_sigma_err};
}

/// Expected comparisons with at least one misread cell.
inline double expected_comparison_errors(double per_cell, std::uint64_t cells, double comparisons) {
  if (per_cell <= 0.0) return 0.0;
  return comparisons * -std::expm1(static_cast<double>(cells) * std::log1p(-per_cell));
}

/// Same quantity by simulation: misreads are drawn at an inflated rate q and
/// each trial reweighted by its likelihood ratio (p/q)^k ((1-p)/(1-q))^(cells-k).
template <typename Rng>
Estimate importance_sampled_errors(double per_cell, std::uint64_t cells, double comparisons, std::uint64_t trials,
                                   double q, Rng& rng) {
  if (!(q > 0.0 && q < 1.0)) throw Error("importance_sampled_errors: proposal rate must be in (0,1)");
  if (trials == 0) throw Error("importance_sampled_errors: need at least one trial");
  std::binomial_distribution<std::uint64_t> draw(cells, q);
  const double log_keep = static_cast<double>(cells) * (std::log1p(-per_cell) - std::log1p(-q));
  const double log_ratio = std::log(per_cell) - std::log(q) - std::log1p(-per_cell) + std::log1p(-q);
  double sum = 0.0, sum2 = 0.0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    const std::uint64_t k = draw(rng);
    if (k == 0) continue;
    const double w = std::exp(log_keep + static_cast<double>(k) * log_ratio);
    sum += w;
    sum2 += w * w;
  }
  const double n = static_cast<double>(trials);
  const double mean = sum / n;
  const double var = std::max(0.0, sum2 / n - mean * mean);
  return {comparisons * mean, comparisons * std::sqrt(var / n)};
}

}  // namespace helix::variation
