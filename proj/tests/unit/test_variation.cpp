#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "helix/variation.hpp"

using namespace helix;
using namespace helix::variation;

namespace {

CellSample nominal_cell(const VariationParams& p) {
  return {p.width.mean, p.length.mean, p.vth.mean, p.ra.mean, p.area.mean, p.delta.mean};
}

McConfig small_mc(double size, std::uint64_t n, std::uint64_t seed) {
  McConfig c;
  c.size_f2 = size;
  c.samples = n;
  c.seed = seed;
  c.chunk = 4096;
  return c;
}

}  // namespace

TEST(WriteDuration, AtCriticalCurrentIsTau0) {
  VariationParams p;
  DeviceConstants k;
  auto c = nominal_cell(p);
  k.jc0 = c.write_current(k) / c.area;
  EXPECT_NEAR(write_duration(c, k), k.tau0_s, 1e-24);
}

TEST(WriteDuration, TenPercentOverdrive) {
  VariationParams p;
  DeviceConstants k;
  auto c = nominal_cell(p);
  c.delta = 22.0;
  k.jc0 = c.write_current(k) / (1.1 * c.area);
  EXPECT_NEAR(write_duration(c, k) / (k.tau0_s * std::exp(-2.2)), 1.0, 1e-12);
}

TEST(WriteDuration, NonPositiveCurrentThrows) {
  VariationParams p;
  auto c = nominal_cell(p);
  c.vth = 1.5;
  EXPECT_THROW(write_duration(c, {}), Error);
}

TEST(WriteDuration, MonotoneInCurrentAndDelta) {
  VariationParams p;
  DeviceConstants k;
  k.jc0 = calibrate_jc0(p, 60, k);
  std::mt19937_64 rng(501);
  for (int i = 0; i < 200; ++i) {
    auto c = sample_cell(p, 60, k, rng);
    auto wider = c;
    wider.width *= 1.05;
    EXPECT_LT(write_duration(wider, k), write_duration(c, k));
    if (c.write_current(k) < c.area * k.jc0) {
      auto stiffer = c;
      stiffer.delta += 1.0;
      EXPECT_GT(write_duration(stiffer, k), write_duration(c, k));
    }
  }
}

TEST(Calibration, CornerHitsTarget) {
  VariationParams p;
  DeviceConstants k;
  k.jc0 = calibrate_jc0(p, 60, k);
  EXPECT_NEAR(corner_duration(p, 60, k, kCornerSigmas), 1.56e-9, 1e-15);
  // the nominal cell is well inside the budget
  EXPECT_LT(write_duration(nominal_cell(p), k), 1.56e-9);
}

TEST(MonteCarlo, NoVariationIsDegenerate) {
  VariationParams p;
  DeviceConstants k;
  k.jc0 = calibrate_jc0(p, 60, k);
  auto flat = p.without_variation();
  auto r = mc_sweep(flat, k, small_mc(60, 10000, 1));
  const double t = write_duration(nominal_cell(p), k);
  EXPECT_DOUBLE_EQ(r.worst_s, t);
  EXPECT_NEAR(r.mean_log_s, std::log(t), 1e-9);
}

TEST(MonteCarlo, RejectsSmallRuns) {
  EXPECT_THROW(mc_sweep({}, {}, small_mc(60, 9999, 1)), Error);
}

TEST(MonteCarlo, SeedReproducibleAcrossWorkers) {
  VariationParams p;
  DeviceConstants k;
  k.jc0 = calibrate_jc0(p, 60, k);
  auto cfg = small_mc(60, 50000, 42);
  auto a = mc_sweep(p, k, cfg);
  auto b = mc_sweep(p, k, cfg);
  cfg.workers = 4;
  auto c = mc_sweep(p, k, cfg);
  EXPECT_EQ(a.worst_s, b.worst_s);
  EXPECT_EQ(a.histogram, b.histogram);
  EXPECT_EQ(a.worst_s, c.worst_s);
  EXPECT_EQ(a.histogram, c.histogram);
  EXPECT_EQ(a.tail, c.tail);
  EXPECT_EQ(a.mean_log_s, c.mean_log_s);
  cfg.seed = 43;
  EXPECT_NE(mc_sweep(p, k, cfg).worst_s, a.worst_s);
}

TEST(MonteCarlo, LargerCellsAreFaster) {
  VariationParams p;
  DeviceConstants k;
  k.jc0 = calibrate_jc0(p, 60, k);
  double prev_q = INFINITY;
  for (double size : {40.0, 50.0, 60.0}) {
    auto r = mc_sweep(p, k, small_mc(size, 100000, 7));
    const double q = r.upper_quantile(0.9999);
    EXPECT_LT(q, prev_q);
    prev_q = q;
  }
}

TEST(MonteCarlo, LogDurationAffineInDelta) {
  VariationParams p = VariationParams{}.without_variation();
  p.delta.rel_sigma = 0.27;
  DeviceConstants k;
  k.jc0 = calibrate_jc0(VariationParams{}, 60, k);
  std::mt19937_64 rng(503);
  std::vector<double> d, lt;
  for (int i = 0; i < 5000; ++i) {
    auto c = sample_cell(p, 60, k, rng);
    d.push_back(c.delta);
    lt.push_back(std::log(write_duration(c, k)));
  }
  auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
  const double md = mean(d), ml = mean(lt);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    sxy += (d[i] - md) * (lt[i] - ml);
    sxx += (d[i] - md) * (d[i] - md);
    syy += (lt[i] - ml) * (lt[i] - ml);
  }
  EXPECT_GE(std::abs(sxy / std::sqrt(sxx * syy)), 0.99);
}

TEST(Distribution, LognormalMoments) {
  Distribution d{25.0, 0.08};
  std::mt19937_64 rng(509);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double v = d.sample(rng);
    ASSERT_GT(v, 0.0);
    s += v;
    s2 += v * v;
  }
  const double mean = s / n, sd = std::sqrt(s2 / n - mean * mean);
  EXPECT_NEAR(mean, 25.0, 0.02);
  EXPECT_NEAR(sd / 25.0, 0.08, 0.002);
}

TEST(ComparatorReliability, ExpectedErrorsArithmetic) {
  EXPECT_NEAR(expected_comparison_errors(1e-11, 180, 5.56e8), 1.0008, 1e-6);
  EXPECT_EQ(expected_comparison_errors(0.0, 180, 5.56e8), 0.0);
  EXPECT_NEAR(expected_comparison_errors(1e-11, 180, 2 * 5.56e8), 2 * expected_comparison_errors(1e-11, 180, 5.56e8),
              1e-12);
}

TEST(ComparatorReliability, TmrCalibration) {
  VariationParams p;
  const double tmr = calibrate_tmr(p, 1e-11);
  EXPECT_NEAR(analytic_read_error(read_model(p, tmr)) / 1e-11, 1.0, 1e-6);
  std::mt19937_64 rng(521);
  auto est = comparator_error_estimate(p, tmr, 200000, rng);
  // a tail fit from 2e5 samples lands within a few standard errors
  EXPECT_NEAR(est.value, 1e-11, 4 * est.std_error + 1e-12);
  EXPECT_THROW(comparator_error_estimate(p, tmr, 100, rng), Error);
}

TEST(ComparatorReliability, ImportanceSamplingAgrees) {
  std::mt19937_64 rng(523);
  auto est = importance_sampled_errors(1e-11, 180, 5.56e8, 200000, 1.0 / 180, rng);
  const double exact = expected_comparison_errors(1e-11, 180, 5.56e8);
  EXPECT_NEAR(est.value, exact, 3 * est.std_error);
  EXPECT_LT(est.std_error / exact, 0.01);
}

TEST(Json, McSummary) {
  McConfig cfg = small_mc(60, 10000, 3);
  VariationParams p;
  DeviceConstants k;
  k.jc0 = calibrate_jc0(p, 60, k);
  auto j = to_json(mc_sweep(p, k, cfg), cfg);
  EXPECT_EQ(j["samples"], 10000);
}
