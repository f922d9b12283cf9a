#include <gtest/gtest.h>

#include <sstream>

#include "helix/report.hpp"

using namespace helix;
using namespace helix::report;

namespace {

std::vector<SchemeRow> simulate(const std::vector<nn::NetTopology>& topologies) {
  std::vector<SchemeRow> rows;
  for (const auto& t : topologies)
    for (const auto& r : pim::evaluate_schemes(t)) rows.push_back(from_result(r));
  return rows;
}

}  // namespace

TEST(Comparison, IsaacRowIsOne) {
  auto c = scheme_comparison(simulate({nn::topologies::guppy(), nn::topologies::scrappie()}));
  const auto& row = c.row(pim::Scheme::isaac);
  EXPECT_DOUBLE_EQ(row.throughput, 1.0);
  EXPECT_DOUBLE_EQ(row.per_watt, 1.0);
  EXPECT_DOUBLE_EQ(row.per_mm2, 1.0);
  for (const auto& [topo, rows] : c.per_topology) EXPECT_DOUBLE_EQ(rows.front().throughput, 1.0);
}

TEST(Comparison, CalibratedRatios) {
  auto c = scheme_comparison(simulate({nn::topologies::guppy(), nn::topologies::scrappie(), nn::topologies::chiron_toy()}));
  EXPECT_NEAR(c.ratio(pim::Scheme::ctc, pim::Scheme::adc), 1.678, 1e-9);
  EXPECT_NEAR(c.ratio(pim::Scheme::helix, pim::Scheme::ctc), 2.22, 1e-9);
  EXPECT_NEAR(c.ratio(pim::Scheme::seat, pim::Scheme::isaac), 1.111, 0.2 * 1.111);
  EXPECT_TRUE(c.monotone);
}

TEST(Comparison, GeometricMean) {
  std::vector<SchemeRow> rows;
  for (auto [topo, f] : {std::pair{"a", 2.0}, std::pair{"b", 8.0}})
    for (pim::Scheme s : pim::kSchemes)
      rows.push_back({topo, s, s == pim::Scheme::isaac ? 1.0 : f, 1.0, 1.0});
  auto c = scheme_comparison(rows);
  EXPECT_NEAR(c.row(pim::Scheme::helix).throughput, 4.0, 1e-12);
}

TEST(Comparison, MissingSchemeThrows) {
  auto rows = simulate({nn::topologies::scrappie()});
  rows.pop_back();
  EXPECT_THROW(scheme_comparison(rows), Error);
  EXPECT_THROW(scheme_comparison({}), Error);
}

TEST(Comparison, FlagsNonMonotoneLadder) {
  auto rows = simulate({nn::topologies::scrappie()});
  rows[3].bases_per_s = rows[2].bases_per_s * 0.5;
  auto c = scheme_comparison(rows);
  EXPECT_FALSE(c.monotone);
  ASSERT_EQ(c.violations.size(), 1u);  // CTC still beats the halved ADC row
  EXPECT_NE(c.violations[0].find("ADC slower"), std::string::npos);
}

TEST(SimulationCsv, RoundTrip) {
  auto rows = simulate({nn::topologies::scrappie()});
  std::stringstream ss;
  write_simulation_csv(ss, rows);
  auto back = read_simulation_csv(ss);
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].scheme, rows[i].scheme);
    EXPECT_NEAR(back[i].bases_per_s / rows[i].bases_per_s, 1.0, 1e-9);
  }
  std::stringstream bad("header\nx,ISAAC,1,2\n");
  EXPECT_THROW(read_simulation_csv(bad), Error);
}

TEST(ComparisonOutput, JsonAndCsv) {
  auto c = scheme_comparison(simulate({nn::topologies::scrappie()}));
  auto j = to_json(c);
  EXPECT_EQ(j["average"], "geometric mean over base-callers");
  EXPECT_EQ(j["mean"].size(), 6u);
  std::ostringstream os;
  write_comparison_csv(os, c);
  EXPECT_NE(os.str().find("geomean,Helix"), std::string::npos);
}
