#pragma once

#include <array>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "helix/genome.hpp"
#include "helix/mapping.hpp"

namespace helix::report {

/// One simulated (topology, scheme) point, as written by the simulate command.
struct SchemeRow {
  std::string topology;
  pim::Scheme scheme = pim::Scheme::isaac;
  double bases_per_s = 0.0;
  double watts = 0.0;
  double mm2 = 0.0;

  double per_watt() const { return bases_per_s / watts; }
  double per_mm2() const { return bases_per_s / mm2; }
};

inline SchemeRow from_result(const pim::SchemeResult& r) {
  return {r.topology, r.scheme, r.bases_per_s, r.watts, r.mm2};
}

inline void write_simulation_csv(std::ostream& os, const std::vector<SchemeRow>& rows) {
  os << "topology,scheme,bases_per_s,watts,mm2,bases_per_s_per_w,bases_per_s_per_mm2\n";
  os.precision(10);
  for (const auto& r : rows)
    os << r.topology << ',' << pim::to_string(r.scheme) << ',' << r.bases_per_s << ',' << r.watts << ',' << r.mm2
       << ',' << r.per_watt() << ',' << r.per_mm2() << '\n';
}

/// Reads the simulate CSV back; derived columns are recomputed, not trusted.
inline std::vector<SchemeRow> read_simulation_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error("simulation CSV: empty input");
  std::vector<SchemeRow> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() < 5) throw Error("simulation CSV line " + std::to_string(lineno) + ": expected at least 5 fields");
    try {
      rows.push_back({f[0], pim::scheme_from_string(f[1]), std::stod(f[2]), std::stod(f[3]), std::stod(f[4])});
    } catch (const std::invalid_argument&) {
      throw Error("simulation CSV line " + std::to_string(lineno) + ": bad number");
    }
  }
  return rows;
}

/// Ratios to ISAAC for one base-caller, or the geometric mean over several.
struct ComparisonRow {
  pim::Scheme scheme = pim::Scheme::isaac;
  double throughput = 1.0;
  double per_watt = 1.0;
  double per_mm2 = 1.0;
};

struct Comparison {
  std::vector<std::string> topologies;
  std::map<std::string, std::vector<ComparisonRow>> per_topology;
  std::vector<ComparisonRow> mean;  // geometric mean over topologies
  bool monotone = true;             // throughput never drops along the ladder
  std::vector<std::string> violations;

  const ComparisonRow& row(pim::Scheme s) const {
    for (const auto& r : mean)
      if (r.scheme == s) return r;
    throw Error("comparison: scheme missing");
  }
  /// Throughput ratio between two schemes of the mean table.
  double ratio(pim::Scheme num, pim::Scheme den) const { return row(num).throughput / row(den).throughput; }
};

inline Comparison scheme_comparison(const std::vector<SchemeRow>& rows) {
  std::map<std::string, std::map<pim::Scheme, SchemeRow>> by_topology;
  for (const auto& r : rows) {
    if (!(r.bases_per_s > 0 && r.watts > 0 && r.mm2 > 0))
      throw Error("comparison: non-positive metric for " + r.topology + "/" + pim::to_string(r.scheme));
    by_topology[r.topology][r.scheme] = r;
  }
  if (by_topology.empty()) throw Error("comparison: no results");

  Comparison c;
  std::map<pim::Scheme, std::array<double, 3>> log_sum;
  for (const auto& [topo, schemes] : by_topology) {
    for (pim::Scheme s : pim::kSchemes)
      if (!schemes.count(s)) throw Error("comparison: " + topo + " is missing scheme " + pim::to_string(s));
    c.topologies.push_back(topo);
    const SchemeRow& base = schemes.at(pim::Scheme::isaac);
    auto& table = c.per_topology[topo];
    for (pim::Scheme s : pim::kSchemes) {
      const SchemeRow& r = schemes.at(s);
      ComparisonRow row{s, r.bases_per_s / base.bases_per_s, r.per_watt() / base.per_watt(), r.per_mm2() / base.per_mm2()};
      if (!table.empty() && row.throughput < table.back().throughput * (1.0 - 1e-12)) {
        c.monotone = false;
        c.violations.push_back(topo + ": " + pim::to_string(s) + " slower than " + pim::to_string(table.back().scheme));
      }
      table.push_back(row);
      auto& acc = log_sum[s];
      acc[0] += std::log(row.throughput);
      acc[1] += std::log(row.per_watt);
      acc[2] += std::log(row.per_mm2);
    }
  }
  const double n = static_cast<double>(c.topologies.size());
  for (pim::Scheme s : pim::kSchemes) {
    const auto& acc = log_sum[s];
    c.mean.push_back({s, std::exp(acc[0] / n), std::exp(acc[1] / n), std::exp(acc[2] / n)});
  }
  return c;
}

inline void write_comparison_csv(std::ostream& os, const Comparison& c) {
  os << "topology,scheme,throughput,throughput_per_w,throughput_per_mm2\n";
  os.precision(10);
  auto emit = [&](const std::string& topo, const std::vector<ComparisonRow>& rows) {
    for (const auto& r : rows)
      os << topo << ',' << pim::to_string(r.scheme) << ',' << r.throughput << ',' << r.per_watt << ',' << r.per_mm2
         << '\n';
  };
  for (const auto& t : c.topologies) emit(t, c.per_topology.at(t));
  emit("geomean", c.mean);
}

inline nlohmann::json to_json(const Comparison& c) {
  nlohmann::json j;
  j["normalized_to"] = "ISAAC";
  j["average"] = "geometric mean over base-callers";
  j["topologies"] = c.topologies;
  auto rows = nlohmann::json::array();
  for (const auto& r : c.mean)
    rows.push_back({{"scheme", pim::to_string(r.scheme)},
                    {"throughput", r.throughput},
                    {"throughput_per_w", r.per_watt},
                    {"throughput_per_mm2", r.per_mm2}});
  j["mean"] = std::move(rows);
  j["ratios"] = {{"SEAT/ISAAC", c.ratio(pim::Scheme::seat, pim::Scheme::isaac)},
                 {"CTC/ADC", c.ratio(pim::Scheme::ctc, pim::Scheme::adc)},
                 {"Helix/CTC", c.ratio(pim::Scheme::helix, pim::Scheme::ctc)},
                 {"Helix/ISAAC", c.ratio(pim::Scheme::helix, pim::Scheme::isaac)}};
  j["monotone"] = c.monotone;
  j["violations"] = c.violations;
  return j;
}

}  // namespace helix::report
