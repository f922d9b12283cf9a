#pragma once

#include <map>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "helix/genome.hpp"
#include "helix/pim.hpp"

namespace helix::pim {

/// Power and area of one component entry as listed per tile or per engine.
struct ComponentSpec {
  double power_mw = 0.0;
  double area_mm2 = 0.0;
};

using ComponentTable = std::map<std::string, ComponentSpec>;

/// ISAAC-style tile/engine rows plus the SOT-MRAM replacements. Entries are
/// totals for the listed group (e.g. "nvm_arrays" is all 8 arrays of an
/// engine) except "encoder", which is per encoder.
inline ComponentTable default_components() {
  return {
      // tile-shared
      {"edram", {20.7, 0.083}},
      {"bus", {7.0, 0.09}},
      {"router", {10.5, 0.0378}},
      {"activation", {0.52, 0.0006}},
      {"tile_shift_add", {0.05, 0.00006}},
      {"maxpool", {0.4, 0.0024}},
      {"tile_output_reg", {1.68, 0.0032}},
      // per engine
      {"nvm_arrays", {2.4, 0.0002}},
      {"sample_hold", {0.001, 0.00004}},
      {"engine_shift_add", {0.2, 0.00024}},
      {"input_reg", {1.24, 0.0021}},
      {"engine_output_reg", {0.23, 0.00077}},
      {"dac", {4.0, 0.00017}},
      {"cmos_adc", {16.0, 0.0096}},
      {"sot_adc_arrays", {0.6, 0.00005}},
      {"voltage_ref", {0.02, 0.00003}},
      {"encoder", {0.001, 0.000002}},
      // chip level
      {"comparator_bank", {1300.0, 0.11}},
  };
}

enum class LedgerVariant { isaac, helix_no_comparators, helix };

inline const char* to_string(LedgerVariant v) {
  switch (v) {
    case LedgerVariant::isaac: return "isaac";
    case LedgerVariant::helix_no_comparators: return "helix-no-comparators";
    case LedgerVariant::helix: return "helix";
  }
  return "?";
}

enum class Level { tile, engine, chip };

struct LedgerEntry {
  std::string component;
  Level level = Level::engine;
  double count = 1.0;
  ComponentSpec spec;
};

struct LedgerTotals {
  double engine_mw = 0.0, engine_mm2 = 0.0;    // one engine
  double engines_mw = 0.0, engines_mm2 = 0.0;  // all engines of a tile
  double tile_mw = 0.0, tile_mm2 = 0.0;
  double chip_w = 0.0, chip_mm2 = 0.0;
};

struct EnergyAreaLedger {
  std::vector<LedgerEntry> entries;
  LedgerTotals totals;
};

/// Which components make up a variant, and how many of each.
inline std::vector<std::tuple<std::string, Level, double>> variant_recipe(LedgerVariant v) {
  std::vector<std::tuple<std::string, Level, double>> r = {
      {"edram", Level::tile, 1},          {"bus", Level::tile, 1},
      {"router", Level::tile, 1},         {"activation", Level::tile, 1},
      {"tile_shift_add", Level::tile, 1}, {"maxpool", Level::tile, 1},
      {"tile_output_reg", Level::tile, 1},
      {"nvm_arrays", Level::engine, 1},   {"sample_hold", Level::engine, 1},
      {"engine_shift_add", Level::engine, 1}, {"input_reg", Level::engine, 1},
      {"engine_output_reg", Level::engine, 1}, {"dac", Level::engine, 1},
  };
  if (v == LedgerVariant::isaac) {
    r.emplace_back("cmos_adc", Level::engine, 1);
  } else {
    r.emplace_back("sot_adc_arrays", Level::engine, 1);
    r.emplace_back("voltage_ref", Level::engine, 1);
    r.emplace_back("encoder", Level::engine, 32);
  }
  if (v == LedgerVariant::helix) r.emplace_back("comparator_bank", Level::chip, 1);
  return r;
}

/// Sums a variant's rows: engine = sum of engine rows, tile = tile rows +
/// engines_per_tile * engine, chip = tiles * tile + chip rows.
inline EnergyAreaLedger ledger_rollup(const CrossbarConfig& cfg, LedgerVariant variant,
                                      const ComponentTable& table = default_components()) {
  EnergyAreaLedger ledger;
  double tile_mw = 0, tile_mm2 = 0, chip_mw = 0, chip_mm2 = 0;
  auto& t = ledger.totals;
  for (const auto& [name, level, count] : variant_recipe(variant)) {
    auto it = table.find(name);
    if (it == table.end()) throw Error("ledger: unknown component '" + name + "'");
    ledger.entries.push_back({name, level, count, it->second});
    const double p = it->second.power_mw * count, a = it->second.area_mm2 * count;
    switch (level) {
      case Level::engine: t.engine_mw += p; t.engine_mm2 += a; break;
      case Level::tile: tile_mw += p; tile_mm2 += a; break;
      case Level::chip: chip_mw += p; chip_mm2 += a; break;
    }
  }
  const double engines = static_cast<double>(cfg.engines_per_tile);
  t.engines_mw = engines * t.engine_mw;
  t.engines_mm2 = engines * t.engine_mm2;
  t.tile_mw = tile_mw + t.engines_mw;
  t.tile_mm2 = tile_mm2 + t.engines_mm2;
  const double tiles = static_cast<double>(cfg.tiles);
  t.chip_w = (tiles * t.tile_mw + chip_mw) / 1000.0;
  t.chip_mm2 = tiles * t.tile_mm2 + chip_mm2;
  return ledger;
}

inline ComponentTable components_from_json(const nlohmann::json& j) {
  ComponentTable table = default_components();
  for (const auto& [name, value] : j.items()) {
    if (!value.contains("power_mw") || !value.contains("area_mm2"))
      throw Error("ledger: component '" + name + "' needs power_mw and area_mm2");
    table[name] = {value.at("power_mw").get<double>(), value.at("area_mm2").get<double>()};
  }
  return table;
}

inline nlohmann::json to_json(const EnergyAreaLedger& l) {
  nlohmann::json j;
  auto rows = nlohmann::json::array();
  for (const auto& e : l.entries) {
    const char* level = e.level == Level::tile ? "tile" : e.level == Level::engine ? "engine" : "chip";
    rows.push_back({{"component", e.component}, {"level", level}, {"count", e.count},
                    {"power_mw", e.spec.power_mw}, {"area_mm2", e.spec.area_mm2}});
  }
  j["entries"] = std::move(rows);
  j["engine_mw"] = l.totals.engine_mw;
  j["engine_mm2"] = l.totals.engine_mm2;
  j["engines_mw"] = l.totals.engines_mw;
  j["engines_mm2"] = l.totals.engines_mm2;
  j["tile_mw"] = l.totals.tile_mw;
  j["tile_mm2"] = l.totals.tile_mm2;
  j["chip_w"] = l.totals.chip_w;
  j["chip_mm2"] = l.totals.chip_mm2;
  return j;
}

}  // namespace helix::pim
