// helix: base-calling pipeline, accelerator model and experiment driver.
//
//   helix [--config PATH] [--seed N] [--out DIR] [--format csv|json] <command> [options]
//
// Commands: basecall, simulate, mc, train-toy, report. Exit codes: 0 success,
// 2 configuration or usage error, 3 runtime failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "helix/helix.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace helix;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Configuration

struct BasecallOptions {
  std::optional<std::string> signal, truth, probs, reads;
  std::size_t bases = 200;
  double noise_sigma = 0.1;
  std::optional<std::size_t> dwell_min, dwell_max;
  double read_error = 0.0;  // substitutions injected into decoded reads
};

struct SimulateOptions {
  std::vector<std::string> topologies{"guppy", "scrappie", "chiron-toy"};
  std::optional<std::string> components;  // JSON component table overrides
};

struct McOptions {
  std::uint64_t samples = 1'000'000;
  std::vector<double> sizes{40, 50, 60};
  unsigned workers = 0;  // 0: one per hardware thread
  double threshold_s = 1.56e-9;
  double calibration_size_f2 = 60;
  bool no_variation = false;
  std::optional<std::string> params;  // JSON variation parameter overrides
};

struct TrainOptions {
  std::string loss = "loss1";  // loss0 | loss1 | both
  double eta = 1.0;
  std::size_t vote_arity = 3;
  std::size_t pretrain_steps = 0;  // float loss0 steps before the quantized run
  std::size_t steps = 50;
  double lr = 0.05;
  double fd_step = 1e-4;
  std::size_t streams = 4;
  std::size_t bases_per_stream = 24;
  std::size_t max_parameters = 2000;
};

struct RunConfig {
  std::string topology = "toy";
  std::optional<int> bit_width;  // absent: float arithmetic
  std::size_t beam_width = 10;
  std::size_t coverage = 1;
  std::vector<std::string> variants;  // scheme names; empty key means all
  bool variants_given = false;
  std::uint64_t seed = 1;
  std::string out = "out";
  std::string format = "csv";
  BasecallOptions basecall;
  SimulateOptions simulate;
  McOptions mc;
  TrainOptions train;
  std::vector<std::string> report_inputs;
};

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
}

template <typename T>
void take(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

template <typename T>
void take(const json& j, const char* key, std::optional<T>& dst) {
  if (j.contains(key) && !j.at(key).is_null()) dst = j.at(key).get<T>();
}

RunConfig parse_config(const json& j) {
  RunConfig c;
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  reject_unknown(j,
                 {"topology", "bit_width", "beam_width", "coverage", "variants", "seed", "out", "format", "basecall",
                  "simulate", "mc", "train_toy", "report"},
                 "config");
  try {
    take(j, "topology", c.topology);
    take(j, "bit_width", c.bit_width);
    take(j, "beam_width", c.beam_width);
    take(j, "coverage", c.coverage);
    if (j.contains("variants")) {
      c.variants = j.at("variants").get<std::vector<std::string>>();
      c.variants_given = true;
    }
    take(j, "seed", c.seed);
    take(j, "out", c.out);
    take(j, "format", c.format);
    if (j.contains("basecall")) {
      const json& b = j.at("basecall");
      reject_unknown(b, {"signal", "truth", "probs", "reads", "bases", "noise_sigma", "dwell_min", "dwell_max", "read_error"},
                     "basecall");
      take(b, "signal", c.basecall.signal);
      take(b, "truth", c.basecall.truth);
      take(b, "probs", c.basecall.probs);
      take(b, "reads", c.basecall.reads);
      take(b, "bases", c.basecall.bases);
      take(b, "noise_sigma", c.basecall.noise_sigma);
      take(b, "dwell_min", c.basecall.dwell_min);
      take(b, "dwell_max", c.basecall.dwell_max);
      take(b, "read_error", c.basecall.read_error);
    }
    if (j.contains("simulate")) {
      const json& s = j.at("simulate");
      reject_unknown(s, {"topologies", "components"}, "simulate");
      take(s, "topologies", c.simulate.topologies);
      take(s, "components", c.simulate.components);
    }
    if (j.contains("mc")) {
      const json& m = j.at("mc");
      reject_unknown(m, {"samples", "sizes", "workers", "threshold_s", "calibration_size_f2", "no_variation", "params"},
                     "mc");
      take(m, "samples", c.mc.samples);
      take(m, "sizes", c.mc.sizes);
      take(m, "workers", c.mc.workers);
      take(m, "threshold_s", c.mc.threshold_s);
      take(m, "calibration_size_f2", c.mc.calibration_size_f2);
      take(m, "no_variation", c.mc.no_variation);
      take(m, "params", c.mc.params);
    }
    if (j.contains("train_toy")) {
      const json& t = j.at("train_toy");
      reject_unknown(t,
                     {"loss", "eta", "vote_arity", "pretrain_steps", "steps", "lr", "fd_step", "streams",
                      "bases_per_stream", "max_parameters"},
                     "train_toy");
      take(t, "loss", c.train.loss);
      take(t, "eta", c.train.eta);
      take(t, "vote_arity", c.train.vote_arity);
      take(t, "pretrain_steps", c.train.pretrain_steps);
      take(t, "steps", c.train.steps);
      take(t, "lr", c.train.lr);
      take(t, "fd_step", c.train.fd_step);
      take(t, "streams", c.train.streams);
      take(t, "bases_per_stream", c.train.bases_per_stream);
      take(t, "max_parameters", c.train.max_parameters);
    }
    if (j.contains("report")) {
      const json& r = j.at("report");
      reject_unknown(r, {"inputs"}, "report");
      take(r, "inputs", c.report_inputs);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

/// Input files named in a config resolve against the config's directory.
/// `out` stays relative to the working directory.
void rebase_inputs(RunConfig& c, const fs::path& config_path) {
  const fs::path dir = config_path.parent_path();
  auto rebase = [&](std::string& p) {
    if (!p.empty() && fs::path(p).is_relative()) p = (dir / p).lexically_normal().string();
  };
  for (auto* opt : {&c.basecall.signal, &c.basecall.truth, &c.basecall.probs, &c.basecall.reads,
                    &c.simulate.components, &c.mc.params})
    if (*opt) rebase(**opt);
  for (auto& in : c.report_inputs) rebase(in);
}

void require_file(const std::optional<std::string>& path, const char* what) {
  if (path && !fs::is_regular_file(*path)) throw ConfigError(std::string(what) + " file not found: " + *path);
}

void validate(const RunConfig& c) {
  try {
    nn::topologies::by_name(c.topology);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (c.bit_width && (*c.bit_width < 3 || *c.bit_width > 32)) throw ConfigError("bit_width must be in [3,32]");
  if (c.beam_width == 0) throw ConfigError("beam_width must be positive");
  if (c.coverage == 0) throw ConfigError("coverage must be positive");
  if (c.format != "csv" && c.format != "json") throw ConfigError("format must be csv or json");
  require_file(c.basecall.signal, "signal");
  require_file(c.basecall.truth, "truth");
  require_file(c.basecall.probs, "probability");
  require_file(c.basecall.reads, "read set");
  require_file(c.simulate.components, "components");
  require_file(c.mc.params, "variation parameter");
  for (const auto& in : c.report_inputs)
    if (!fs::is_regular_file(in)) throw ConfigError("report input not found: " + in);
  if (!(c.basecall.read_error >= 0.0 && c.basecall.read_error <= 1.0)) throw ConfigError("read_error must be in [0,1]");
}

json load_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open " + path);
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Output helpers

struct Output {
  fs::path dir;
  std::string format;

  fs::path path(const std::string& stem, const std::string& ext) const { return dir / (stem + "." + ext); }
  std::ofstream open(const std::string& stem, const std::string& ext) const {
    fs::create_directories(dir);
    std::ofstream os(path(stem, ext));
    if (!os) throw Error("cannot write " + path(stem, ext).string());
    return os;
  }
  void write_json(const std::string& stem, const json& j) const { open(stem, "json") << j.dump(2) << '\n'; }
  bool csv() const { return format == "csv"; }
};

// ---------------------------------------------------------------------------
// basecall

std::ifstream open_input(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path);
  return is;
}

void write_consensus(const Output& out, const std::string& stem, const Sequence& consensus,
                     const std::vector<BaseTally>& tallies) {
  if (out.csv()) {
    auto os = out.open(stem, "csv");
    os << "position,A,C,G,T,vote\n";
    for (std::size_t i = 0; i < tallies.size(); ++i) {
      const auto v = majority(tallies[i]);
      os << i << ',' << tallies[i][0] << ',' << tallies[i][1] << ',' << tallies[i][2] << ',' << tallies[i][3] << ','
         << (v ? to_char(*v) : '-') << '\n';
    }
  } else {
    json j;
    j["consensus"] = to_string(consensus);
    auto t = json::array();
    for (const auto& x : tallies) t.push_back({{"A", x[0]}, {"C", x[1]}, {"G", x[2]}, {"T", x[3]}});
    j["tallies"] = std::move(t);
    out.write_json(stem, j);
  }
}

int cmd_basecall(const RunConfig& c, const Output& out) {
  const auto& b = c.basecall;

  // Standalone decoding of a probability matrix.
  if (b.probs) {
    auto is = open_input(*b.probs);
    const nn::ProbMatrix p = io::read_prob_csv(is);
    if (p.timesteps() == 0) throw ConfigError("probability file has no rows: " + *b.probs);
    const auto r = ctc::beam_search(p, c.beam_width);
    if (out.csv()) {
      auto os = out.open("decoded", "csv");
      os.precision(17);
      os << "read,probability\n" << r.read.str() << ',' << r.probability << '\n';
    } else {
      out.write_json("decoded", {{"read", r.read.str()}, {"probability", r.probability}});
    }
    std::cout << r.read.str() << '\t' << r.probability << '\n';
    return 0;
  }

  // Voting over a given read set.
  if (b.reads) {
    auto is = open_input(*b.reads);
    const auto reads = io::read_reads(is);
    if (reads.empty()) throw ConfigError("read set is empty: " + *b.reads);
    const auto cons = vote::align_and_vote(reads);
    if (out.csv()) write_consensus(out, "consensus", cons.consensus, cons.tallies);
    else out.write_json("consensus", vote::to_json(cons));
    std::cout << cons.str() << '\n';
    return 0;
  }

  const nn::NetTopology topo = nn::topologies::by_name(c.topology);
  std::size_t stride = 1;
  for (const auto& l : topo.conv) stride *= l.stride;
  synthetic::SignalConfig sc;
  sc.noise_sigma = b.noise_sigma;
  // Strided front ends need every base to last at least one stride.
  sc.dwell_min = b.dwell_min.value_or(stride);
  sc.dwell_max = b.dwell_max.value_or(3 * stride);
  try {
    sc.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }

  seat::Model model;
  model.topology = topo;
  model.weights = synthetic::level_classifier(topo, sc);
  model.bit_width = c.bit_width.value_or(0);
  model.beam_width = c.beam_width;
  std::mt19937_64 rng(c.seed);

  // Each pass is one molecule's signal: read windows with their origin in
  // truth coordinates.
  std::optional<Sequence> truth;
  std::vector<Read> reads;
  std::vector<Sequence> window_truths;
  auto decode_pass = [&](const std::vector<double>& samples, const std::vector<std::size_t>* base_index) {
    if (samples.empty()) throw ConfigError("signal is empty");
    if (samples.size() < topo.input_length)
      throw ConfigError("signal has " + std::to_string(samples.size()) + " samples, the " + topo.name +
                        " window needs " + std::to_string(topo.input_length));
    for (std::size_t s : nn::window_starts(samples.size(), topo.input_length, topo.sliding_offset)) {
      Read r = model.decode(std::span<const double>(samples).subspan(s, topo.input_length));
      if (b.read_error > 0.0)
        r.symbols = synthetic::substitute(r.symbols, b.read_error, synthetic::SubstitutionMode::uniform, rng);
      if (base_index) {
        r.origin_offset = (*base_index)[s];
        window_truths.emplace_back(truth->begin() + static_cast<std::ptrdiff_t>((*base_index)[s]),
                                   truth->begin() + static_cast<std::ptrdiff_t>((*base_index)[s + topo.input_length - 1] + 1));
      }
      reads.push_back(std::move(r));
    }
  };

  if (b.signal) {
    auto is = open_input(*b.signal);
    const auto samples = io::read_signal(is);
    if (b.truth) {
      auto ts = open_input(*b.truth);
      const auto t = io::read_reads(ts);
      if (t.size() != 1) throw ConfigError("truth file must hold exactly one sequence");
      truth = t.front().symbols;
    }
    decode_pass(samples, nullptr);
    // Place reads against the truth by their longest chain match.
    if (truth)
      for (Read& r : reads) {
        const auto m = vote::chain_match(*truth, r.symbols);
        r.origin_offset = m.length ? m.pos_a - std::min(m.pos_a, m.pos_b) : 0;
      }
  } else {
    truth = synthetic::random_sequence(b.bases, rng);
    for (std::size_t pass = 0; pass < c.coverage; ++pass) {
      const auto sig = synthetic::generate_signal(*truth, sc, rng);
      decode_pass(sig.samples, &sig.base_index);
    }
  }

  {
    auto os = out.open("reads", "txt");
    for (const auto& r : reads) os << r.str() << '\n';
  }
  json summary{{"topology", topo.name},
               {"bit_width", model.bit_width},
               {"beam_width", model.beam_width},
               {"reads", reads.size()}};

  if (truth) {
    const ErrorReport report = classify_errors(reads, *truth);
    Sequence consensus;
    for (const auto& t : report.tallies)
      if (auto v = majority(t)) consensus.push_back(*v);
    write_consensus(out, "consensus", consensus, report.tallies);
    out.write_json("errors", to_json(report));
    double read_acc = 0.0;
    for (std::size_t i = 0; i < reads.size(); ++i)
      read_acc += read_accuracy(reads[i].symbols, window_truths.empty() ? *truth : window_truths[i]);
    read_acc /= static_cast<double>(reads.size());
    summary["read_accuracy"] = read_acc;
    summary["vote_accuracy"] = read_accuracy(consensus, *truth);
    summary["random_errors"] = report.random_count;
    summary["systematic_errors"] = report.systematic_count;
  } else {
    const auto cons = vote::align_and_vote(reads);
    write_consensus(out, "consensus", cons.consensus, cons.tallies);
  }
  out.write_json("summary", summary);
  std::cout << summary.dump() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// simulate

int cmd_simulate(const RunConfig& c, const Output& out) {
  std::vector<pim::Scheme> schemes;
  if (c.variants_given) {
    if (c.variants.empty()) throw ConfigError("variant list is empty");
    for (const auto& v : c.variants) {
      try {
        schemes.push_back(pim::scheme_from_string(v));
      } catch (const Error& e) {
        throw ConfigError(e.what());
      }
    }
  } else {
    schemes.assign(pim::kSchemes.begin(), pim::kSchemes.end());
  }
  if (c.simulate.topologies.empty()) throw ConfigError("simulate: topology list is empty");
  pim::ComponentTable components = pim::default_components();
  if (c.simulate.components) {
    try {
      components = pim::components_from_json(load_json(*c.simulate.components));
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }

  std::vector<report::SchemeRow> rows;
  for (const auto& name : c.simulate.topologies) {
    nn::NetTopology topo;
    try {
      topo = nn::topologies::by_name(name);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
    for (const auto& w : topo.shape_warnings()) std::cerr << "warning: " << w << '\n';
    const auto results = pim::evaluate_schemes(topo, {}, {}, {}, components);
    for (const auto& r : results)
      if (std::find(schemes.begin(), schemes.end(), r.scheme) != schemes.end()) rows.push_back(report::from_result(r));
  }

  if (out.csv()) {
    auto os = out.open("simulation", "csv");
    report::write_simulation_csv(os, rows);
  } else {
    json j = json::array();
    for (const auto& r : rows)
      j.push_back({{"topology", r.topology},
                   {"scheme", pim::to_string(r.scheme)},
                   {"bases_per_s", r.bases_per_s},
                   {"watts", r.watts},
                   {"mm2", r.mm2},
                   {"bases_per_s_per_w", r.per_watt()},
                   {"bases_per_s_per_mm2", r.per_mm2()}});
    out.write_json("simulation", j);
  }
  json ledgers;
  for (auto v : {pim::LedgerVariant::isaac, pim::LedgerVariant::helix_no_comparators, pim::LedgerVariant::helix})
    ledgers[pim::to_string(v)] = pim::to_json(pim::ledger_rollup({}, v, components));
  out.write_json("ledger", ledgers);
  for (const auto& r : rows)
    std::printf("%-10s %-7s %12.4g bases/s %8.3f W %8.3f mm2\n", r.topology.c_str(), pim::to_string(r.scheme),
                r.bases_per_s, r.watts, r.mm2);
  return 0;
}

// ---------------------------------------------------------------------------
// mc

void apply_distribution(const json& j, const char* key, variation::Distribution& d) {
  if (!j.contains(key)) return;
  const json& e = j.at(key);
  reject_unknown(e, {"mean", "rel_sigma"}, std::string("params.") + key);
  take(e, "mean", d.mean);
  take(e, "rel_sigma", d.rel_sigma);
}

int cmd_mc(const RunConfig& c, const Output& out) {
  const auto& m = c.mc;
  if (m.samples < 10'000) throw ConfigError("mc: at least 10^4 samples required");
  if (m.sizes.empty()) throw ConfigError("mc: size list is empty");
  variation::VariationParams p;
  if (m.params) {
    const json j = load_json(*m.params);
    reject_unknown(j, {"width", "length", "vth", "ra", "area", "delta"}, "params");
    try {
      apply_distribution(j, "width", p.width);
      apply_distribution(j, "length", p.length);
      apply_distribution(j, "vth", p.vth);
      apply_distribution(j, "ra", p.ra);
      apply_distribution(j, "area", p.area);
      apply_distribution(j, "delta", p.delta);
      p.validate();
    } catch (const std::exception& e) {
      throw ConfigError(std::string("params: ") + e.what());
    }
  }
  variation::DeviceConstants k;
  // Jc0 is fitted on the varied parameters even for a variation-free run, so
  // both see the same device.
  k.jc0 = variation::calibrate_jc0(p, m.calibration_size_f2, k, m.threshold_s);
  if (m.no_variation) p = p.without_variation();

  std::vector<std::pair<variation::McConfig, variation::McResult>> runs;
  for (double size : m.sizes) {
    variation::McConfig cfg;
    cfg.size_f2 = size;
    cfg.samples = m.samples;
    cfg.seed = c.seed;
    cfg.threshold_s = m.threshold_s;
    cfg.workers = m.workers ? m.workers : std::max(1u, std::thread::hardware_concurrency());
    runs.emplace_back(cfg, variation::mc_sweep(p, k, cfg));
  }

  if (out.csv()) {
    auto hs = out.open("mc_histogram", "csv");
    hs << "size_f2,log10_s_lo,log10_s_hi,count\n";
    for (const auto& [cfg, r] : runs)
      for (std::size_t i = 0; i < r.histogram.size(); ++i) {
        const double w = (cfg.hist_hi - cfg.hist_lo) / static_cast<double>(cfg.hist_bins);
        hs << cfg.size_f2 << ',' << cfg.hist_lo + w * i << ',' << cfg.hist_lo + w * (i + 1) << ',' << r.histogram[i]
           << '\n';
      }
    auto ss = out.open("mc_summary", "csv");
    ss.precision(10);
    ss << "size_f2,samples,seed,worst_s,mean_log_s,threshold_s,above_threshold\n";
    for (const auto& [cfg, r] : runs)
      ss << cfg.size_f2 << ',' << r.samples << ',' << cfg.seed << ',' << r.worst_s << ',' << r.mean_log_s << ','
         << cfg.threshold_s << ',' << r.above_threshold << '\n';
  } else {
    json j = json::array();
    for (const auto& [cfg, r] : runs) {
      json e = variation::to_json(r, cfg);
      e["histogram"] = r.histogram;
      e["hist_log10_s"] = {cfg.hist_lo, cfg.hist_hi};
      j.push_back(std::move(e));
    }
    out.write_json("mc", {{"jc0", k.jc0}, {"runs", j}});
  }
  for (const auto& [cfg, r] : runs)
    std::printf("%5.1f F2: worst %.3e s, %llu of %llu above %.3f ns\n", cfg.size_f2, r.worst_s,
                static_cast<unsigned long long>(r.above_threshold), static_cast<unsigned long long>(r.samples),
                cfg.threshold_s * 1e9);
  return 0;
}

// ---------------------------------------------------------------------------
// train-toy

int cmd_train_toy(const RunConfig& c, const Output& out) {
  const auto& t = c.train;
  if (t.loss != "loss0" && t.loss != "loss1" && t.loss != "both") throw ConfigError("train_toy.loss must be loss0, loss1 or both");
  seat::SeatConfig seat_cfg{t.eta, t.vote_arity};
  try {
    seat_cfg.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (t.loss != "loss0" && t.eta == 0.0)
    std::cerr << "warning: eta = 0 leaves loss1 without a per-read term; training is not expected to converge\n";

  const nn::NetTopology topo = nn::topologies::by_name(c.topology);
  std::mt19937_64 rng(c.seed);
  seat::Model model;
  model.topology = topo;
  model.weights = nn::random_weights(topo, rng);
  model.beam_width = c.beam_width;
  if (model.weights.parameter_count() > t.max_parameters)
    throw ConfigError(topo.name + " has " + std::to_string(model.weights.parameter_count()) +
                      " parameters, above the finite-difference budget of " + std::to_string(t.max_parameters));
  seat::ToyTaskConfig task;
  task.streams = t.streams;
  task.bases_per_stream = t.bases_per_stream;
  const auto data = seat::make_toy_dataset(topo, task, rng);

  seat::TrainConfig cfg;
  cfg.seat = seat_cfg;
  cfg.lr = t.lr;
  cfg.fd_step = t.fd_step;
  cfg.max_parameters = t.max_parameters;
  if (t.pretrain_steps > 0) {
    cfg.steps = t.pretrain_steps;
    const auto pre = seat::train_toy(model, data, cfg);
    if (pre.diverged) {
      std::cerr << "error: pretraining diverged\n";
      return kExitRuntime;
    }
    model = pre.model;
  }
  model.bit_width = c.bit_width.value_or(0);
  cfg.steps = t.steps;

  std::vector<std::pair<std::string, seat::LossKind>> runs;
  if (t.loss != "loss1") runs.emplace_back("loss0", seat::LossKind::loss0);
  if (t.loss != "loss0") runs.emplace_back("loss1", seat::LossKind::loss1);
  bool diverged = false;
  json summary = json::object();
  for (const auto& [name, kind] : runs) {
    cfg.loss = kind;
    const auto r = seat::train_toy(model, data, cfg);
    const std::string stem = runs.size() > 1 ? "trace_" + name : "trace";
    if (out.csv()) {
      auto os = out.open(stem, "csv");
      seat::write_trace_csv(os, r.trace);
    } else {
      json rows = json::array();
      for (const auto& row : r.trace)
        rows.push_back({{"step", row.step},
                        {"loss", row.loss},
                        {"read_accuracy", row.read_accuracy},
                        {"vote_accuracy", row.vote_accuracy}});
      out.write_json(stem, {{"loss", name}, {"diverged", r.diverged}, {"trace", rows}});
    }
    const auto& last = r.trace.back();
    summary[name] = {{"diverged", r.diverged},
                     {"final_loss", last.loss},
                     {"read_accuracy", last.read_accuracy},
                     {"vote_accuracy", last.vote_accuracy}};
    diverged = diverged || r.diverged;
  }
  std::cout << summary.dump() << '\n';
  if (diverged) {
    std::cerr << "error: training diverged (non-finite loss)\n";
    return kExitRuntime;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// report

int cmd_report(const RunConfig& c, const Output& out) {
  if (c.report_inputs.empty()) throw ConfigError("report: no simulation CSV given");
  std::vector<report::SchemeRow> rows;
  for (const auto& in : c.report_inputs) {
    auto is = open_input(in);
    auto part = report::read_simulation_csv(is);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  const auto cmp = report::scheme_comparison(rows);
  {
    auto os = out.open("comparison", "csv");
    report::write_comparison_csv(os, cmp);
  }
  const json j = report::to_json(cmp);
  out.write_json("comparison", j);
  std::cout << j["ratios"].dump() << '\n';
  for (const auto& v : cmp.violations) std::cerr << "warning: ladder not monotone: " << v << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Helix base-calling pipeline and accelerator model"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir, format;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "random seed (overrides config)");
  app.add_option("--out", out_dir, "output directory (overrides config)");
  app.add_option("--format", format, "report format")->check(CLI::IsMember({"csv", "json"}));

  std::optional<std::string> signal, truth, probs, reads;
  auto* basecall = app.add_subcommand("basecall", "base-call a signal (synthetic by default), decode a "
                                                  "probability CSV, or vote a read set");
  basecall->add_option("--signal", signal, "signal file (comma or newline separated)");
  basecall->add_option("--truth", truth, "truth sequence for error classification");
  basecall->add_option("--probs", probs, "probability matrix CSV (T rows of A,C,G,T,blank) to decode");
  basecall->add_option("--reads", reads, "newline-delimited reads to vote");
  auto* simulate = app.add_subcommand("simulate", "throughput, power and area per scheme");
  std::optional<std::vector<std::string>> variants;
  simulate->add_option("--variants", variants, "schemes to report (ISAAC, 16-bit, SEAT, ADC, CTC, Helix)");
  auto* mc = app.add_subcommand("mc", "write-duration Monte Carlo under process variation");
  std::optional<std::uint64_t> samples;
  mc->add_option("--samples", samples, "draws per cell size");
  auto* train = app.add_subcommand("train-toy", "finite-difference training of the toy base-caller");
  std::optional<std::string> loss;
  train->add_option("--loss", loss, "loss0, loss1 or both");
  auto* rep = app.add_subcommand("report", "normalize simulation CSVs to ISAAC");
  std::vector<std::string> inputs;
  rep->add_option("inputs", inputs, "simulation CSV files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) {
      cfg = parse_config(load_json(config_path));
      rebase_inputs(cfg, config_path);
    }
    if (seed) cfg.seed = *seed;
    if (out_dir) cfg.out = *out_dir;
    if (format) cfg.format = *format;
    if (signal) cfg.basecall.signal = signal;
    if (truth) cfg.basecall.truth = truth;
    if (probs) cfg.basecall.probs = probs;
    if (reads) cfg.basecall.reads = reads;
    if (variants) {
      cfg.variants = *variants;
      cfg.variants_given = true;
    }
    if (samples) cfg.mc.samples = *samples;
    if (loss) cfg.train.loss = *loss;
    if (!inputs.empty()) cfg.report_inputs = inputs;
    validate(cfg);
    const Output out{cfg.out, cfg.format};

    if (*basecall) return cmd_basecall(cfg, out);
    if (*simulate) return cmd_simulate(cfg, out);
    if (*mc) return cmd_mc(cfg, out);
    if (*train) return cmd_train_toy(cfg, out);
    if (*rep) return cmd_report(cfg, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}
