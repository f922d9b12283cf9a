#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "helix/genome.hpp"
#include "helix/quant.hpp"

namespace helix::pim {

struct CrossbarConfig {
  std::size_t rows = 128;
  std::size_t cols = 128;
  int bits_per_cell = 2;
  int dac_bits = 1;
  std::size_t arrays_per_engine = 8;
  std::size_t engines_per_tile = 12;
  std::size_t tiles = 168;
  double engine_freq_hz = 10e6;
  int adc_bits = 8;
  // Store 3 - w in a column whose cell sum exceeds half the column maximum,
  // so column currents never need more than rows * max_cell / 2 levels.
  bool column_flip = true;
  std::size_t pipeline_stages = 5;

  std::int64_t max_cell() const { return (std::int64_t{1} << bits_per_cell) - 1; }
  std::size_t array_capacity() const { return tiles * engines_per_tile * arrays_per_engine; }

  void validate() const {
    if (rows == 0 || cols == 0) throw Error("CrossbarConfig: geometry must be positive");
    if (bits_per_cell < 1 || bits_per_cell > 8) throw Error("CrossbarConfig: bits_per_cell out of range");
    if (dac_bits != 1) throw Error("CrossbarConfig: only 1-bit DACs are modeled");
    if (arrays_per_engine == 0 || engines_per_tile == 0) throw Error("CrossbarConfig: counts must be positive");
    if (!(engine_freq_hz > 0.0)) throw Error("CrossbarConfig: engine frequency must be positive");
    if (adc_bits < 1 || adc_bits > 16) throw Error("CrossbarConfig: adc_bits out of range");
    if (pipeline_stages == 0) throw Error("CrossbarConfig: pipeline needs at least one stage");
  }
};

/// ADC bits needed to read any column sum of a rows x (1-bit input, cell) product
/// without clipping, given the largest possible column sum.
inline int required_adc_bits(std::int64_t max_column_sum) {
  int bits = 0;
  while ((std::int64_t{1} << bits) - 1 < max_column_sum) ++bits;
  return bits;
}

/// One programmed array. Cell (r, c) holds a level in [0, 2^bits_per_cell - 1];
/// with word-line r driven by input bit x_r, bit-line c carries sum_r x_r * cell(r, c).
class CrossbarArray {
 public:
  CrossbarArray(std::size_t rows, std::size_t cols, int bits_per_cell)
      : rows_(rows), cols_(cols), max_level_((std::int64_t{1} << bits_per_cell) - 1) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool programmed() const { return programmed_; }

  void program(std::span<const std::int64_t> levels) {
    if (levels.size() != rows_ * cols_) throw Error("CrossbarArray: plane size mismatch");
    for (auto v : levels)
      if (v < 0 || v > max_level_) throw Error("CrossbarArray: cell level out of range");
    cells_.assign(levels.begin(), levels.end());
    programmed_ = true;
  }

  std::int64_t cell(std::size_t r, std::size_t c) const { return cells_[r * cols_ + c]; }

  /// Column currents for one 1-bit input plane, exact in the ideal model.
  std::vector<std::int64_t> analog_mac(std::span<const std::int64_t> input_bits) const {
    if (!programmed_) throw Error("CrossbarArray: analog_mac on an unprogrammed array");
    if (input_bits.size() != rows_) throw Error("CrossbarArray: input plane size mismatch");
    std::vector<std::int64_t> out(cols_, 0);
    for (std::size_t r = 0; r < rows_; ++r) {
      if (input_bits[r] == 0) continue;
      if (input_bits[r] != 1) throw Error("CrossbarArray: inputs must be single bits");
      const std::int64_t* row = cells_.data() + r * cols_;
      for (std::size_t c = 0; c < cols_; ++c) out[c] += row[c];
    }
    return out;
  }

 private:
  std::size_t rows_, cols_;
  std::int64_t max_level_;
  std::vector<std::int64_t> cells_;
  bool programmed_ = false;
};

/// Uniform ADC with unit step: rounds and clips to [0, 2^bits - 1].
inline std::int64_t ideal_adc(std::int64_t column_sum, int bits) {
  return std::clamp<std::int64_t>(column_sum, 0, (std::int64_t{1} << bits) - 1);
}

struct CrossbarStats {
  std::uint64_t array_programs = 0;
  std::uint64_t analog_macs = 0;
  std::uint64_t conversions = 0;
  std::uint64_t clipped_conversions = 0;
};

/// Integer matrix-vector product through the crossbar: W (out x in) is
/// offset-binary, cut into rows x cols blocks with input dimension on
/// word-lines, each block split into bits_per_cell weight planes; inputs are
/// applied one bit plane at a time, bit-line sums pass through the ADC and are
/// shift-added, then the zero-point terms are removed:
///   sum (W'-zw)(X'-zx) = sum W'X' - zx*rowsum(W') - zw*sum X' + n*zw*zx.
struct CrossbarMatvec {
  CrossbarConfig cfg{};
  CrossbarStats* stats = nullptr;

  std::vector<quant::wide_int> operator()(const quant::FixedTensor& w, std::size_t out_dim, std::size_t in_dim,
                                          const quant::FixedTensor& x) const {
    cfg.validate();
    if (w.size() != out_dim * in_dim || x.size() != in_dim) throw Error("CrossbarMatvec: shape mismatch");
    const auto w_planes = quant::slice_weights(w, cfg.bits_per_cell);
    const auto x_planes = quant::bitserial_inputs(x);
    const std::int64_t max_cell = cfg.max_cell();

    std::vector<quant::wide_int> unsigned_acc(out_dim, 0);
    CrossbarArray array(cfg.rows, cfg.cols, cfg.bits_per_cell);
    std::vector<std::int64_t> levels(cfg.rows * cfg.cols);
    std::vector<std::int64_t> input(cfg.rows);
    std::vector<bool> flipped(cfg.cols);

    for (std::size_t r0 = 0; r0 < in_dim; r0 += cfg.rows) {
      const std::size_t nr = std::min(cfg.rows, in_dim - r0);
      for (std::size_t c0 = 0; c0 < out_dim; c0 += cfg.cols) {
        const std::size_t nc = std::min(cfg.cols, out_dim - c0);
        for (const quant::Plane& wp : w_planes) {
          // Transposed placement: cell (i, j) holds W[c0 + j][r0 + i].
          std::fill(levels.begin(), levels.end(), 0);
          for (std::size_t j = 0; j < nc; ++j) {
            std::int64_t colsum = 0;
            for (std::size_t i = 0; i < nr; ++i) colsum += wp.values[(c0 + j) * in_dim + r0 + i];
            flipped[j] = cfg.column_flip && 2 * colsum > static_cast<std::int64_t>(nr) * max_cell;
            for (std::size_t i = 0; i < nr; ++i) {
              const std::int64_t v = wp.values[(c0 + j) * in_dim + r0 + i];
              levels[i * cfg.cols + j] = flipped[j] ? max_cell - v : v;
            }
          }
          array.program(levels);
          if (stats) ++stats->array_programs;

          for (const quant::Plane& xp : x_planes) {
            std::fill(input.begin(), input.end(), 0);
            std::int64_t active = 0;
            for (std::size_t i = 0; i < nr; ++i) active += (input[i] = xp.values[r0 + i]);
            const auto currents = array.analog_mac(input);
            if (stats) ++stats->analog_macs;
            for (std::size_t j = 0; j < nc; ++j) {
              std::int64_t code = ideal_adc(currents[j], cfg.adc_bits);
              if (stats) {
                ++stats->conversions;
                if (code != currents[j]) ++stats->clipped_conversions;
              }
              if (flipped[j]) code = max_cell * active - code;
              unsigned_acc[c0 + j] += static_cast<quant::wide_int>(code) << (wp.shift + xp.shift);
            }
          }
        }
      }
    }

    const quant::wide_int zw = w.spec.zero_point, zx = x.spec.zero_point;
    quant::wide_int sum_x = 0;
    for (auto v : x.data) sum_x += v;
    std::vector<quant::wide_int> y(out_dim);
    for (std::size_t o = 0; o < out_dim; ++o) {
      quant::wide_int rowsum = 0;
      for (std::size_t i = 0; i < in_dim; ++i) rowsum += w.data[o * in_dim + i];
      y[o] = unsigned_acc[o] - zx * rowsum - zw * sum_x + static_cast<quant::wide_int>(in_dim) * zw * zx;
    }
    return y;
  }
};

// ---------------------------------------------------------------------------
// SOT-MRAM ADC array.
//
// A ladder of n = 2^bits cells shares the input voltage on its write bit-lines
// while each cell's read bit-line carries one reference voltage. A higher
// reference lowers the cell's write threshold, so with descending references
// the cells switch as a thermometer: cell k switches iff v_in >= theta(ref_k).
// theta is affine and decreasing in the reference, pinned so the ladder's
// thresholds sit halfway between the design levels v_max * (k + 1) / n.

struct AdcArrayConfig {
  int resolution_bits = 5;
  std::size_t array_rows = 32;
  std::size_t array_cols = 32;
  double freq_hz = 640e6;
  double write_pulse_s = 1.56e-9;
  double encoder_delay_s = 0.0;
  double v_max = 3.0;
  std::vector<double> refs;  // descending, 2^resolution_bits entries

  std::size_t levels() const { return std::size_t{1} << resolution_bits; }

  void validate() const {
    if (resolution_bits < 1 || resolution_bits > 10) throw Error("AdcArrayConfig: resolution out of range");
    if (refs.size() != levels()) throw Error("AdcArrayConfig: need 2^bits reference voltages");
    for (std::size_t k = 1; k < refs.size(); ++k)
      if (!(refs[k] < refs[k - 1])) throw Error("AdcArrayConfig: references must be strictly decreasing");
    if (!(v_max > 0.0)) throw Error("AdcArrayConfig: v_max must be positive");
    if (!(freq_hz > 0.0)) throw Error("AdcArrayConfig: frequency must be positive");
  }
};

/// Evenly spaced descending ladder from `top` to `bottom` volts.
inline std::vector<double> linear_ladder(std::size_t n, double top, double bottom) {
  std::vector<double> refs(n);
  for (std::size_t k = 0; k < n; ++k)
    refs[k] = n == 1 ? top : top - (top - bottom) * static_cast<double>(k) / static_cast<double>(n - 1);
  return refs;
}

inline AdcArrayConfig two_bit_demo_adc() {
  AdcArrayConfig cfg;
  cfg.resolution_bits = 2;
  cfg.refs = {3.0, 2.91, 2.82, 2.73};
  return cfg;
}

/// 5-bit ladder spanning the same 3 V .. 2.73 V window as the 2-bit demo.
inline AdcArrayConfig default_adc() {
  AdcArrayConfig cfg;
  cfg.refs = linear_ladder(cfg.levels(), 3.0, 2.73);
  return cfg;
}

/// Input voltage the converter is designed to read as code k.
inline double design_level(std::size_t k, const AdcArrayConfig& cfg) {
  return cfg.v_max * static_cast<double>(k + 1) / static_cast<double>(cfg.levels());
}

/// Switching threshold of a cell whose read bit-line carries `ref`.
inline double switching_threshold(double ref, const AdcArrayConfig& cfg) {
  const double n = static_cast<double>(cfg.levels());
  const double lo = cfg.v_max * 0.5 / n;
  const double hi = cfg.v_max * (n - 0.5) / n;
  const double top = cfg.refs.front(), bottom = cfg.refs.back();
  if (top == bottom) return lo;
  return lo + (top - ref) * (hi - lo) / (top - bottom);
}

struct AdcResult {
  std::int64_t code = 0;
  std::vector<bool> pattern;  // cell k switched; always a contiguous prefix
  bool under_range = false;
  bool over_range = false;

  std::string pattern_string() const {
    std::string s;
    for (bool b : pattern) s.push_back(b ? '1' : '0');
    return s;
  }
};

inline AdcResult adc_convert(double v_in, const AdcArrayConfig& cfg) {
  cfg.validate();
  AdcResult out;
  out.pattern.resize(cfg.levels());
  std::size_t switched = 0;
  for (std::size_t k = 0; k < cfg.levels(); ++k) {
    out.pattern[k] = v_in >= switching_threshold(cfg.refs[k], cfg);
    if (out.pattern[k]) ++switched;
  }
  out.under_range = switched == 0;
  out.over_range = v_in > cfg.v_max;
  out.code = std::clamp<std::int64_t>(static_cast<std::int64_t>(switched) - 1, 0,
                                      static_cast<std::int64_t>(cfg.levels()) - 1);
  return out;
}

/// One conversion: all ladder cells written in parallel by one pulse, then
/// the encoder. Resetting switched cells is assumed hidden by pipelining.
inline double adc_conversion_latency(const AdcArrayConfig& cfg) { return cfg.write_pulse_s + cfg.encoder_delay_s; }

// ---------------------------------------------------------------------------
// Pipeline timing. One engine pass reads a block through the stages
// fetch -> MAC -> ADC -> shift-add -> write-back; passes are issued one per
// engine cycle so a run of P passes takes P + (stages - 1) cycles.

struct LayerShape {
  std::size_t rows = 0;  // input dimension on word-lines
  std::size_t cols = 0;  // output dimension on bit-lines
  std::size_t invocations = 1;
};

inline std::size_t weight_slices(int weight_bits, const CrossbarConfig& cfg) {
  return static_cast<std::size_t>((weight_bits + cfg.bits_per_cell - 1) / cfg.bits_per_cell);
}

/// Array blocks one copy of the layer occupies.
inline std::size_t layer_arrays(const LayerShape& layer, const CrossbarConfig& cfg, int weight_bits) {
  const std::size_t row_groups = (layer.rows + cfg.rows - 1) / cfg.rows;
  const std::size_t col_groups = (layer.cols * weight_slices(weight_bits, cfg) + cfg.cols - 1) / cfg.cols;
  return row_groups * col_groups;
}

/// Cycles to run every block of the layer through one engine in sequence.
inline std::uint64_t pipeline_cycles(const LayerShape& layer, const CrossbarConfig& cfg, int input_bits,
                                     int weight_bits = 5) {
  cfg.validate();
  if (layer.rows == 0 || layer.cols == 0) throw Error("pipeline_cycles: empty layer");
  if (input_bits < 1) throw Error("pipeline_cycles: input_bits must be positive");
  const std::uint64_t passes = static_cast<std::uint64_t>(layer.invocations) *
                               static_cast<std::uint64_t>(input_bits) * layer_arrays(layer, cfg, weight_bits);
  return passes + (cfg.pipeline_stages - 1);
}

}  // namespace helix::pim
