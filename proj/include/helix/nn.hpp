#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "helix/genome.hpp"
#include "helix/quant.hpp"

namespace helix::nn {

/// Dense row-major matrix. For sequences, rows are timesteps and columns are
/// channels.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// ---------------------------------------------------------------------------
// Matrix-vector arithmetic policies. A policy turns a weight matrix into a
// prepared operator once per forward pass and applies it to input vectors.

/// Plain double-precision arithmetic.
struct FloatArithmetic {
  using Prepared = const Matrix*;

  Prepared prepare(const Matrix& w) const { return &w; }

  std::vector<double> apply(Prepared w, std::span<const double> x) const {
    std::vector<double> y(w->rows, 0.0);
    for (std::size_t r = 0; r < w->rows; ++r) {
      double acc = 0.0;
      const double* wr = w->data.data() + r * w->cols;
      for (std::size_t c = 0; c < w->cols; ++c) acc += wr[c] * x[c];
      y[r] = acc;
    }
    return y;
  }
};

/// Computes the signed integer product W x from quantized operands.
struct DirectIntegerBackend {
  std::vector<quant::wide_int> operator()(const quant::FixedTensor& w, std::size_t rows,
                                          std::size_t cols, const quant::FixedTensor& x) const {
    return quant::integer_matvec<quant::wide_int>(w.signed_values(), rows, cols, x.signed_values());
  }
};

/// Per-tensor symmetric fixed-point arithmetic: weights and each input vector
/// are quantized to `bit_width`, the product is formed in integers by
/// `Backend`, then rescaled.
template <typename Backend = DirectIntegerBackend>
struct QuantizedArithmetic {
  int bit_width = 8;
  Backend backend{};

  struct Prepared {
    quant::FixedTensor codes;
    std::size_t rows = 0;
    std::size_t cols = 0;
  };

  Prepared prepare(const Matrix& w) const {
    return {quant::quantize(w.data, {w.rows, w.cols}, bit_width), w.rows, w.cols};
  }

  std::vector<double> apply(const Prepared& w, std::span<const double> x) const {
    quant::FixedTensor xq = quant::quantize(x, {x.size()}, bit_width);
    const auto acc = backend(w.codes, w.rows, w.cols, xq);
    const double s = w.codes.spec.scale * xq.spec.scale;
    std::vector<double> y(acc.size());
    for (std::size_t i = 0; i < acc.size(); ++i) y[i] = static_cast<double>(acc[i]) * s;
    return y;
  }
};

// ---------------------------------------------------------------------------
// Convolution

/// Convolution filter K x N x M stored as an M x (K*N) matrix; column k*N + n
/// holds tap k of input channel n.
struct ConvWeights {
  std::size_t kernel = 1;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t stride = 1;
  Matrix filter;
  std::vector<double> bias;

  ConvWeights() = default;
  ConvWeights(std::size_t k, std::size_t n, std::size_t m, std::size_t s)
      : kernel(k), in_channels(n), out_channels(m), stride(s), filter(m, k * n), bias(m, 0.0) {}

  double& tap(std::size_t k, std::size_t n, std::size_t m) { return filter(m, k * in_channels + n); }
};

inline std::size_t conv_output_length(std::size_t length, std::size_t stride) {
  return (length + stride - 1) / stride;
}

/// Same-padded strided 1-D convolution, no activation.
/// Output length is ceil(L / stride); taps outside the input read zero.
template <typename Arithmetic = FloatArithmetic>
Matrix conv1d_forward(const Matrix& input, const ConvWeights& w, const Arithmetic& arith = {}) {
  if (w.stride == 0) throw Error("conv1d: stride must be positive");
  if (input.cols != w.in_channels) throw Error("conv1d: input channels do not match filter");
  if (w.filter.rows != w.out_channels || w.filter.cols != w.kernel * w.in_channels)
    throw Error("conv1d: filter shape mismatch");
  if (input.rows < w.kernel) throw Error("conv1d: input shorter than kernel");
  const std::size_t out_len = conv_output_length(input.rows, w.stride);
  const auto pad = static_cast<std::ptrdiff_t>((w.kernel - 1) / 2);
  auto prepared = arith.prepare(w.filter);
  Matrix out(out_len, w.out_channels);
  std::vector<double> patch(w.kernel * w.in_channels);
  for (std::size_t o = 0; o < out_len; ++o) {
    const auto center = static_cast<std::ptrdiff_t>(o * w.stride);
    for (std::size_t k = 0; k < w.kernel; ++k) {
      const std::ptrdiff_t src = center + static_cast<std::ptrdiff_t>(k) - pad;
      for (std::size_t n = 0; n < w.in_channels; ++n) {
        patch[k * w.in_channels + n] =
            (src >= 0 && src < static_cast<std::ptrdiff_t>(input.rows))
                ? input(static_cast<std::size_t>(src), n)
                : 0.0;
      }
    }
    auto y = arith.apply(prepared, patch);
    for (std::size_t m = 0; m < w.out_channels; ++m) out(o, m) = y[m] + w.bias[m];
  }
  return out;
}

// ---------------------------------------------------------------------------
// GRU, written exactly as
//   Z_t = sigmoid(W_z X_t + U_z H_{t-1}) + b_z
//   R_t = sigmoid(W_r X_t + U_r H_{t-1}) + b_r
//   H~_t = tanh(W_h X_t + U_h (R_t * H_{t-1})) + b_h
//   H_t = Z_t * H_{t-1} + (1 - Z_t) * H~_t
// Note the biases sit outside the nonlinearities.

struct GruParams {
  Matrix W_z, U_z, W_r, U_r, W_h, U_h;
  std::vector<double> b_z, b_r, b_h;

  GruParams() = default;
  GruParams(std::size_t input, std::size_t hidden)
      : W_z(hidden, input), U_z(hidden, hidden), W_r(hidden, input), U_r(hidden, hidden),
        W_h(hidden, input), U_h(hidden, hidden),
        b_z(hidden, 0.0), b_r(hidden, 0.0), b_h(hidden, 0.0) {}

  std::size_t input_size() const { return W_z.cols; }
  std::size_t hidden_size() const { return W_z.rows; }

  void validate() const {
    const std::size_t h = hidden_size(), in = input_size();
    for (const Matrix* m : {&W_z, &W_r, &W_h})
      if (m->rows != h || m->cols != in) throw Error("GruParams: input weight shape mismatch");
    for (const Matrix* m : {&U_z, &U_r, &U_h})
      if (m->rows != h || m->cols != h) throw Error("GruParams: recurrent weight shape mismatch");
    for (const auto* b : {&b_z, &b_r, &b_h})
      if (b->size() != h) throw Error("GruParams: bias shape mismatch");
  }
};

template <typename Arithmetic = FloatArithmetic>
Matrix gru_forward(const GruParams& p, const Matrix& x_seq, std::span<const double> h0,
                   const Arithmetic& arith = {}) {
  p.validate();
  const std::size_t h = p.hidden_size();
  if (x_seq.cols != p.input_size()) throw Error("gru_forward: input width mismatch");
  if (h0.size() != h) throw Error("gru_forward: initial state width mismatch");
  auto Wz = arith.prepare(p.W_z), Uz = arith.prepare(p.U_z);
  auto Wr = arith.prepare(p.W_r), Ur = arith.prepare(p.U_r);
  auto Wh = arith.prepare(p.W_h), Uh = arith.prepare(p.U_h);

  Matrix out(x_seq.rows, h);
  std::vector<double> state(h0.begin(), h0.end()), gated(h);
  for (std::size_t t = 0; t < x_seq.rows; ++t) {
    auto x = x_seq.row(t);
    auto zx = arith.apply(Wz, x), zh = arith.apply(Uz, state);
    auto rx = arith.apply(Wr, x), rh = arith.apply(Ur, state);
    std::vector<double> z(h), r(h);
    for (std::size_t i = 0; i < h; ++i) {
      z[i] = sigmoid(zx[i] + zh[i]) + p.b_z[i];
      r[i] = sigmoid(rx[i] + rh[i]) + p.b_r[i];
      gated[i] = r[i] * state[i];
    }
    auto hx = arith.apply(Wh, x), hh = arith.apply(Uh, gated);
    for (std::size_t i = 0; i < h; ++i) {
      const double cand = std::tanh(hx[i] + hh[i]) + p.b_h[i];
      state[i] = z[i] * state[i] + (1.0 - z[i]) * cand;
      out(t, i) = state[i];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// LSTM (standard formulation, biases inside the gates).

struct LstmParams {
  Matrix W_i, U_i, W_f, U_f, W_g, U_g, W_o, U_o;
  std::vector<double> b_i, b_f, b_g, b_o;

  LstmParams() = default;
  LstmParams(std::size_t input, std::size_t hidden)
      : W_i(hidden, input), U_i(hidden, hidden), W_f(hidden, input), U_f(hidden, hidden),
        W_g(hidden, input), U_g(hidden, hidden), W_o(hidden, input), U_o(hidden, hidden),
        b_i(hidden, 0.0), b_f(hidden, 0.0), b_g(hidden, 0.0), b_o(hidden, 0.0) {}

  std::size_t input_size() const { return W_i.cols; }
  std::size_t hidden_size() const { return W_i.rows; }

  void validate() const {
    const std::size_t h = hidden_size(), in = input_size();
    for (const Matrix* m : {&W_i, &W_f, &W_g, &W_o})
      if (m->rows != h || m->cols != in) throw Error("LstmParams: input weight shape mismatch");
    for (const Matrix* m : {&U_i, &U_f, &U_g, &U_o})
      if (m->rows != h || m->cols != h) throw Error("LstmParams: recurrent weight shape mismatch");
    for (const auto* b : {&b_i, &b_f, &b_g, &b_o})
      if (b->size() != h) throw Error("LstmParams: bias shape mismatch");
  }
};

template <typename Arithmetic = FloatArithmetic>
Matrix lstm_forward(const LstmParams& p, const Matrix& x_seq, const Arithmetic& arith = {}) {
  p.validate();
  const std::size_t h = p.hidden_size();
  if (x_seq.cols != p.input_size()) throw Error("lstm_forward: input width mismatch");
  auto Wi = arith.prepare(p.W_i), Ui = arith.prepare(p.U_i);
  auto Wf = arith.prepare(p.W_f), Uf = arith.prepare(p.U_f);
  auto Wg = arith.prepare(p.W_g), Ug = arith.prepare(p.U_g);
  auto Wo = arith.prepare(p.W_o), Uo = arith.prepare(p.U_o);
  Matrix out(x_seq.rows, h);
  std::vector<double> hs(h, 0.0), cs(h, 0.0);
  for (std::size_t t = 0; t < x_seq.rows; ++t) {
    auto x = x_seq.row(t);
    auto ix = arith.apply(Wi, x), ih = arith.apply(Ui, hs);
    auto fx = arith.apply(Wf, x), fh = arith.apply(Uf, hs);
    auto gx = arith.apply(Wg, x), gh = arith.apply(Ug, hs);
    auto ox = arith.apply(Wo, x), oh = arith.apply(Uo, hs);
    for (std::size_t k = 0; k < h; ++k) {
      const double i = sigmoid(ix[k] + ih[k] + p.b_i[k]);
      const double f = sigmoid(fx[k] + fh[k] + p.b_f[k]);
      const double g = std::tanh(gx[k] + gh[k] + p.b_g[k]);
      const double o = sigmoid(ox[k] + oh[k] + p.b_o[k]);
      cs[k] = f * cs[k] + i * g;
      hs[k] = o * std::tanh(cs[k]);
      out(t, k) = hs[k];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Base probability matrix

inline constexpr std::size_t kSymbols = CtcSymbol::kCount;

/// Per-timestep distribution over {A, C, G, T, blank}.
class ProbMatrix {
 public:
  ProbMatrix() = default;
  explicit ProbMatrix(std::size_t timesteps) : data_(timesteps * kSymbols, 0.0) {}
  ProbMatrix(std::initializer_list<std::array<double, kSymbols>> rows) {
    for (const auto& r : rows) data_.insert(data_.end(), r.begin(), r.end());
  }

  std::size_t timesteps() const { return data_.size() / kSymbols; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t t, std::size_t s) { return data_[t * kSymbols + s]; }
  double operator()(std::size_t t, std::size_t s) const { return data_[t * kSymbols + s]; }
  double operator()(std::size_t t, CtcSymbol s) const { return (*this)(t, s.index()); }
  std::span<const double> row(std::size_t t) const { return {data_.data() + t * kSymbols, kSymbols}; }

  /// Rows non-negative and summing to 1 within `tol`.
  bool is_normalized(double tol = 1e-9) const {
    for (std::size_t t = 0; t < timesteps(); ++t) {
      double sum = 0.0;
      for (double p : row(t)) {
        if (!(p >= 0.0)) return false;
        sum += p;
      }
      if (std::abs(sum - 1.0) > tol) return false;
    }
    return true;
  }

  std::size_t argmax(std::size_t t) const {
    auto r = row(t);
    return static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
  }

 private:
  std::vector<double> data_;
};

/// Row-wise softmax of a T x 5 logit matrix.
inline ProbMatrix softmax_rows(const Matrix& logits) {
  if (logits.cols != kSymbols) throw Error("softmax_rows: expected 5 logit columns");
  ProbMatrix p(logits.rows);
  for (std::size_t t = 0; t < logits.rows; ++t) {
    auto r = logits.row(t);
    const double m = *std::max_element(r.begin(), r.end());
    double sum = 0.0;
    for (std::size_t s = 0; s < kSymbols; ++s) sum += (p(t, s) = std::exp(r[s] - m));
    for (std::size_t s = 0; s < kSymbols; ++s) p(t, s) /= sum;
  }
  return p;
}

// ---------------------------------------------------------------------------
// Topology

enum class RecurrentType { gru, lstm };

struct ConvLayerSpec {
  std::size_t kernel = 1;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t stride = 1;
};

struct RecurrentSpec {
  RecurrentType type = RecurrentType::gru;
  std::size_t hidden = 0;
  std::size_t count = 0;
};

/// Shape and MAC counts as printed in a published architecture table. Used
/// only to flag disagreement with the shapes composed from layer parameters.
struct ReportedShapes {
  std::optional<std::pair<std::size_t, std::size_t>> conv_output, rnn_output, fc_output;
  std::optional<double> total_macs;
};

struct NetTopology {
  std::string name;
  std::size_t input_length = 300;  // L
  std::size_t sliding_offset = 1;  // T
  std::vector<ConvLayerSpec> conv;
  RecurrentSpec rnn;
  std::size_t fc_in = 0;
  std::size_t fc_out = kSymbols;
  ReportedShapes reported;

  std::size_t conv_channels() const { return conv.empty() ? 1 : conv.back().out_channels; }

  std::size_t timesteps() const {
    std::size_t t = input_length;
    for (const auto& c : conv) t = conv_output_length(t, c.stride);
    return t;
  }

  std::size_t feature_width() const { return rnn.count > 0 ? rnn.hidden : conv_channels(); }

  void validate() const {
    if (input_length == 0) throw Error("topology: input length must be positive");
    if (sliding_offset == 0) throw Error("topology: sliding offset must be positive");
    std::size_t channels = 1;
    std::size_t len = input_length;
    for (const auto& c : conv) {
      if (c.kernel == 0 || c.stride == 0 || c.out_channels == 0)
        throw Error("topology: conv layer parameters must be positive");
      if (c.in_channels != channels) throw Error("topology: conv channel chain does not compose");
      if (len < c.kernel) throw Error("topology: conv input shorter than kernel");
      channels = c.out_channels;
      len = conv_output_length(len, c.stride);
    }
    if (rnn.count > 0 && rnn.hidden == 0) throw Error("topology: recurrent width must be positive");
    if (fc_in != feature_width()) throw Error("topology: fc input does not match feature width");
    if (fc_out != kSymbols) throw Error("topology: fc output must be 5");
  }

  /// Multiply-accumulates per window from the composed shapes.
  double macs() const {
    double total = 0.0;
    std::size_t len = input_length;
    for (const auto& c : conv) {
      len = conv_output_length(len, c.stride);
      total += static_cast<double>(len * c.kernel * c.in_channels * c.out_channels);
    }
    const double gates = rnn.type == RecurrentType::gru ? 3.0 : 4.0;
    std::size_t in = conv_channels();
    for (std::size_t l = 0; l < rnn.count; ++l) {
      total += gates * static_cast<double>(len * (in * rnn.hidden + rnn.hidden * rnn.hidden));
      in = rnn.hidden;
    }
    total += static_cast<double>(len * fc_in * fc_out);
    return total;
  }

  std::size_t parameter_count() const {
    std::size_t total = 0;
    for (const auto& c : conv) total += c.kernel * c.in_channels * c.out_channels + c.out_channels;
    const std::size_t gates = rnn.type == RecurrentType::gru ? 3 : 4;
    std::size_t in = conv_channels();
    for (std::size_t l = 0; l < rnn.count; ++l) {
      total += gates * (in * rnn.hidden + rnn.hidden * rnn.hidden + rnn.hidden);
      in = rnn.hidden;
    }
    return total + fc_in * fc_out + fc_out;
  }

  /// Human-readable notes for every reported shape that disagrees with the
  /// composed one.
  std::vector<std::string> shape_warnings() const {
    std::vector<std::string> out;
    auto check = [&](const char* what, const auto& reported, std::size_t rows, std::size_t cols) {
      if (reported && (reported->first != rows || reported->second != cols)) {
        out.push_back(name + ": reported " + what + " " + std::to_string(reported->first) + "x" +
                      std::to_string(reported->second) + " differs from composed " +
                      std::to_string(rows) + "x" + std::to_string(cols));
      }
    };
    const std::size_t t = timesteps();
    check("conv output", reported.conv_output, t, conv_channels());
    if (rnn.count > 0) check("recurrent output", reported.rnn_output, t, rnn.hidden);
    check("fc output", reported.fc_output, t, fc_out);
    if (reported.total_macs) {
      const double m = macs();
      if (std::abs(m - *reported.total_macs) > 0.05 * *reported.total_macs) {
        out.push_back(name + ": reported total MACs " + std::to_string(*reported.total_macs) +
                      " differs from composed " + std::to_string(m));
      }
    }
    return out;
  }
};

namespace topologies {

inline NetTopology guppy() {
  NetTopology t;
  t.name = "guppy";
  t.input_length = 300;
  t.sliding_offset = 30;
  t.conv = {{11, 1, 96, 2}};
  t.rnn = {RecurrentType::gru, 96, 5};
  t.fc_in = 96;
  t.reported.conv_output = {{150, 96}};
  t.reported.rnn_output = {{150, 40}};
  t.reported.fc_output = {{60, 5}};
  t.reported.total_macs = 36.3e6;
  return t;
}

inline NetTopology scrappie() {
  NetTopology t;
  t.name = "scrappie";
  t.input_length = 300;
  t.sliding_offset = 30;
  t.conv = {{11, 1, 96, 5}};
  t.rnn = {RecurrentType::gru, 96, 5};
  t.fc_in = 96;
  t.reported.conv_output = {{60, 96}};
  t.reported.rnn_output = {{60, 1025}};
  t.reported.fc_output = {{60, 5}};
  t.reported.total_macs = 8.47e6;
  return t;
}

/// Chiron reduced to desk scale: three stride-1 convolutions and two LSTM
/// layers of width 16.
inline NetTopology chiron_toy() {
  NetTopology t;
  t.name = "chiron-toy";
  t.input_length = 60;
  t.sliding_offset = 6;
  t.conv = {{1, 1, 16, 1}, {3, 16, 16, 1}, {1, 16, 16, 1}};
  t.rnn = {RecurrentType::lstm, 16, 2};
  t.fc_in = 16;
  t.reported.conv_output = {{60, 256}};
  t.reported.rnn_output = {{300, 100}};
  t.reported.fc_output = {{300, 5}};
  t.reported.total_macs = 615.2e6;
  return t;
}

/// Small GRU model for finite-difference training.
inline NetTopology toy() {
  NetTopology t;
  t.name = "toy";
  t.input_length = 24;
  t.sliding_offset = 4;
  t.conv = {{3, 1, 4, 1}};
  t.rnn = {RecurrentType::gru, 6, 1};
  t.fc_in = 6;
  return t;
}

inline NetTopology by_name(const std::string& name) {
  if (name == "guppy") return guppy();
  if (name == "scrappie") return scrappie();
  if (name == "chiron-toy") return chiron_toy();
  if (name == "toy") return toy();
  throw Error("unknown topology: " + name);
}

}  // namespace topologies

// ---------------------------------------------------------------------------
// Weights

struct FcWeights {
  Matrix w;
  std::vector<double> bias;
};

using RecurrentParams = std::variant<GruParams, LstmParams>;

struct BasecallerWeights {
  std::vector<ConvWeights> conv;
  std::vector<RecurrentParams> rnn;
  FcWeights fc;

  /// Visits every scalar parameter in a fixed order.
  template <typename F>
  void for_each_parameter(F&& f) {
    auto mat = [&](Matrix& m) { for (double& v : m.data) f(v); };
    auto vec = [&](std::vector<double>& b) { for (double& v : b) f(v); };
    for (auto& c : conv) { mat(c.filter); vec(c.bias); }
    for (auto& layer : rnn) {
      std::visit([&](auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, GruParams>) {
          mat(p.W_z); mat(p.U_z); vec(p.b_z);
          mat(p.W_r); mat(p.U_r); vec(p.b_r);
          mat(p.W_h); mat(p.U_h); vec(p.b_h);
        } else {
          mat(p.W_i); mat(p.U_i); vec(p.b_i);
          mat(p.W_f); mat(p.U_f); vec(p.b_f);
          mat(p.W_g); mat(p.U_g); vec(p.b_g);
          mat(p.W_o); mat(p.U_o); vec(p.b_o);
        }
      }, layer);
    }
    mat(fc.w);
    vec(fc.bias);
  }

  /// Visits every weight matrix (the operands quantized arithmetic rounds).
  template <typename F>
  void for_each_matrix(F&& f) {
    for (auto& c : conv) f(c.filter);
    for (auto& layer : rnn) {
      std::visit([&](auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, GruParams>) {
          for (Matrix* m : {&p.W_z, &p.U_z, &p.W_r, &p.U_r, &p.W_h, &p.U_h}) f(*m);
        } else {
          for (Matrix* m : {&p.W_i, &p.U_i, &p.W_f, &p.U_f, &p.W_g, &p.U_g, &p.W_o, &p.U_o}) f(*m);
        }
      }, layer);
    }
    f(fc.w);
  }

  /// Copy with every weight matrix rounded to `bit_width` and mapped back to
  /// reals; biases are left alone, as in quantized arithmetic.
  BasecallerWeights fake_quantized(int bit_width) const {
    BasecallerWeights out = *this;
    out.for_each_matrix([&](Matrix& m) { m.data = quant::fake_quantize(m.data, bit_width); });
    return out;
  }

  std::vector<double> flatten() const {
    std::vector<double> out;
    const_cast<BasecallerWeights*>(this)->for_each_parameter([&](double& v) { out.push_back(v); });
    return out;
  }

  void assign(std::span<const double> values) {
    std::size_t i = 0;
    for_each_parameter([&](double& v) {
      if (i >= values.size()) throw Error("weights: too few values");
      v = values[i++];
    });
    if (i != values.size()) throw Error("weights: too many values");
  }

  std::size_t parameter_count() const { return flatten().size(); }
};

/// Zero-initialised weights shaped for `topology`.
inline BasecallerWeights zero_weights(const NetTopology& topology) {
  topology.validate();
  BasecallerWeights w;
  for (const auto& c : topology.conv) w.conv.emplace_back(c.kernel, c.in_channels, c.out_channels, c.stride);
  std::size_t in = topology.conv_channels();
  for (std::size_t l = 0; l < topology.rnn.count; ++l) {
    if (topology.rnn.type == RecurrentType::gru)
      w.rnn.emplace_back(GruParams(in, topology.rnn.hidden));
    else
      w.rnn.emplace_back(LstmParams(in, topology.rnn.hidden));
    in = topology.rnn.hidden;
  }
  w.fc.w = Matrix(topology.fc_out, topology.fc_in);
  w.fc.bias.assign(topology.fc_out, 0.0);
  return w;
}

/// Uniform(-a, a) initialisation with a = scale / sqrt(fan_in).
template <typename Rng>
BasecallerWeights random_weights(const NetTopology& topology, Rng& rng, double scale = 1.0) {
  BasecallerWeights w = zero_weights(topology);
  // fan-in is approximated per parameter tensor by its column count.
  auto fill = [&](Matrix& m) {
    std::uniform_real_distribution<double> d(-scale / std::sqrt(double(m.cols)), scale / std::sqrt(double(m.cols)));
    for (double& v : m.data) v = d(rng);
  };
  for (auto& c : w.conv) fill(c.filter);
  for (auto& layer : w.rnn) {
    std::visit([&](auto& p) {
      using P = std::decay_t<decltype(p)>;
      if constexpr (std::is_same_v<P, GruParams>) {
        for (Matrix* m : {&p.W_z, &p.U_z, &p.W_r, &p.U_r, &p.W_h, &p.U_h}) fill(*m);
      } else {
        for (Matrix* m : {&p.W_i, &p.U_i, &p.W_f, &p.U_f, &p.W_g, &p.U_g, &p.W_o, &p.U_o}) fill(*m);
      }
    }, layer);
  }
  fill(w.fc.w);
  return w;
}

inline void check_weights(const NetTopology& t, const BasecallerWeights& w) {
  if (w.conv.size() != t.conv.size()) throw Error("weights: conv layer count mismatch");
  for (std::size_t i = 0; i < t.conv.size(); ++i) {
    const auto& s = t.conv[i];
    const auto& c = w.conv[i];
    if (c.kernel != s.kernel || c.in_channels != s.in_channels || c.out_channels != s.out_channels ||
        c.stride != s.stride || c.filter.rows != s.out_channels ||
        c.filter.cols != s.kernel * s.in_channels || c.bias.size() != s.out_channels)
      throw Error("weights: conv layer " + std::to_string(i) + " does not match topology");
  }
  if (w.rnn.size() != t.rnn.count) throw Error("weights: recurrent layer count mismatch");
  std::size_t in = t.conv_channels();
  for (const auto& layer : w.rnn) {
    const bool ok = std::visit([&](const auto& p) {
      using P = std::decay_t<decltype(p)>;
      const bool type_ok = std::is_same_v<P, GruParams> == (t.rnn.type == RecurrentType::gru);
      return type_ok && p.input_size() == in && p.hidden_size() == t.rnn.hidden;
    }, layer);
    if (!ok) throw Error("weights: recurrent layer does not match topology");
    in = t.rnn.hidden;
  }
  if (w.fc.w.rows != t.fc_out || w.fc.w.cols != t.fc_in || w.fc.bias.size() != t.fc_out)
    throw Error("weights: fc layer does not match topology");
}

/// Signal window -> conv (tanh) -> recurrent layers -> fc -> softmax.
template <typename Arithmetic = FloatArithmetic>
ProbMatrix basecaller_forward(const NetTopology& topology, const BasecallerWeights& weights,
                              std::span<const double> signal, const Arithmetic& arith = {}) {
  topology.validate();
  check_weights(topology, weights);
  if (signal.size() != topology.input_length) throw Error("basecaller: signal length must equal L");
  Matrix x(signal.size(), 1);
  std::copy(signal.begin(), signal.end(), x.data.begin());
  for (const auto& c : weights.conv) {
    x = conv1d_forward(x, c, arith);
    for (double& v : x.data) v = std::tanh(v);
  }
  for (const auto& layer : weights.rnn) {
    x = std::visit([&](const auto& p) -> Matrix {
      using P = std::decay_t<decltype(p)>;
      if constexpr (std::is_same_v<P, GruParams>) {
        std::vector<double> h0(p.hidden_size(), 0.0);
        return gru_forward(p, x, h0, arith);
      } else {
        return lstm_forward(p, x, arith);
      }
    }, layer);
  }
  auto fc = arith.prepare(weights.fc.w);
  Matrix logits(x.rows, kSymbols);
  for (std::size_t t = 0; t < x.rows; ++t) {
    auto y = arith.apply(fc, x.row(t));
    for (std::size_t s = 0; s < kSymbols; ++s) logits(t, s) = y[s] + weights.fc.bias[s];
  }
  return softmax_rows(logits);
}

// ---------------------------------------------------------------------------
// Sliding windows

/// Start offsets of every full window of length L advanced by T.
inline std::vector<std::size_t> window_starts(std::size_t stream_length, std::size_t L, std::size_t T) {
  if (T == 0) throw Error("sliding window: offset T must be positive");
  if (L == 0) throw Error("sliding window: length L must be positive");
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + L <= stream_length; s += T) starts.push_back(s);
  return starts;
}

/// Number of windows covering each stream element.
inline std::vector<std::size_t> window_coverage(std::size_t stream_length, std::size_t L, std::size_t T) {
  std::vector<std::size_t> cov(stream_length, 0);
  for (std::size_t s : window_starts(stream_length, L, T))
    for (std::size_t i = s; i < s + L; ++i) ++cov[i];
  return cov;
}

/// Base-calls every window of `stream`. `decode` maps a ProbMatrix to a symbol
/// sequence; each read records its window start as origin_offset.
template <typename Decoder, typename Arithmetic = FloatArithmetic>
std::vector<Read> sliding_window_reads(std::span<const double> stream, const NetTopology& topology,
                                       const BasecallerWeights& weights, Decoder&& decode,
                                       const Arithmetic& arith = {}) {
  if (topology.sliding_offset == 0) throw Error("sliding window: offset T must be positive");
  if (stream.size() < topology.input_length) throw Error("sliding window: stream shorter than L");
  std::vector<Read> reads;
  for (std::size_t s : window_starts(stream.size(), topology.input_length, topology.sliding_offset)) {
    ProbMatrix p = basecaller_forward(topology, weights, stream.subspan(s, topology.input_length), arith);
    reads.emplace_back(Sequence(decode(p)), s);
  }
  return reads;
}

}  // namespace helix::nn
