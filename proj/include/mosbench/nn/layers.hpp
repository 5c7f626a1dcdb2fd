#pragma once

// Building blocks of the CNN-BLSTM subnets, each with an explicit backward
// pass. Feature maps are planar (positions x channels) column-major matrices;
// a position is ((t * batch) + b) * bins + f, so every (frame, item) pair owns
// a contiguous run of bins and every time step owns a contiguous run of items.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace mosbench::nn {

using Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

struct MapGeometry {
  Index batch = 0;
  Index frames = 0;
  Index bins = 0;

  Index rows() const { return batch * frames; }
  Index positions() const { return batch * frames * bins; }
};

inline constexpr Index kKernelSize = 3;

/// Output width of a "same" convolution with the given stride (ceiling).
constexpr Index same_output_width(Index width, Index stride) {
  return (width + stride - 1) / stride;
}

/// Leading zero padding of a "same" convolution; the remainder goes after.
constexpr Index same_padding_before(Index width, Index stride) {
  const Index total = (same_output_width(width, stride) - 1) * stride + kKernelSize - width;
  return total > 0 ? total / 2 : 0;
}

/// Uniform double in [0, 1) from the top 53 bits; independent of the
/// standard library's distribution implementations.
inline double unit_uniform(std::mt19937_64& rng) {
  return double(rng() >> 11) * 0x1.0p-53;
}

// --- convolution -------------------------------------------------------------

/// 3x3 kernel laid out as out x (9 * in); column (kt * 3 + kf) * in + c.
template <typename Scalar>
struct ConvWeights {
  Matrix<Scalar> kernel;
  Vector<Scalar> bias;
};

namespace detail {

// Planar (positions x channels) zero-padded copy of a feature map. Row (t, b)
// of the input becomes buffer row ((t + 1) * batch + b) of `width` entries,
// with bin f at entry f + before, so every kernel tap reads the buffer at a
// fixed offset: output entry n of tap (kt, kf) reads stride * n + offset.
struct PaddedLayout {
  Index stride = 1;
  Index before = 0;     // leading zero bins
  Index width = 0;      // buffer entries per input row; a multiple of stride
  Index out_width = 0;  // width / stride; entries per output row, some unused
  Index out_bins = 0;   // used output entries per row
  MapGeometry in;

  PaddedLayout(const MapGeometry& g, Index s)
      : stride(s),
        before(same_padding_before(g.bins, s)),
        out_bins(same_output_width(g.bins, s)),
        in(g) {
    out_width = s == 1 ? g.bins + 2 : out_bins + 1;
    width = s * out_width;
  }

  // One spare row at the end absorbs reads made for unused output entries.
  Index buffer_rows() const { return (in.frames + 2) * in.batch * width + width; }
  Index out_rows() const { return in.frames * in.batch * out_width; }
  Index tap_offset(Index kt, Index kf) const { return kt * in.batch * width + kf; }
};

template <typename Scalar>
Matrix<Scalar> pad_planar(const Matrix<Scalar>& in, const PaddedLayout& l) {
  Matrix<Scalar> buf = Matrix<Scalar>::Zero(l.buffer_rows(), in.cols());
  for (Index row = 0; row < l.in.rows(); ++row)
    buf.middleRows((row + l.in.batch) * l.width + l.before, l.in.bins) =
        in.middleRows(row * l.in.bins, l.in.bins);
  return buf;
}

// Phase p holds buffer rows p, p + stride, ...; tap (kt, kf) of output entry
// n reads phase kf % stride at row n + phase_offset(kt, kf).
template <typename Scalar>
std::vector<Matrix<Scalar>> split_phases(const Matrix<Scalar>& buf, const PaddedLayout& l) {
  std::vector<Matrix<Scalar>> phases(std::size_t(l.stride));
  const Index rows = buf.rows() / l.stride;
  for (Index p = 0; p < l.stride; ++p)
    phases[std::size_t(p)] = Eigen::Map<const Matrix<Scalar>, 0, Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>>(
        buf.data() + p, rows, buf.cols(), Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>(buf.rows(), l.stride));
  return phases;
}

inline Index phase_offset(const PaddedLayout& l, Index kt, Index kf) {
  return kt * l.in.batch * l.out_width + kf / l.stride;
}

// Patch matrix (n x 9c) for output entries [first, first + n).
template <typename Scalar>
void gather_patches(const std::vector<Matrix<Scalar>>& phases, const PaddedLayout& l,
                    Index first, Index n, Matrix<Scalar>& patches) {
  const Index c = phases.front().cols();
  patches.resize(n, kKernelSize * kKernelSize * c);
  for (Index kt = 0; kt < kKernelSize; ++kt)
    for (Index kf = 0; kf < kKernelSize; ++kf)
      patches.middleCols((kt * kKernelSize + kf) * c, c) =
          phases[std::size_t(kf % l.stride)].middleRows(first + phase_offset(l, kt, kf), n);
}

template <typename Scalar>
void scatter_patches(const Matrix<Scalar>& d_patches, const PaddedLayout& l, Index first,
                     std::vector<Matrix<Scalar>>& d_phases) {
  const Index c = d_phases.front().cols(), n = d_patches.rows();
  for (Index kt = 0; kt < kKernelSize; ++kt)
    for (Index kf = 0; kf < kKernelSize; ++kf)
      d_phases[std::size_t(kf % l.stride)].middleRows(first + phase_offset(l, kt, kf), n) +=
          d_patches.middleCols((kt * kKernelSize + kf) * c, c);
}

inline Index column_chunk(Index in_channels) {
  return std::max<Index>(256, (Index(1) << 15) / in_channels);
}

}  // namespace detail

/// Same-padded 3x3 convolution with stride 1 in time and `stride` in
/// frequency, followed by ReLU.
template <typename Scalar>
Matrix<Scalar> conv_relu_forward(const ConvWeights<Scalar>& w, const Matrix<Scalar>& in,
                                 const MapGeometry& g, Index stride) {
  const detail::PaddedLayout l(g, stride);
  const auto phases = detail::split_phases(detail::pad_planar(in, l), l);
  const Matrix<Scalar> kernel_t = w.kernel.transpose();
  Matrix<Scalar> wide(l.out_rows(), w.kernel.rows());
  Matrix<Scalar> patches;
  const Index chunk = detail::column_chunk(in.cols());
  for (Index first = 0; first < wide.rows(); first += chunk) {
    const Index n = std::min(chunk, wide.rows() - first);
    detail::gather_patches(phases, l, first, n, patches);
    wide.middleRows(first, n).noalias() = patches * kernel_t;
  }
  Matrix<Scalar> out(g.rows() * l.out_bins, w.kernel.rows());
  const auto bias = w.bias.transpose();
  for (Index row = 0; row < g.rows(); ++row)
    out.middleRows(row * l.out_bins, l.out_bins) =
        (wide.middleRows(row * l.out_width, l.out_bins).rowwise() + bias).cwiseMax(Scalar(0));
  return out;
}

/// Backward of conv_relu_forward. `out` is the forward output (its sign
/// pattern is the ReLU mask); `d_out` is overwritten with the pre-activation
/// gradient. Accumulates into `grads` and, when given, into `d_in`.
template <typename Scalar>
void conv_relu_backward(const ConvWeights<Scalar>& w, const Matrix<Scalar>& in,
                        const MapGeometry& g, Index stride, const Matrix<Scalar>& out,
                        Matrix<Scalar>& d_out, ConvWeights<Scalar>& grads,
                        Matrix<Scalar>* d_in) {
  d_out = (out.array() > Scalar(0)).select(d_out, Scalar(0));
  grads.bias += d_out.colwise().sum().transpose();

  const detail::PaddedLayout l(g, stride);
  const auto phases = detail::split_phases(detail::pad_planar(in, l), l);
  Matrix<Scalar> wide = Matrix<Scalar>::Zero(l.out_rows(), w.kernel.rows());
  for (Index row = 0; row < g.rows(); ++row)
    wide.middleRows(row * l.out_width, l.out_bins) = d_out.middleRows(row * l.out_bins, l.out_bins);

  std::vector<Matrix<Scalar>> d_phases;
  if (d_in)
    for (const auto& p : phases) d_phases.push_back(Matrix<Scalar>::Zero(p.rows(), p.cols()));
  Matrix<Scalar> d_kernel_t = Matrix<Scalar>::Zero(w.kernel.cols(), w.kernel.rows());
  Matrix<Scalar> patches, d_patches;
  const Index chunk = detail::column_chunk(in.cols());
  for (Index first = 0; first < wide.rows(); first += chunk) {
    const Index n = std::min(chunk, wide.rows() - first);
    const auto d_chunk = wide.middleRows(first, n);
    detail::gather_patches(phases, l, first, n, patches);
    d_kernel_t.noalias() += patches.transpose() * d_chunk;
    if (d_in) {
      d_patches.noalias() = d_chunk * w.kernel;
      detail::scatter_patches(d_patches, l, first, d_phases);
    }
  }
  grads.kernel += d_kernel_t.transpose();
  if (!d_in) return;
  // Row r of the padded buffer is row r / stride of phase r % stride.
  for (Index row = 0; row < g.rows(); ++row) {
    const Index start = (row + g.batch) * l.width + l.before;
    for (Index f = 0; f < g.bins; ++f) {
      const Index r = start + f;
      d_in->row(row * g.bins + f) += d_phases[std::size_t(r % stride)].row(r / stride);
    }
  }
}

// --- batch normalization -----------------------------------------------------

template <typename Scalar>
struct BatchNormState {
  Vector<Scalar> gamma;
  Vector<Scalar> beta;
  Vector<Scalar> running_mean;
  Vector<Scalar> running_var;
};

template <typename Scalar>
struct BatchNormCache {
  Matrix<Scalar> normalized;
  Vector<Scalar> inv_std;
};

inline constexpr double kNormEpsilon = 1e-5;

/// Per-channel normalization over all positions of the batch; updates the
/// running statistics with weight `momentum` on the new batch.
template <typename Scalar>
Matrix<Scalar> batch_norm_train(BatchNormState<Scalar>& s, const Matrix<Scalar>& in,
                                double momentum, BatchNormCache<Scalar>& cache) {
  const Vector<Scalar> mean = in.colwise().mean().transpose();
  cache.normalized = in.rowwise() - mean.transpose();
  const Vector<Scalar> var = cache.normalized.array().square().colwise().mean().transpose();
  cache.inv_std = (var.array() + Scalar(kNormEpsilon)).rsqrt();
  cache.normalized = cache.normalized * cache.inv_std.asDiagonal();
  const auto m = Scalar(momentum);
  s.running_mean = (Scalar(1) - m) * s.running_mean + m * mean;
  s.running_var = (Scalar(1) - m) * s.running_var + m * var;
  Matrix<Scalar> out = cache.normalized * s.gamma.asDiagonal();
  out.rowwise() += s.beta.transpose();
  return out;
}

template <typename Scalar>
Matrix<Scalar> batch_norm_infer(const BatchNormState<Scalar>& s, const Matrix<Scalar>& in) {
  const Vector<Scalar> scale =
      s.gamma.array() * (s.running_var.array() + Scalar(kNormEpsilon)).rsqrt();
  const Vector<Scalar> shift = s.beta.array() - scale.array() * s.running_mean.array();
  Matrix<Scalar> out = in * scale.asDiagonal();
  out.rowwise() += shift.transpose();
  return out;
}

template <typename Scalar>
Matrix<Scalar> batch_norm_backward(const BatchNormState<Scalar>& s,
                                   const BatchNormCache<Scalar>& cache,
                                   const Matrix<Scalar>& d_out, BatchNormState<Scalar>& grads) {
  const auto n = Scalar(d_out.rows());
  grads.beta += d_out.colwise().sum().transpose();
  grads.gamma += d_out.cwiseProduct(cache.normalized).colwise().sum().transpose();
  const Matrix<Scalar> d_norm = d_out * s.gamma.asDiagonal();
  const Vector<Scalar> sum_d = d_norm.colwise().sum().transpose();
  const Vector<Scalar> sum_dx = d_norm.cwiseProduct(cache.normalized).colwise().sum().transpose();
  Matrix<Scalar> d_in = n * d_norm;
  d_in.rowwise() -= sum_d.transpose();
  d_in -= cache.normalized * sum_dx.asDiagonal();
  return d_in * (cache.inv_std / n).asDiagonal();
}

// --- dropout -----------------------------------------------------------------

/// Inverted dropout mask: entries are 0 or 1 / (1 - rate).
template <typename Scalar>
Matrix<Scalar> dropout_mask(Index rows, Index cols, double rate, std::mt19937_64& rng) {
  Matrix<Scalar> mask(rows, cols);
  const auto keep = Scalar(1.0 / (1.0 - rate));
  Scalar* d = mask.data();
  for (Index i = 0; i < mask.size(); ++i) d[i] = unit_uniform(rng) < rate ? Scalar(0) : keep;
  return mask;
}

// --- recurrent ---------------------------------------------------------------

/// Gate rows are ordered input, forget, cell, output.
template <typename Scalar>
struct LstmWeights {
  Matrix<Scalar> input;      // 4H x D
  Matrix<Scalar> recurrent;  // 4H x H
  Vector<Scalar> bias;       // 4H
};

template <typename Scalar>
struct LstmCache {
  Matrix<Scalar> gates;      // activated gates, 4H x (T * B)
  Matrix<Scalar> cells;      // H x (T * B)
  Matrix<Scalar> cell_tanh;  // H x (T * B)
  Matrix<Scalar> hidden;     // H x (T * B)
};

namespace detail {
template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& x) {
  using S = typename Derived::Scalar;
  return S(1) / (S(1) + (-x).exp());
}
}  // namespace detail

/// Runs one direction over columns ordered (t * batch + b). Returns the
/// hidden states in the same column order.
template <typename Scalar>
const Matrix<Scalar>& lstm_forward(const LstmWeights<Scalar>& w, const Matrix<Scalar>& x,
                                   Index batch, bool reverse, LstmCache<Scalar>& cache) {
  const Index h = w.recurrent.cols();
  const Index steps = x.cols() / batch;
  Matrix<Scalar> pre = w.input * x;
  pre.colwise() += w.bias;
  cache.gates.resize(4 * h, x.cols());
  cache.cells.resize(h, x.cols());
  cache.cell_tanh.resize(h, x.cols());
  cache.hidden.resize(h, x.cols());
  Matrix<Scalar> h_prev = Matrix<Scalar>::Zero(h, batch);
  Matrix<Scalar> c_prev = Matrix<Scalar>::Zero(h, batch);
  Matrix<Scalar> z(4 * h, batch);
  for (Index s = 0; s < steps; ++s) {
    const Index t = reverse ? steps - 1 - s : s;
    z = pre.middleCols(t * batch, batch);
    z.noalias() += w.recurrent * h_prev;
    auto gates = cache.gates.middleCols(t * batch, batch);
    gates.topRows(2 * h) = detail::sigmoid(z.topRows(2 * h).array()).matrix();
    gates.middleRows(2 * h, h) = z.middleRows(2 * h, h).array().tanh().matrix();
    gates.bottomRows(h) = detail::sigmoid(z.bottomRows(h).array()).matrix();
    auto c = cache.cells.middleCols(t * batch, batch);
    c = gates.middleRows(h, h).cwiseProduct(c_prev) +
        gates.topRows(h).cwiseProduct(gates.middleRows(2 * h, h));
    auto ct = cache.cell_tanh.middleCols(t * batch, batch);
    ct = c.array().tanh().matrix();
    auto hid = cache.hidden.middleCols(t * batch, batch);
    hid = gates.bottomRows(h).cwiseProduct(ct);
    h_prev = hid;
    c_prev = c;
  }
  return cache.hidden;
}

/// Backpropagation through time for one direction; accumulates weight
/// gradients and adds the input gradient into `d_x`.
template <typename Scalar>
void lstm_backward(const LstmWeights<Scalar>& w, const Matrix<Scalar>& x, Index batch,
                   bool reverse, const LstmCache<Scalar>& cache, const Matrix<Scalar>& d_hidden,
                   LstmWeights<Scalar>& grads, Matrix<Scalar>& d_x) {
  const Index h = w.recurrent.cols();
  const Index steps = x.cols() / batch;
  Matrix<Scalar> d_pre(4 * h, x.cols());
  Matrix<Scalar> dh_next = Matrix<Scalar>::Zero(h, batch);
  Matrix<Scalar> dc_next = Matrix<Scalar>::Zero(h, batch);
  Matrix<Scalar> dh(h, batch), dc(h, batch);
  for (Index s = steps - 1; s >= 0; --s) {
    const Index t = reverse ? steps - 1 - s : s;
    const Index prev = reverse ? t + 1 : t - 1;
    const auto gates = cache.gates.middleCols(t * batch, batch);
    const auto i = gates.topRows(h).array();
    const auto f = gates.middleRows(h, h).array();
    const auto g = gates.middleRows(2 * h, h).array();
    const auto o = gates.bottomRows(h).array();
    const auto ct = cache.cell_tanh.middleCols(t * batch, batch).array();

    dh = d_hidden.middleCols(t * batch, batch) + dh_next;
    dc = (dh.array() * o * (Scalar(1) - ct.square())).matrix() + dc_next;
    auto dz = d_pre.middleCols(t * batch, batch);
    dz.topRows(h) = (dc.array() * g * i * (Scalar(1) - i)).matrix();
    if (s > 0)
      dz.middleRows(h, h) = (dc.array() * cache.cells.middleCols(prev * batch, batch).array() *
                             f * (Scalar(1) - f))
                                .matrix();
    else
      dz.middleRows(h, h).setZero();
    dz.middleRows(2 * h, h) = (dc.array() * i * (Scalar(1) - g.square())).matrix();
    dz.bottomRows(h) = (dh.array() * ct * o * (Scalar(1) - o)).matrix();
    dc_next = (dc.array() * f).matrix();
    dh_next.noalias() = w.recurrent.transpose() * dz;
    if (s > 0)
      grads.recurrent.noalias() +=
          dz * cache.hidden.middleCols(prev * batch, batch).transpose();
  }
  grads.input.noalias() += d_pre * x.transpose();
  grads.bias += d_pre.rowwise().sum();
  d_x.noalias() += w.input.transpose() * d_pre;
}

// --- dense -------------------------------------------------------------------

template <typename Scalar>
struct DenseWeights {
  Matrix<Scalar> weight;  // out x in
  Vector<Scalar> bias;
};

template <typename Scalar>
Matrix<Scalar> dense_forward(const DenseWeights<Scalar>& w, const Matrix<Scalar>& x) {
  Matrix<Scalar> out = w.weight * x;
  out.colwise() += w.bias;
  return out;
}

/// Returns the input gradient.
template <typename Scalar>
Matrix<Scalar> dense_backward(const DenseWeights<Scalar>& w, const Matrix<Scalar>& x,
                              const Matrix<Scalar>& d_out, DenseWeights<Scalar>& grads) {
  grads.weight.noalias() += d_out * x.transpose();
  grads.bias += d_out.rowwise().sum();
  return w.weight.transpose() * d_out;
}

}  // namespace mosbench::nn
