#include "mosbench/model.hpp"

#include <cstring>
#include <memory>
#include <random>

#include "mosbench/error.hpp"
#include "mosbench/hashing.hpp"

namespace mosbench {

using nn::Index;
using nn::MapGeometry;

ArchConfig ArchConfig::desk_scale(int num_judges) {
  ArchConfig arch;
  arch.mean_channels = {4, 8, 8, 16};
  arch.bias_channels = {4, 8};
  arch.recurrent_hidden = 16;
  arch.dense_hidden = 16;
  arch.dropout_rate = 0.1;
  arch.judge_embedding_dim = 8;
  arch.num_judges = num_judges;
  return arch;
}

void ArchConfig::validate() const {
  if (mean_channels.size() != kMeanNetBlocks)
    throw ValidationError("MeanNet needs exactly " + std::to_string(kMeanNetBlocks) +
                          " channel entries");
  if (bias_channels.size() != kBiasNetBlocks)
    throw ValidationError("BiasNet needs exactly " + std::to_string(kBiasNetBlocks) +
                          " channel entries");
  for (int c : mean_channels)
    if (c < 1) throw ValidationError("channel counts must be positive");
  for (int c : bias_channels)
    if (c < 1) throw ValidationError("channel counts must be positive");
  if (convs_per_mean_block < 1) throw ValidationError("convs_per_mean_block must be >= 1");
  if (convs_per_bias_block < 2)
    throw ValidationError("convs_per_bias_block must be >= 2 (judge conditioning follows the "
                          "first convolution)");
  if (recurrent_hidden < 1 || dense_hidden < 1)
    throw ValidationError("hidden sizes must be positive");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    throw ValidationError("dropout_rate must lie in [0, 1)");
  if (judge_embedding_dim < 1) throw ValidationError("judge_embedding_dim must be positive");
  if (num_judges < 1) throw ValidationError("num_judges must be positive");
  if (!(norm_momentum > 0.0 && norm_momentum <= 1.0))
    throw ValidationError("norm_momentum must lie in (0, 1]");
}

int reduced_width(int width, int reductions) {
  for (int i = 0; i < reductions; ++i) width = int(nn::same_output_width(width, kFrequencyStride));
  return width;
}

int meannet_recurrent_input(const ArchConfig& arch) {
  return arch.mean_channels.back() * reduced_width(kFrequencyBins, kMeanNetBlocks);
}

int biasnet_recurrent_input(const ArchConfig& arch) {
  return arch.bias_channels.back() * reduced_width(kFrequencyBins, kBiasNetBlocks);
}

namespace {

struct SubnetShape {
  std::vector<int> channels;
  int convs_per_block = 1;
  int conditioning = 0;  // embedding channels appended after the first conv

  int conv_count() const { return int(channels.size()) * convs_per_block; }
  int block_of(int k) const { return k / convs_per_block; }
  bool ends_block(int k) const { return k % convs_per_block == convs_per_block - 1; }
  Index stride(int k) const { return ends_block(k) ? kFrequencyStride : 1; }
  int out_channels(int k) const { return channels[block_of(k)]; }
  int in_channels(int k) const {
    if (k == 0) return 1;
    if (conditioning > 0 && k == 1) return channels[0] + conditioning;
    if (k % convs_per_block == 0) return channels[block_of(k) - 1];
    return channels[block_of(k)];
  }
};

SubnetShape mean_shape(const ArchConfig& arch) {
  return {arch.mean_channels, arch.convs_per_mean_block, 0};
}

SubnetShape bias_shape(const ArchConfig& arch) {
  return {arch.bias_channels, arch.convs_per_bias_block, arch.judge_embedding_dim};
}

template <typename Scalar>
Matrix<Scalar> glorot(Index rows, Index cols, double fan_in, double fan_out,
                      std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  Matrix<Scalar> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i)
    m.data()[i] = Scalar((2.0 * nn::unit_uniform(rng) - 1.0) * limit);
  return m;
}

template <typename Scalar>
SubnetParams<Scalar> init_subnet(const SubnetShape& shape, int recurrent_input,
                                 const ArchConfig& arch, double output_bias,
                                 std::mt19937_64& rng) {
  SubnetParams<Scalar> net;
  const Index taps = nn::kKernelSize * nn::kKernelSize;
  for (int k = 0; k < shape.conv_count(); ++k) {
    const Index in = shape.in_channels(k), out = shape.out_channels(k);
    net.convs.push_back({glorot<Scalar>(out, taps * in, double(taps * in), double(taps * out), rng),
                         Vector<Scalar>::Zero(out)});
  }
  for (int c : shape.channels)
    net.norms.push_back({Vector<Scalar>::Ones(c), Vector<Scalar>::Zero(c),
                         Vector<Scalar>::Zero(c), Vector<Scalar>::Ones(c)});
  const Index h = arch.recurrent_hidden;
  for (auto* lstm : {&net.lstm_forward, &net.lstm_backward}) {
    lstm->input = glorot<Scalar>(4 * h, recurrent_input, recurrent_input, double(4 * h), rng);
    lstm->recurrent = glorot<Scalar>(4 * h, h, double(h), double(4 * h), rng);
    lstm->bias = Vector<Scalar>::Zero(4 * h);
    lstm->bias.segment(h, h).setOnes();
  }
  net.hidden = {glorot<Scalar>(arch.dense_hidden, 2 * h, double(2 * h), arch.dense_hidden, rng),
                Vector<Scalar>::Zero(arch.dense_hidden)};
  net.output = {glorot<Scalar>(1, arch.dense_hidden, arch.dense_hidden, 1.0, rng),
                Vector<Scalar>::Constant(1, Scalar(output_bias))};
  return net;
}

// Centre of the 1..5 rating scale.
constexpr double kScoreOrigin = 3.0;

}  // namespace

template <typename Scalar>
ModelParams<Scalar> init_params(const ArchConfig& arch, std::uint64_t seed) {
  arch.validate();
  std::mt19937_64 rng(seed);
  ModelParams<Scalar> params;
  params.arch = arch;
  params.mean_net = init_subnet<Scalar>(mean_shape(arch), meannet_recurrent_input(arch), arch,
                                        kScoreOrigin, rng);
  params.bias_net =
      init_subnet<Scalar>(bias_shape(arch), biasnet_recurrent_input(arch), arch, 0.0, rng);
  params.judge_embeddings.resize(arch.num_judges, arch.judge_embedding_dim);
  for (Index i = 0; i < params.judge_embeddings.size(); ++i)
    params.judge_embeddings.data()[i] = Scalar(0.1 * nn::unit_uniform(rng) - 0.05);
  return params;
}

template <typename Scalar>
ModelParams<Scalar> zeros_like(const ModelParams<Scalar>& params) {
  ModelParams<Scalar> z = params;
  for_each_parameter(z, [](const std::string&, auto& t) { t.setZero(); });
  for_each_statistic(z, [](const std::string&, auto& t) { t.setZero(); });
  return z;
}

template <typename Scalar>
bool identical(const ModelParams<Scalar>& a, const ModelParams<Scalar>& b) {
  if (!(a.arch == b.arch) || a.mean_net_active != b.mean_net_active ||
      a.bias_net_active != b.bias_net_active)
    return false;
  std::vector<const Scalar*> data;
  std::vector<Index> sizes;
  auto collect = [&](const std::string&, const auto& t) {
    data.push_back(t.data());
    sizes.push_back(t.size());
  };
  for_each_parameter(a, collect);
  for_each_statistic(a, collect);
  std::size_t i = 0;
  bool same = true;
  auto compare = [&](const std::string&, const auto& t) {
    if (t.size() != sizes[i] ||
        std::memcmp(t.data(), data[i], std::size_t(t.size()) * sizeof(Scalar)) != 0)
      same = false;
    ++i;
  };
  for_each_parameter(b, compare);
  for_each_statistic(b, compare);
  return same;
}

// --- forward / backward ------------------------------------------------------

template <typename Scalar>
struct SubnetTrace {
  SubnetShape shape;
  MapGeometry input_geometry;
  std::vector<MapGeometry> conv_geometry;  // geometry of each conv's input
  Matrix<Scalar> input;
  Matrix<Scalar> conditioned;
  std::vector<int> judges;
  std::vector<Matrix<Scalar>> conv_out;
  std::vector<Matrix<Scalar>> masks;
  std::vector<nn::BatchNormCache<Scalar>> norm_cache;
  std::vector<Matrix<Scalar>> block_out;
  Matrix<Scalar> recurrent_in;
  nn::LstmCache<Scalar> lstm_fwd;
  nn::LstmCache<Scalar> lstm_bwd;
  Matrix<Scalar> recurrent_out;
  Matrix<Scalar> hidden_out;

  const Matrix<Scalar>& conv_input(int k) const {
    if (k == 0) return input;
    if (shape.conditioning > 0 && k == 1) return conditioned;
    if (k % shape.convs_per_block == 0) return block_out[shape.block_of(k) - 1];
    return conv_out[k - 1];
  }
};

namespace {

template <typename Scalar>
Matrix<Scalar> stack_input(std::span<const Spectrogram> specs, MapGeometry& g) {
  if (specs.empty()) throw ValidationError("empty batch");
  const int frames = specs.front().frame_count();
  for (const auto& s : specs) {
    if (s.bins() != kFrequencyBins)
      throw ValidationError("wrong frequency width " + std::to_string(s.bins()) + ", expected " +
                            std::to_string(kFrequencyBins));
    if (s.frame_count() != frames)
      throw ValidationError("batch items must share one frame count");
  }
  if (frames < 1) throw ValidationError("spectrograms need at least one frame");
  g = {Index(specs.size()), frames, kFrequencyBins};
  Matrix<Scalar> input(g.positions(), 1);
  for (Index t = 0; t < g.frames; ++t)
    for (Index b = 0; b < g.batch; ++b)
      input.middleRows((t * g.batch + b) * g.bins, g.bins) =
          specs[b].frames.row(t).transpose().template cast<Scalar>();
  return input;
}

// Runs one subnet and returns frame scores as a 1 x (T * B) row. Training
// mode is selected by passing the mutable normalization states.
template <typename Scalar>
Matrix<Scalar> run_subnet(const SubnetParams<Scalar>& net,
                          std::vector<nn::BatchNormState<Scalar>>* train_norms,
                          const SubnetShape& shape, const ArchConfig& arch,
                          const Matrix<Scalar>* embeddings, std::span<const Spectrogram> specs,
                          std::span<const int> judges, std::uint64_t dropout_seed,
                          SubnetTrace<Scalar>& tr) {
  const bool training = train_norms != nullptr;
  std::mt19937_64 rng(dropout_seed);
  tr.shape = shape;
  tr.input = stack_input<Scalar>(specs, tr.input_geometry);
  tr.judges.assign(judges.begin(), judges.end());
  const int convs = shape.conv_count();
  tr.conv_geometry.assign(convs, {});
  tr.conv_out.assign(convs, {});
  tr.masks.assign(shape.channels.size(), {});
  tr.norm_cache.assign(shape.channels.size(), {});
  tr.block_out.assign(shape.channels.size(), {});

  MapGeometry g = tr.input_geometry;
  for (int k = 0; k < convs; ++k) {
    const int block = shape.block_of(k);
    if (shape.conditioning > 0 && k == 1) {
      const Matrix<Scalar>& first = tr.conv_out[0];
      const Index c0 = first.cols(), e = shape.conditioning;
      tr.conditioned.resize(first.rows(), c0 + e);
      tr.conditioned.leftCols(c0) = first;
      for (Index row = 0; row < g.rows(); ++row) {
        const int judge = tr.judges[row % g.batch];
        tr.conditioned.block(row * g.bins, c0, g.bins, e) =
            embeddings->row(judge).replicate(g.bins, 1);
      }
    }
    tr.conv_geometry[k] = g;
    tr.conv_out[k] = nn::conv_relu_forward(net.convs[k], tr.conv_input(k), g, shape.stride(k));
    g.bins = nn::same_output_width(g.bins, shape.stride(k));
    if (!shape.ends_block(k)) continue;

    const Matrix<Scalar>* pre = &tr.conv_out[k];
    Matrix<Scalar> dropped;
    if (training && arch.dropout_rate > 0.0) {
      tr.masks[block] = nn::dropout_mask<Scalar>(pre->rows(), pre->cols(), arch.dropout_rate, rng);
      dropped = pre->cwiseProduct(tr.masks[block]);
      pre = &dropped;
    }
    tr.block_out[block] = training ? nn::batch_norm_train((*train_norms)[block], *pre,
                                                          arch.norm_momentum, tr.norm_cache[block])
                                   : nn::batch_norm_infer(net.norms[block], *pre);
  }

  // Frame features are channel-major: feature c * bins + f.
  const Matrix<Scalar>& last = tr.block_out.back();
  tr.recurrent_in.resize(last.cols() * g.bins, g.rows());
  for (Index c = 0; c < last.cols(); ++c)
    tr.recurrent_in.middleRows(c * g.bins, g.bins) =
        Eigen::Map<const Matrix<Scalar>>(last.col(c).data(), g.bins, g.rows());
  const Index h = arch.recurrent_hidden;
  tr.recurrent_out.resize(2 * h, g.rows());
  tr.recurrent_out.topRows(h) =
      nn::lstm_forward(net.lstm_forward, tr.recurrent_in, g.batch, false, tr.lstm_fwd);
  tr.recurrent_out.bottomRows(h) =
      nn::lstm_forward(net.lstm_backward, tr.recurrent_in, g.batch, true, tr.lstm_bwd);
  tr.hidden_out = nn::dense_forward(net.hidden, tr.recurrent_out).cwiseMax(Scalar(0));
  return nn::dense_forward(net.output, tr.hidden_out);
}

template <typename Scalar>
void backprop_subnet(const SubnetParams<Scalar>& net, const ArchConfig& arch,
                     const SubnetTrace<Scalar>& tr, const Matrix<Scalar>& d_frames,
                     SubnetParams<Scalar>& g, Matrix<Scalar>* d_embeddings) {
  const SubnetShape& shape = tr.shape;
  const Index rows = tr.recurrent_in.cols();
  const Matrix<Scalar> d_scores = Eigen::Map<const Matrix<Scalar>>(d_frames.data(), 1, rows);
  Matrix<Scalar> d_hidden = nn::dense_backward(net.output, tr.hidden_out, d_scores, g.output);
  d_hidden = (tr.hidden_out.array() > Scalar(0)).select(d_hidden, Scalar(0));
  const Matrix<Scalar> d_rec = nn::dense_backward(net.hidden, tr.recurrent_out, d_hidden, g.hidden);

  const Index h = arch.recurrent_hidden;
  const Index batch = tr.input_geometry.batch;
  Matrix<Scalar> d_x = Matrix<Scalar>::Zero(tr.recurrent_in.rows(), rows);
  nn::lstm_backward(net.lstm_forward, tr.recurrent_in, batch, false, tr.lstm_fwd,
                    Matrix<Scalar>(d_rec.topRows(h)), g.lstm_forward, d_x);
  nn::lstm_backward(net.lstm_backward, tr.recurrent_in, batch, true, tr.lstm_bwd,
                    Matrix<Scalar>(d_rec.bottomRows(h)), g.lstm_backward, d_x);

  const Matrix<Scalar>& last = tr.block_out.back();
  const Index bins = last.rows() / rows;
  Matrix<Scalar> d(last.rows(), last.cols());
  for (Index c = 0; c < last.cols(); ++c)
    Eigen::Map<Matrix<Scalar>>(d.col(c).data(), bins, rows) = d_x.middleRows(c * bins, bins);
  for (int k = shape.conv_count() - 1; k >= 0; --k) {
    const int block = shape.block_of(k);
    if (shape.ends_block(k)) {
      d = nn::batch_norm_backward(net.norms[block], tr.norm_cache[block], d, g.norms[block]);
      if (tr.masks[block].size() > 0) d = d.cwiseProduct(tr.masks[block]);
    }
    const Matrix<Scalar>& in = tr.conv_input(k);
    Matrix<Scalar> d_in;
    if (k > 0) d_in = Matrix<Scalar>::Zero(in.rows(), in.cols());
    nn::conv_relu_backward(net.convs[k], in, tr.conv_geometry[k], shape.stride(k),
                           tr.conv_out[k], d, g.convs[k], k > 0 ? &d_in : nullptr);
    if (k == 0) break;
    if (shape.conditioning > 0 && k == 1) {
      const MapGeometry& geo = tr.conv_geometry[1];
      const Index c0 = tr.conv_out[0].cols(), e = shape.conditioning;
      Matrix<Scalar> per_item = Matrix<Scalar>::Zero(geo.batch, e);
      for (Index row = 0; row < geo.rows(); ++row)
        per_item.row(row % geo.batch) +=
            d_in.block(row * geo.bins, c0, geo.bins, e).colwise().sum();
      for (Index b = 0; b < geo.batch; ++b)
        d_embeddings->row(tr.judges[b]) += per_item.row(b);
      d = d_in.leftCols(c0);
    } else {
      d = std::move(d_in);
    }
  }
}

template <typename Scalar>
ForwardOutput<Scalar> to_output(const Matrix<Scalar>& scores, Index batch) {
  ForwardOutput<Scalar> out;
  out.frame_scores = Eigen::Map<const Matrix<Scalar>>(scores.data(), batch, scores.cols() / batch);
  out.utterance_scores = out.frame_scores.rowwise().mean();
  return out;
}

template <typename Scalar>
ForwardOutput<Scalar> zero_output(Index batch, Index frames) {
  return {Matrix<Scalar>::Zero(batch, frames), Vector<Scalar>::Zero(batch)};
}

void check_judges(std::span<const int> judges, std::size_t batch, int num_judges) {
  if (judges.size() != batch) throw ValidationError("one judge index per batch item required");
  for (int j : judges)
    if (j < 0 || j >= num_judges)
      throw ValidationError("judge index " + std::to_string(j) + " outside roster of " +
                            std::to_string(num_judges));
}

template <typename Scalar>
ForwardOutput<Scalar> run_mean(const ModelParams<Scalar>& params,
                               std::vector<nn::BatchNormState<Scalar>>* norms,
                               std::span<const Spectrogram> specs, std::uint64_t seed,
                               SubnetTrace<Scalar>& tr) {
  const auto scores = run_subnet(params.mean_net, norms, mean_shape(params.arch), params.arch,
                                 static_cast<const Matrix<Scalar>*>(nullptr), specs, {}, seed, tr);
  return to_output(scores, Index(specs.size()));
}

template <typename Scalar>
ForwardOutput<Scalar> run_bias(const ModelParams<Scalar>& params,
                               std::vector<nn::BatchNormState<Scalar>>* norms,
                               std::span<const Spectrogram> specs, std::span<const int> judges,
                               std::uint64_t seed, SubnetTrace<Scalar>& tr) {
  check_judges(judges, specs.size(), params.arch.num_judges);
  const auto scores = run_subnet(params.bias_net, norms, bias_shape(params.arch), params.arch,
                                 &params.judge_embeddings, specs, judges, seed, tr);
  return to_output(scores, Index(specs.size()));
}

template <typename Scalar>
MbNetOutput<Scalar> combine(ForwardOutput<Scalar> mean, const ForwardOutput<Scalar>& bias) {
  MbNetOutput<Scalar> out;
  out.judge.frame_scores = mean.frame_scores + bias.frame_scores;
  out.judge.utterance_scores = mean.utterance_scores + bias.utterance_scores;
  out.mean = std::move(mean);
  return out;
}

}  // namespace

template <typename Scalar>
ForwardOutput<Scalar> meannet_forward(const ModelParams<Scalar>& params,
                                      std::span<const Spectrogram> spectrograms) {
  SubnetTrace<Scalar> tr;
  return run_mean<Scalar>(params, nullptr, spectrograms, 0, tr);
}

template <typename Scalar>
ForwardOutput<Scalar> meannet_forward(ModelParams<Scalar>& params,
                                      std::span<const Spectrogram> spectrograms, bool training,
                                      std::uint64_t dropout_seed) {
  SubnetTrace<Scalar> tr;
  return run_mean(params, training ? &params.mean_net.norms : nullptr, spectrograms,
                  dropout_seed, tr);
}

template <typename Scalar>
ForwardOutput<Scalar> biasnet_forward(const ModelParams<Scalar>& params,
                                      std::span<const Spectrogram> spectrograms,
                                      std::span<const int> judge_indices) {
  SubnetTrace<Scalar> tr;
  return run_bias<Scalar>(params, nullptr, spectrograms, judge_indices, 0, tr);
}

template <typename Scalar>
ForwardOutput<Scalar> biasnet_forward(ModelParams<Scalar>& params,
                                      std::span<const Spectrogram> spectrograms,
                                      std::span<const int> judge_indices, bool training,
                                      std::uint64_t dropout_seed) {
  SubnetTrace<Scalar> tr;
  return run_bias(params, training ? &params.bias_net.norms : nullptr, spectrograms,
                  judge_indices, dropout_seed, tr);
}

template <typename Scalar>
MbNetOutput<Scalar> mbnet_forward(const ModelParams<Scalar>& params, const TrainingBatch& batch) {
  const std::span<const Spectrogram> specs(batch.spectrograms);
  const Index b = Index(batch.size()), t = batch.frames();
  SubnetTrace<Scalar> tr;
  auto mean = params.mean_net_active ? run_mean<Scalar>(params, nullptr, specs, 0, tr)
                                     : zero_output<Scalar>(b, t);
  auto bias = params.bias_net_active
                  ? run_bias<Scalar>(params, nullptr, specs, std::span<const int>(batch.judge_indices), 0, tr)
                  : zero_output<Scalar>(b, t);
  return combine(std::move(mean), bias);
}

// --- tape --------------------------------------------------------------------

template <typename Scalar>
MbNetTape<Scalar>::MbNetTape() = default;
template <typename Scalar>
MbNetTape<Scalar>::~MbNetTape() = default;
template <typename Scalar>
MbNetTape<Scalar>::MbNetTape(MbNetTape&&) noexcept = default;
template <typename Scalar>
MbNetTape<Scalar>& MbNetTape<Scalar>::operator=(MbNetTape&&) noexcept = default;

template <typename Scalar>
MbNetOutput<Scalar> MbNetTape<Scalar>::forward(ModelParams<Scalar>& params,
                                               const TrainingBatch& batch,
                                               std::uint64_t dropout_seed) {
  const std::span<const Spectrogram> specs(batch.spectrograms);
  const Index b = Index(batch.size()), t = batch.frames();
  mean_.reset();
  bias_.reset();
  ForwardOutput<Scalar> mean = zero_output<Scalar>(b, t);
  ForwardOutput<Scalar> bias = zero_output<Scalar>(b, t);
  if (params.mean_net_active) {
    mean_ = std::make_unique<SubnetTrace<Scalar>>();
    mean = run_mean(params, &params.mean_net.norms, specs, derive_seed(dropout_seed, "mean"),
                    *mean_);
  }
  if (params.bias_net_active) {
    bias_ = std::make_unique<SubnetTrace<Scalar>>();
    bias = run_bias(params, &params.bias_net.norms, specs,
                    std::span<const int>(batch.judge_indices), derive_seed(dropout_seed, "bias"),
                    *bias_);
  }
  return combine(std::move(mean), bias);
}

template <typename Scalar>
void MbNetTape<Scalar>::backward(const ModelParams<Scalar>& params,
                                 const Matrix<Scalar>& d_mean_frames,
                                 const Matrix<Scalar>& d_judge_frames,
                                 ModelParams<Scalar>& grads) const {
  if (mean_) {
    const Matrix<Scalar> d = d_mean_frames + d_judge_frames;
    backprop_subnet(params.mean_net, params.arch, *mean_, d, grads.mean_net,
                    static_cast<Matrix<Scalar>*>(nullptr));
  }
  if (bias_)
    backprop_subnet(params.bias_net, params.arch, *bias_, d_judge_frames, grads.bias_net,
                    &grads.judge_embeddings);
}

template <typename Scalar>
std::uint64_t MbNetTape<Scalar>::activation_signature() const {
  Fnv1a h;
  auto add_mask = [&](const Matrix<Scalar>& m) {
    std::string bits(std::size_t(m.size()), '\0');
    for (Index i = 0; i < m.size(); ++i) bits[std::size_t(i)] = m.data()[i] > Scalar(0);
    h.add(bits);
  };
  for (const auto* tr : {mean_.get(), bias_.get()}) {
    if (!tr) continue;
    for (const auto& m : tr->conv_out) add_mask(m);
    add_mask(tr->hidden_out);
  }
  return h.value();
}

#define MOSBENCH_INSTANTIATE(S)                                                               \
  template ModelParams<S> init_params<S>(const ArchConfig&, std::uint64_t);                   \
  template ModelParams<S> zeros_like<S>(const ModelParams<S>&);                               \
  template bool identical<S>(const ModelParams<S>&, const ModelParams<S>&);                   \
  template ForwardOutput<S> meannet_forward<S>(const ModelParams<S>&,                         \
                                               std::span<const Spectrogram>);                 \
  template ForwardOutput<S> meannet_forward<S>(ModelParams<S>&, std::span<const Spectrogram>, \
                                               bool, std::uint64_t);                          \
  template ForwardOutput<S> biasnet_forward<S>(const ModelParams<S>&,                         \
                                               std::span<const Spectrogram>,                  \
                                               std::span<const int>);                         \
  template ForwardOutput<S> biasnet_forward<S>(ModelParams<S>&, std::span<const Spectrogram>, \
                                               std::span<const int>, bool, std::uint64_t);    \
  template MbNetOutput<S> mbnet_forward<S>(const ModelParams<S>&, const TrainingBatch&);      \
  template class MbNetTape<S>;

MOSBENCH_INSTANTIATE(float)
MOSBENCH_INSTANTIATE(double)

#undef MOSBENCH_INSTANTIATE

}  // namespace mosbench
