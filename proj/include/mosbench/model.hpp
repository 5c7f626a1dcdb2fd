#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mosbench/batching.hpp"
#include "mosbench/nn/layers.hpp"
#include "mosbench/stft.hpp"

namespace mosbench {

using nn::Matrix;
using nn::Vector;

/// Each block ends in a convolution with frequency stride 3 (time stride 1).
inline constexpr int kMeanNetBlocks = 4;
inline constexpr int kBiasNetBlocks = 2;
inline constexpr int kFrequencyStride = 3;

struct ArchConfig {
  std::vector<int> mean_channels{16, 32, 64, 128};  // one entry per MeanNet block
  std::vector<int> bias_channels{16, 32};           // one entry per BiasNet block
  int convs_per_mean_block = 3;
  int convs_per_bias_block = 2;
  int recurrent_hidden = 128;  // per direction
  int dense_hidden = 128;
  double dropout_rate = 0.3;
  int judge_embedding_dim = 86;
  int num_judges = 0;
  /// Weight of the current batch when updating running normalization
  /// statistics.
  double norm_momentum = 0.1;

  /// Small widths that train on one CPU core in minutes.
  static ArchConfig desk_scale(int num_judges);

  /// Throws ValidationError on any violated constraint.
  void validate() const;

  bool operator==(const ArchConfig&) const = default;
};

/// Width after `reductions` stride-3 "same" convolutions: the iterated
/// ceiling of width / 3.
int reduced_width(int width, int reductions);

/// Flattened per-frame feature size entering the recurrent layer.
int meannet_recurrent_input(const ArchConfig& arch);
int biasnet_recurrent_input(const ArchConfig& arch);

template <typename Scalar>
struct SubnetParams {
  std::vector<nn::ConvWeights<Scalar>> convs;  // in network order
  std::vector<nn::BatchNormState<Scalar>> norms;  // one per block
  nn::LstmWeights<Scalar> lstm_forward;
  nn::LstmWeights<Scalar> lstm_backward;
  nn::DenseWeights<Scalar> hidden;
  nn::DenseWeights<Scalar> output;
};

/// MeanNet and BiasNet weights, the judge embedding table (one row per
/// roster judge) and the normalization statistics. The active flags record
/// ablations: an inactive subnet contributes zero to every prediction.
template <typename Scalar>
struct ModelParams {
  ArchConfig arch;
  SubnetParams<Scalar> mean_net;
  SubnetParams<Scalar> bias_net;
  Matrix<Scalar> judge_embeddings;
  bool mean_net_active = true;
  bool bias_net_active = true;
};

/// Calls f(name, tensor) for every trainable tensor in a fixed order.
template <typename Params, typename F>
void for_each_parameter(Params& params, F&& f);

/// Calls f(name, tensor) for every running normalization statistic.
template <typename Params, typename F>
void for_each_statistic(Params& params, F&& f);

/// Same shapes as `params`, all tensors zero.
template <typename Scalar>
ModelParams<Scalar> zeros_like(const ModelParams<Scalar>& params);

/// Bitwise comparison of all tensors, flags and the architecture.
template <typename Scalar>
bool identical(const ModelParams<Scalar>& a, const ModelParams<Scalar>& b);

template <typename Scalar>
ModelParams<Scalar> init_params(const ArchConfig& arch, std::uint64_t seed);

template <typename Scalar>
struct ForwardOutput {
  Matrix<Scalar> frame_scores;      // B x T
  Vector<Scalar> utterance_scores;  // B, mean over frames
};

template <typename Scalar>
struct MbNetOutput {
  ForwardOutput<Scalar> mean;   // MeanNet alone
  ForwardOutput<Scalar> judge;  // MeanNet + BiasNet
};

/// Inference-mode MeanNet: no dropout, running normalization statistics.
/// All spectrograms must share one frame count.
template <typename Scalar>
ForwardOutput<Scalar> meannet_forward(const ModelParams<Scalar>& params,
                                      std::span<const Spectrogram> spectrograms);

/// Training-mode MeanNet: dropout drawn from `dropout_seed`, batch
/// statistics, running statistics updated in place.
template <typename Scalar>
ForwardOutput<Scalar> meannet_forward(ModelParams<Scalar>& params,
                                      std::span<const Spectrogram> spectrograms, bool training,
                                      std::uint64_t dropout_seed = 0);

template <typename Scalar>
ForwardOutput<Scalar> biasnet_forward(const ModelParams<Scalar>& params,
                                      std::span<const Spectrogram> spectrograms,
                                      std::span<const int> judge_indices);

template <typename Scalar>
ForwardOutput<Scalar> biasnet_forward(ModelParams<Scalar>& params,
                                      std::span<const Spectrogram> spectrograms,
                                      std::span<const int> judge_indices, bool training,
                                      std::uint64_t dropout_seed = 0);

/// Inference-mode joint prediction honouring the active flags.
template <typename Scalar>
MbNetOutput<Scalar> mbnet_forward(const ModelParams<Scalar>& params, const TrainingBatch& batch);

template <typename Scalar>
struct SubnetTrace;

/// Training-mode forward pass that keeps every intermediate needed by the
/// backward pass. One tape per batch; not shareable across threads.
template <typename Scalar>
class MbNetTape {
 public:
  MbNetTape();
  ~MbNetTape();
  MbNetTape(MbNetTape&&) noexcept;
  MbNetTape& operator=(MbNetTape&&) noexcept;

  MbNetOutput<Scalar> forward(ModelParams<Scalar>& params, const TrainingBatch& batch,
                              std::uint64_t dropout_seed);

  /// Gradients with respect to the MeanNet frame scores and the combined
  /// (MeanNet + BiasNet) frame scores, both B x T; accumulates into `grads`.
  void backward(const ModelParams<Scalar>& params, const Matrix<Scalar>& d_mean_frames,
                const Matrix<Scalar>& d_judge_frames, ModelParams<Scalar>& grads) const;

  /// Fingerprint of every ReLU on/off decision of the last forward; equal
  /// fingerprints mean the pass stayed on one linear piece.
  std::uint64_t activation_signature() const;

 private:
  std::unique_ptr<SubnetTrace<Scalar>> mean_;
  std::unique_ptr<SubnetTrace<Scalar>> bias_;
};

// --- parameter traversal -----------------------------------------------------

namespace detail {

template <typename Subnet, typename F>
void visit_subnet(const std::string& prefix, Subnet& net, F& f) {
  for (std::size_t i = 0; i < net.convs.size(); ++i) {
    const std::string name = prefix + ".conv" + std::to_string(i);
    f(name + ".kernel", net.convs[i].kernel);
    f(name + ".bias", net.convs[i].bias);
  }
  for (std::size_t i = 0; i < net.norms.size(); ++i) {
    const std::string name = prefix + ".norm" + std::to_string(i);
    f(name + ".gamma", net.norms[i].gamma);
    f(name + ".beta", net.norms[i].beta);
  }
  for (auto* lstm : {&net.lstm_forward, &net.lstm_backward}) {
    const std::string name = prefix + (lstm == &net.lstm_forward ? ".lstm_fwd" : ".lstm_bwd");
    f(name + ".input", lstm->input);
    f(name + ".recurrent", lstm->recurrent);
    f(name + ".bias", lstm->bias);
  }
  f(prefix + ".hidden.weight", net.hidden.weight);
  f(prefix + ".hidden.bias", net.hidden.bias);
  f(prefix + ".output.weight", net.output.weight);
  f(prefix + ".output.bias", net.output.bias);
}

}  // namespace detail

template <typename Params, typename F>
void for_each_parameter(Params& params, F&& f) {
  detail::visit_subnet("mean", params.mean_net, f);
  detail::visit_subnet("bias", params.bias_net, f);
  f(std::string("judge_embeddings"), params.judge_embeddings);
}

template <typename Params, typename F>
void for_each_statistic(Params& params, F&& f) {
  for (auto* net : {&params.mean_net, &params.bias_net}) {
    const std::string prefix = net == &params.mean_net ? "mean" : "bias";
    for (std::size_t i = 0; i < net->norms.size(); ++i) {
      const std::string name = prefix + ".norm" + std::to_string(i);
      f(name + ".running_mean", net->norms[i].running_mean);
      f(name + ".running_var", net->norms[i].running_var);
    }
  }
}

}  // namespace mosbench
