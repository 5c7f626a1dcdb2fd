#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <span>
#include <string>

#include "mosbench/corpus.hpp"
#include "mosbench/model.hpp"
#include "mosbench/stft.hpp"

namespace mosbench {

struct SynthSpec {
  int num_systems = 12;
  int utterances_per_system = 30;
  int total_judges = 24;
  int judges_per_utterance = 4;
  double judge_bias_std = 0.8;
  double utterance_noise_std = 0.3;
  double rating_noise_std = 0.4;
  int min_frames = 80;
  int max_frames = 160;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const SynthSpec&) const = default;
};

struct SynthTruth {
  std::map<std::string, double> system_quality;
  std::map<std::string, double> utterance_quality;
  std::map<std::string, double> judge_bias;
};

struct SynthData {
  Corpus corpus;
  SynthTruth truth;
};

/// Spectrogram fixture: a fixed harmonic stripe (every kStripeSpacing-th
/// bin, amplitude 1) over non-negative white noise whose mean off the
/// stripes is exactly noise_gain(quality).
inline constexpr int kStripeSpacing = 16;
bool is_stripe_bin(int bin);
double noise_gain(double quality);  // 0.25 * (6 - q), strictly decreasing

/// Stripe mean over off-stripe mean; strictly increasing in quality.
double snr_proxy(const Spectrogram& spec);

/// Standard normal draw (Box-Muller) that does not depend on the standard
/// library's distribution implementation.
double standard_normal(std::mt19937_64& rng);

SynthData generate_synthetic(const SynthSpec& spec);

/// Per-judge average BiasNet utterance output over every entry of `corpus`,
/// indexed like the roster.
template <typename Scalar>
std::vector<double> estimated_judge_biases(const ModelParams<Scalar>& params,
                                           const Corpus& corpus);

/// Pearson correlation between per-judge estimates (roster order) and the
/// true biases. Throws UndefinedCorrelation for constant estimates or fewer
/// than two judges, ValidationError if a judge has no recorded bias.
double recovery_correlation(std::span<const double> estimates,
                            const std::vector<std::string>& roster, const SynthTruth& truth);

/// Pearson correlation between estimated and true judge biases. Throws
/// UndefinedCorrelation when the estimates are constant (e.g. a zeroed
/// BiasNet) or fewer than two judges exist.
template <typename Scalar>
double bias_recovery(const ModelParams<Scalar>& params, const Corpus& corpus,
                     const SynthTruth& truth);

/// Manifest, spectrogram cache and truth tables under `dir`:
/// manifest.csv, spectrograms.cache, truth_systems.csv,
/// truth_utterances.csv, truth_judges.csv.
void write_synthetic(const std::filesystem::path& dir, const SynthData& data,
                     const StftConfig& stft);

/// Reads the three truth tables written by write_synthetic.
SynthTruth read_truth(const std::filesystem::path& dir);

}  // namespace mosbench
