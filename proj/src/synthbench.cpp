#include "mosbench/synthbench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

#include "mosbench/csv.hpp"
#include "mosbench/error.hpp"
#include "mosbench/evaluation.hpp"
#include "mosbench/hashing.hpp"

namespace mosbench {

namespace {

std::string padded(const std::string& prefix, int value, int count) {
  const int width = int(std::to_string(std::max(count - 1, 0)).size());
  std::string digits = std::to_string(value);
  if (int(digits.size()) < width) digits.insert(0, std::size_t(width) - digits.size(), '0');
  return prefix + digits;
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  const double span = double(hi - lo + 1);
  return lo + std::min(hi - lo, int(nn::unit_uniform(rng) * span));
}

std::shared_ptr<const Spectrogram> fixture(double quality, int frames, std::mt19937_64& rng) {
  auto spec = std::make_shared<Spectrogram>();
  spec->frames.resize(frames, kFrequencyBins);
  double noise_sum = 0.0;
  long noise_cells = 0;
  for (int t = 0; t < frames; ++t)
    for (int f = 0; f < kFrequencyBins; ++f) {
      if (is_stripe_bin(f)) {
        spec->frames(t, f) = 1.0f;
      } else {
        const double u = nn::unit_uniform(rng);
        spec->frames(t, f) = float(u);
        noise_sum += double(float(u));
        ++noise_cells;
      }
    }
  const double scale = noise_gain(quality) * double(noise_cells) / noise_sum;
  for (int t = 0; t < frames; ++t)
    for (int f = 0; f < kFrequencyBins; ++f)
      if (!is_stripe_bin(f)) spec->frames(t, f) = float(double(spec->frames(t, f)) * scale);
  return spec;
}

void write_table(const std::filesystem::path& path, const std::string& header,
                 const std::map<std::string, double>& values) {
  std::string text = header + "\n";
  for (const auto& [id, v] : values) text += csv_escape(id) + "," + format_real(v) + "\n";
  write_text_file(path, text);
}

std::map<std::string, double> read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::map<std::string, double> out;
  std::string line;
  std::vector<std::string> fields;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    if (!split_csv_line(line, fields) || fields.size() < 2)
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": malformed row");
    try {
      out[fields.front()] = std::stod(fields.back());
    } catch (const std::exception&) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad number");
    }
  }
  return out;
}

}  // namespace

void SynthSpec::validate() const {
  if (num_systems < 1) throw ValidationError("synth.num_systems must be >= 1");
  if (utterances_per_system < 1) throw ValidationError("synth.utterances_per_system must be >= 1");
  if (total_judges < 1) throw ValidationError("synth.total_judges must be >= 1");
  if (judges_per_utterance < 1) throw ValidationError("synth.judges_per_utterance must be >= 1");
  if (judges_per_utterance > total_judges)
    throw ValidationError("synth.judges_per_utterance (" + std::to_string(judges_per_utterance) +
                          ") exceeds synth.total_judges (" + std::to_string(total_judges) + ")");
  if (!(judge_bias_std >= 0.0) || !(utterance_noise_std >= 0.0) || !(rating_noise_std >= 0.0))
    throw ValidationError("synth noise standard deviations must be >= 0");
  if (min_frames < 1 || max_frames < min_frames)
    throw ValidationError("synth frame range must satisfy 1 <= min_frames <= max_frames");
}

bool is_stripe_bin(int bin) { return bin > 0 && bin % kStripeSpacing == 0; }

double noise_gain(double quality) { return 0.25 * (6.0 - quality); }

double snr_proxy(const Spectrogram& spec) {
  double stripe = 0.0, noise = 0.0;
  long ns = 0, nn_ = 0;
  for (int t = 0; t < spec.frame_count(); ++t)
    for (int f = 0; f < spec.bins(); ++f) {
      if (is_stripe_bin(f)) {
        stripe += spec.frames(t, f);
        ++ns;
      } else {
        noise += spec.frames(t, f);
        ++nn_;
      }
    }
  return (stripe / double(ns)) / (noise / double(nn_));
}

double standard_normal(std::mt19937_64& rng) {
  const double u1 = 1.0 - nn::unit_uniform(rng);  // (0, 1]
  const double u2 = nn::unit_uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

SynthData generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  SynthData data;
  const int M = spec.total_judges;

  std::vector<std::string> judges;
  {
    std::mt19937_64 rng(derive_seed(spec.seed, "judges"));
    for (int k = 0; k < M; ++k) {
      judges.push_back(padded("judge", k, M));
      data.truth.judge_bias[judges.back()] = spec.judge_bias_std * standard_normal(rng);
    }
  }

  for (int s = 0; s < spec.num_systems; ++s) {
    const std::string system = padded("sys", s, spec.num_systems);
    std::mt19937_64 sys_rng(derive_seed(spec.seed, "system", s));
    const double q_s = 1.5 + 3.0 * nn::unit_uniform(sys_rng);
    data.truth.system_quality[system] = q_s;

    for (int u = 0; u < spec.utterances_per_system; ++u) {
      const std::string audio = system + padded("_utt", u, spec.utterances_per_system);
      std::mt19937_64 rng(derive_seed(spec.seed, "utterance",
                                      std::int64_t(s) * spec.utterances_per_system + u));
      const double q_i =
          std::clamp(q_s + spec.utterance_noise_std * standard_normal(rng), 1.0, 5.0);
      data.truth.utterance_quality[audio] = q_i;

      std::vector<int> pool(static_cast<std::size_t>(M));
      std::iota(pool.begin(), pool.end(), 0);
      std::vector<RatingRecord> ratings;
      for (int k = 0; k < spec.judges_per_utterance; ++k) {
        std::swap(pool[std::size_t(k)], pool[std::size_t(uniform_int(rng, k, M - 1))]);
        const std::string& judge = judges[std::size_t(pool[std::size_t(k)])];
        const double raw =
            q_i + data.truth.judge_bias[judge] + spec.rating_noise_std * standard_normal(rng);
        const int score = int(std::clamp<long>(std::lround(raw), 1, 5));
        ratings.push_back({audio, system, judge, score});
      }
      const int frames = uniform_int(rng, spec.min_frames, spec.max_frames);
      data.corpus.entries.push_back(
          make_entry(audio, system, fixture(q_i, frames, rng), std::move(ratings)));
    }
  }
  data.corpus.judge_roster = judges;
  std::sort(data.corpus.judge_roster.begin(), data.corpus.judge_roster.end());
  validate_corpus(data.corpus);
  return data;
}

template <typename Scalar>
std::vector<double> estimated_judge_biases(const ModelParams<Scalar>& params,
                                           const Corpus& corpus) {
  const int M = int(corpus.judge_roster.size());
  if (M != params.arch.num_judges)
    throw ValidationError("model judge count differs from the corpus roster");
  std::vector<double> sums(std::size_t(M), 0.0);
  if (corpus.empty()) throw ValidationError("bias estimation needs a nonempty probe corpus");
  if (!params.bias_net_active) return sums;
  std::vector<int> all(static_cast<std::size_t>(M));
  std::iota(all.begin(), all.end(), 0);
  for (const auto& e : corpus.entries) {
    const std::vector<Spectrogram> copies(std::size_t(M), *e.spectrogram);
    const auto out = biasnet_forward(params, std::span<const Spectrogram>(copies),
                                     std::span<const int>(all));
    for (int k = 0; k < M; ++k) sums[std::size_t(k)] += double(out.utterance_scores(k));
  }
  for (double& s : sums) s /= double(corpus.size());
  return sums;
}

double recovery_correlation(std::span<const double> estimates,
                            const std::vector<std::string>& roster, const SynthTruth& truth) {
  if (roster.size() < 2) throw UndefinedCorrelation("bias recovery needs at least two judges");
  if (estimates.size() != roster.size())
    throw ValidationError("one bias estimate per roster judge required");
  std::vector<double> actual;
  for (const auto& judge : roster) {
    const auto it = truth.judge_bias.find(judge);
    if (it == truth.judge_bias.end())
      throw ValidationError("no true bias recorded for judge '" + judge + "'");
    actual.push_back(it->second);
  }
  return pearson_lcc(estimates, actual);
}

template <typename Scalar>
double bias_recovery(const ModelParams<Scalar>& params, const Corpus& corpus,
                     const SynthTruth& truth) {
  if (corpus.judge_roster.size() < 2)
    throw UndefinedCorrelation("bias recovery needs at least two judges");
  const auto estimates = estimated_judge_biases(params, corpus);
  return recovery_correlation(estimates, corpus.judge_roster, truth);
}

void write_synthetic(const std::filesystem::path& dir, const SynthData& data,
                     const StftConfig& stft) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_manifest(dir / "manifest.csv", data.corpus);
  SpectrogramCache cache;
  for (const auto& e : data.corpus.entries) cache.put(e.audio_id, stft.hash(), e.spectrogram);
  cache.save(dir / "spectrograms.cache");
  write_table(dir / "truth_systems.csv", "system_id,quality", data.truth.system_quality);
  write_table(dir / "truth_judges.csv", "judge_id,bias", data.truth.judge_bias);

  std::string text = "audio_id,system_id,quality\n";
  for (const auto& e : data.corpus.entries)
    text += csv_escape(e.audio_id) + "," + csv_escape(e.system_id) + "," +
            format_real(data.truth.utterance_quality.at(e.audio_id)) + "\n";
  write_text_file(dir / "truth_utterances.csv", text);
}

SynthTruth read_truth(const std::filesystem::path& dir) {
  SynthTruth truth;
  truth.system_quality = read_table(dir / "truth_systems.csv");
  truth.utterance_quality = read_table(dir / "truth_utterances.csv");
  truth.judge_bias = read_table(dir / "truth_judges.csv");
  return truth;
}

#define MOSBENCH_INSTANTIATE(S)                                                           \
  template std::vector<double> estimated_judge_biases<S>(const ModelParams<S>&,           \
                                                         const Corpus&);                  \
  template double bias_recovery<S>(const ModelParams<S>&, const Corpus&, const SynthTruth&);

MOSBENCH_INSTANTIATE(float)
MOSBENCH_INSTANTIATE(double)

#undef MOSBENCH_INSTANTIATE

}  // namespace mosbench
