#include <algorithm>
#include <map>
#include <random>

#include "doctest.h"
#include "mosbench/error.hpp"
#include "mosbench/evaluation.hpp"
#include "mosbench/synthbench.hpp"
#include "support/oracles.hpp"
#include "support/tempdir.hpp"

using namespace mosbench;

TEST_CASE("generator is deterministic") {
  const auto a = generate_synthetic(oracle::tiny_synth(8));
  const auto b = generate_synthetic(oracle::tiny_synth(8));
  REQUIRE(a.corpus.size() == b.corpus.size());
  for (std::size_t i = 0; i < a.corpus.size(); ++i) {
    CHECK(a.corpus.entries[i].audio_id == b.corpus.entries[i].audio_id);
    CHECK(*a.corpus.entries[i].spectrogram == *b.corpus.entries[i].spectrogram);
    CHECK(a.corpus.entries[i].mean_score == b.corpus.entries[i].mean_score);
  }
  CHECK(a.truth.judge_bias == b.truth.judge_bias);
  CHECK(a.truth.utterance_quality == b.truth.utterance_quality);
  const auto c = generate_synthetic(oracle::tiny_synth(9));
  CHECK(a.truth.system_quality != c.truth.system_quality);
}

TEST_CASE("default spec: sizes, ranges and corpus invariants") {
  const SynthSpec spec;
  const auto data = generate_synthetic(spec);
  CHECK(data.corpus.size() == 360);
  CHECK(data.corpus.judge_roster.size() == 24);
  CHECK_NOTHROW(validate_corpus(data.corpus));
  for (const auto& [s, q] : data.truth.system_quality) {
    CHECK(q >= 1.5);
    CHECK(q <= 4.5);
  }
  for (const auto& e : data.corpus.entries) {
    CHECK(e.ratings.size() == 4);
    CHECK(e.spectrogram->frame_count() >= 80);
    CHECK(e.spectrogram->frame_count() <= 160);
    for (const auto& r : e.ratings) {
      CHECK(r.score >= 1);
      CHECK(r.score <= 5);
    }
    const double q = data.truth.utterance_quality.at(e.audio_id);
    CHECK(q >= 1.0);
    CHECK(q <= 5.0);
  }
}

TEST_CASE("no judge bias and no rating noise: every rating is round(q)") {
  auto spec = oracle::tiny_synth(2);
  spec.judge_bias_std = 0.0;
  spec.rating_noise_std = 0.0;
  const auto data = generate_synthetic(spec);
  for (const auto& e : data.corpus.entries) {
    const double q = data.truth.utterance_quality.at(e.audio_id);
    for (const auto& r : e.ratings) {
      CHECK(r.score == e.ratings.front().score);
      CHECK(r.score - q > -0.5);
      CHECK(r.score - q <= 0.5);
    }
    for (const auto& [j, b] : bias_scores(e)) CHECK(b == 0.0);
  }
}

TEST_CASE("m == M means every judge rates every utterance") {
  auto spec = oracle::tiny_synth(3);
  spec.judges_per_utterance = spec.total_judges;
  const auto data = generate_synthetic(spec);
  for (const auto& e : data.corpus.entries) CHECK(int(e.ratings.size()) == spec.total_judges);
}

TEST_CASE("invalid specs are rejected") {
  auto spec = oracle::tiny_synth();
  spec.judges_per_utterance = spec.total_judges + 1;
  CHECK_THROWS_AS(generate_synthetic(spec), ValidationError);
  spec = oracle::tiny_synth();
  spec.judge_bias_std = -1;
  CHECK_THROWS_AS(generate_synthetic(spec), ValidationError);
  spec = oracle::tiny_synth();
  spec.min_frames = 20;
  spec.max_frames = 10;
  CHECK_THROWS_AS(generate_synthetic(spec), ValidationError);
}

TEST_CASE("Monte-Carlo oracle: per-judge mean residual tracks the true bias") {
  const auto data = generate_synthetic(SynthSpec{});
  std::map<std::string, std::pair<double, int>> residual;
  for (const auto& e : data.corpus.entries) {
    const double q = data.truth.utterance_quality.at(e.audio_id);
    for (const auto& r : e.ratings) {
      residual[r.judge_id].first += r.score - q;
      ++residual[r.judge_id].second;
    }
  }
  std::vector<double> est, truth;
  for (const auto& [judge, acc] : residual) {
    est.push_back(acc.first / acc.second);
    truth.push_back(data.truth.judge_bias.at(judge));
  }
  CHECK(oracle::pearson(est, truth) >= 0.9);
}

TEST_CASE("SNR proxy is strictly monotone in utterance quality") {
  const auto data = generate_synthetic(SynthSpec{});
  std::vector<std::pair<double, double>> pairs;
  for (const auto& e : data.corpus.entries)
    pairs.emplace_back(data.truth.utterance_quality.at(e.audio_id), snr_proxy(*e.spectrogram));
  std::sort(pairs.begin(), pairs.end());
  for (std::size_t i = 1; i < pairs.size(); ++i)
    if (pairs[i].first > pairs[i - 1].first) CHECK(pairs[i].second > pairs[i - 1].second);
  CHECK(noise_gain(1.0) > noise_gain(5.0));
}

TEST_CASE("recovery correlation: identity, independence and degenerate inputs") {
  const auto data = generate_synthetic(SynthSpec{});
  const auto& roster = data.corpus.judge_roster;
  std::vector<double> exact;
  for (const auto& j : roster) exact.push_back(data.truth.judge_bias.at(j));
  CHECK(recovery_correlation(exact, roster, data.truth) == doctest::Approx(1.0));

  // Permutation oracle: shuffled biases carry no information.
  std::mt19937_64 rng(12);
  double sum = 0, sum_abs = 0;
  for (int i = 0; i < 100; ++i) {
    auto shuffled = exact;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const double r = recovery_correlation(shuffled, roster, data.truth);
    sum += r;
    sum_abs += std::abs(r);
  }
  CHECK(std::abs(sum / 100) < 0.1);
  CHECK(sum_abs / 100 < 0.3);

  const std::vector<double> flat(roster.size(), 0.25);
  CHECK_THROWS_AS(recovery_correlation(flat, roster, data.truth), UndefinedCorrelation);
}

TEST_CASE("bias recovery of a zeroed BiasNet is undefined") {
  const auto data = generate_synthetic(oracle::tiny_synth(4));
  auto params = init_params<float>(oracle::tiny_arch(int(data.corpus.judge_roster.size())), 1);
  params.bias_net.output.weight.setZero();
  params.bias_net.output.bias.setZero();
  CHECK_THROWS_AS(bias_recovery(params, data.corpus, data.truth), UndefinedCorrelation);
  const auto est = estimated_judge_biases(params, data.corpus);
  CHECK(std::all_of(est.begin(), est.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("truth tables round-trip through disk") {
  testing::TempDir dir("synth");
  const auto data = generate_synthetic(oracle::tiny_synth(6));
  write_synthetic(dir.path(), data, StftConfig{});
  for (const char* f : {"manifest.csv", "spectrograms.cache", "truth_systems.csv",
                        "truth_utterances.csv", "truth_judges.csv"})
    CHECK(std::filesystem::exists(dir / f));
  const auto truth = read_truth(dir.path());
  CHECK(truth.system_quality == data.truth.system_quality);
  CHECK(truth.utterance_quality == data.truth.utterance_quality);
  CHECK(truth.judge_bias == data.truth.judge_bias);
}
