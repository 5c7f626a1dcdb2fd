#include <set>

#include "doctest.h"
#include "mosbench/error.hpp"
#include "mosbench/evaluation.hpp"
#include "mosbench/synthbench.hpp"
#include "support/oracles.hpp"

using namespace mosbench;

namespace {

struct Fixture {
  SynthData data = generate_synthetic(oracle::tiny_synth(3));
  ModelParams<float> params = init_params<float>(oracle::tiny_arch(6), 21);
  Fixture() {
    // Non-trivial judge offsets so the modes actually differ.
    params.bias_net.output.bias.setConstant(0.3f);
  }
};

// Per-judge forward passes, one at a time, averaged.
double per_judge_average(const ModelParams<float>& params, const CorpusEntry& e,
                         const std::vector<std::string>& roster) {
  const Spectrogram& spec = *e.spectrogram;
  const double mean =
      double(meannet_forward(params, std::span<const Spectrogram>(&spec, 1)).utterance_scores(0));
  double sum = 0.0;
  for (const auto& r : e.ratings) {
    const int k = int(std::lower_bound(roster.begin(), roster.end(), r.judge_id) - roster.begin());
    const auto bias = biasnet_forward(params, std::span<const Spectrogram>(&spec, 1),
                                      std::span<const int>(&k, 1));
    sum += mean + double(bias.utterance_scores(0));
  }
  return sum / double(e.ratings.size());
}

}  // namespace

TEST_CASE("mode names round-trip") {
  for (const auto& m : {InferenceMode::mean_only(), InferenceMode::correct_judges(),
                        InferenceMode::random_judges(4)})
    CHECK(InferenceMode::parse(m.name(), m.seed) == m);
  CHECK_THROWS_AS(InferenceMode::parse("all_judges"), ValidationError);
}

TEST_CASE("correct-judge prediction is the average of per-judge outputs") {
  Fixture f;
  for (const auto& e : f.data.corpus.entries) {
    const double got =
        predict_utterance(f.params, e, InferenceMode::correct_judges(), f.data.corpus.judge_roster);
    CHECK(got == doctest::Approx(per_judge_average(f.params, e, f.data.corpus.judge_roster))
                     .epsilon(1e-5));
  }
}

TEST_CASE("a zeroed or inactive BiasNet collapses every mode to mean-only") {
  Fixture f;
  const auto mean = predict_corpus(f.params, f.data.corpus, InferenceMode::mean_only());
  auto zeroed = f.params;
  zeroed.bias_net.output.weight.setZero();
  zeroed.bias_net.output.bias.setZero();
  auto inactive = f.params;
  inactive.bias_net_active = false;
  for (const auto& mode : {InferenceMode::correct_judges(), InferenceMode::random_judges(9)}) {
    const auto z = predict_corpus(zeroed, f.data.corpus, mode);
    const auto off = predict_corpus(inactive, f.data.corpus, mode);
    for (std::size_t i = 0; i < mean.size(); ++i) {
      CHECK(z[i] == doctest::Approx(mean[i]).epsilon(1e-12));
      CHECK(off[i] == mean[i]);
    }
  }
  const auto with_bias = predict_corpus(f.params, f.data.corpus, InferenceMode::correct_judges());
  CHECK(with_bias != mean);
}

TEST_CASE("random judges: distinct, m of them, deterministic per seed") {
  Fixture f;
  const auto& roster = f.data.corpus.judge_roster;
  bool any_differs = false;
  for (const auto& e : f.data.corpus.entries) {
    const auto a = judges_for(e, roster, InferenceMode::random_judges(5));
    const auto b = judges_for(e, roster, InferenceMode::random_judges(5));
    const auto c = judges_for(e, roster, InferenceMode::random_judges(6));
    CHECK(a == b);
    CHECK(a.size() == e.ratings.size());
    CHECK(std::set<int>(a.begin(), a.end()).size() == a.size());
    for (int k : a) {
      CHECK(k >= 0);
      CHECK(k < int(roster.size()));
    }
    any_differs = any_differs || a != c;
  }
  CHECK(any_differs);
  const auto p = predict_corpus(f.params, f.data.corpus, InferenceMode::random_judges(5));
  const auto q = predict_corpus(f.params, f.data.corpus, InferenceMode::random_judges(5));
  CHECK(p == q);
}

TEST_CASE("correct judges are the entry's raters") {
  Fixture f;
  const auto& roster = f.data.corpus.judge_roster;
  for (const auto& e : f.data.corpus.entries) {
    const auto idx = judges_for(e, roster, InferenceMode::correct_judges());
    REQUIRE(idx.size() == e.ratings.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
      CHECK(roster[std::size_t(idx[i])] == e.ratings[i].judge_id);
  }
  CHECK(judges_for(f.data.corpus.entries[0], roster, InferenceMode::mean_only()).empty());
}

TEST_CASE("mean-only inference ignores the sampling seed") {
  Fixture f;
  const auto a = predict_corpus(f.params, f.data.corpus, InferenceMode::mean_only());
  InferenceMode seeded = InferenceMode::mean_only();
  seeded.seed = 77;
  CHECK(predict_corpus(f.params, f.data.corpus, seeded) == a);
}

TEST_CASE("mean-only inference needs MeanNet") {
  Fixture f;
  f.params.mean_net_active = false;
  CHECK_THROWS_AS(predict_corpus(f.params, f.data.corpus, InferenceMode::mean_only()),
                  ValidationError);
  CHECK_NOTHROW(predict_corpus(f.params, f.data.corpus, InferenceMode::random_judges(1)));
}

TEST_CASE("scoring perfect predictions") {
  Fixture f;
  std::vector<double> truth;
  for (const auto& e : f.data.corpus.entries) truth.push_back(e.mean_score);
  const auto report = score_predictions(f.data.corpus, truth, InferenceMode::mean_only());
  CHECK(*report.utterance->srcc == doctest::Approx(1.0));
  CHECK(*report.utterance->lcc == doctest::Approx(1.0));
  CHECK(*report.utterance->mse == 0.0);
  CHECK(*report.system.mse == 0.0);
  CHECK(report.system_count == 4);
  CHECK(report.utterance_count == f.data.corpus.size());
  const auto text = report_text(report);
  CHECK(text.rfind("mode=mean_only\n", 0) == 0);
  CHECK(text.find("\nsystem.srcc=") != std::string::npos);
  CHECK_THROWS_AS(score_predictions(f.data.corpus, std::vector<double>{1.0},
                                    InferenceMode::mean_only()),
                  ValidationError);
}

TEST_CASE("constant predictions give undefined correlations, not failures") {
  Fixture f;
  const std::vector<double> flat(f.data.corpus.size(), 3.0);
  const auto report = score_predictions(f.data.corpus, flat, InferenceMode::mean_only());
  CHECK_FALSE(report.utterance->srcc.has_value());
  CHECK_FALSE(report.system.lcc.has_value());
  CHECK(report.utterance->mse.has_value());
  CHECK(report_text(report).find("utterance.srcc=undefined") != std::string::npos);
}
