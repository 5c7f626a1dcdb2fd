#include "doctest.h"
#include "mosbench/error.hpp"
#include "mosbench/experiments.hpp"
#include "support/oracles.hpp"

using namespace mosbench;

TEST_CASE("standard variants and their scoring modes") {
  const auto v = standard_variants(3);
  REQUIRE(v.size() == 5);
  CHECK(v[0].slug == "full");
  CHECK(v[0].modes.size() == 3);
  CHECK(v[0].table_mode == InferenceMode::mean_only());
  for (const auto& row : v) {
    const int flags = row.flags.disable_biasnet + row.flags.disable_meannet +
                      row.flags.disable_clipping + row.flags.zero_padding;
    CHECK(flags == (row.slug == "full" ? 0 : 1));
    CHECK(std::find(row.modes.begin(), row.modes.end(), row.table_mode) != row.modes.end());
  }
  const auto* no_mean = &v[2];
  CHECK(no_mean->flags.disable_meannet);
  CHECK(no_mean->table_mode == InferenceMode::random_judges(3));
}

TEST_CASE("variant selection by slug") {
  const std::vector<std::string> slugs{"zero_padding", "full"};
  const auto v = select_variants(slugs, 0);
  REQUIRE(v.size() == 2);
  CHECK(v[0].slug == "zero_padding");
  CHECK(v[1].slug == "full");
  const std::vector<std::string> bad{"no_such"};
  CHECK_THROWS_AS(select_variants(bad, 0), ValidationError);
}

TEST_CASE("ablation study on a tiny corpus fills both tables") {
  const auto data = generate_synthetic(oracle::tiny_synth(5));
  const auto split = split_corpus(data.corpus, {14, 4, 6}, 2);
  TrainConfig cfg;
  cfg.arch = oracle::tiny_arch(6);
  cfg.batch_size = 8;
  cfg.learning_rate = 3e-3;
  cfg.epochs = 1;
  const std::vector<std::uint64_t> seeds{1, 2};
  const auto variants = standard_variants(4);
  const auto study = run_ablation(split, cfg, seeds, variants, &data.truth);
  REQUIRE(study.rows.size() == 5);
  for (const auto& row : study.rows) CHECK(row.aggregate.runs.size() == 2);
  CHECK(study.find("full")->bias_recovery.size() == 2);
  CHECK(study.find("no_biasnet")->bias_recovery.empty());
  CHECK(study.find("missing") == nullptr);

  const std::string table = ablation_table_csv(study);
  CHECK(table.rfind("variant,mode,utterance_srcc,utterance_srcc_std,system_srcc,"
                    "system_srcc_std,failed_seeds\n",
                    0) == 0);
  CHECK(std::count(table.begin(), table.end(), '\n') == 6);
  CHECK(table.find("-MeanNet,random_judges,") != std::string::npos);
  const std::string conditions = condition_table_csv(study);
  CHECK(std::count(conditions.begin(), conditions.end(), '\n') == 4);
  CHECK(study_text(study).find("-Reppad") != std::string::npos);
}
