#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mosbench/batching.hpp"
#include "mosbench/corpus.hpp"
#include "mosbench/evaluation.hpp"
#include "mosbench/model.hpp"
#include "mosbench/objective.hpp"

namespace mosbench {

struct AblationFlags {
  bool disable_biasnet = false;   // MeanNet alone, judge term dropped
  bool disable_meannet = false;   // BiasNet alone against raw judge scores
  bool disable_clipping = false;  // plain MSE
  bool zero_padding = false;      // zero frames instead of repetitive padding

  bool operator==(const AblationFlags&) const = default;
};

struct TrainConfig {
  int batch_size = 64;
  double learning_rate = 1e-4;
  int epochs = 50;
  std::uint64_t seed = 0;
  LossConfig loss;
  /// num_judges == 0 means "take it from the training roster".
  ArchConfig arch;
  AblationFlags ablation;

  void validate() const;

  /// Loss settings after the ablation flags are applied.
  LossConfig effective_loss() const;
  LossTerms loss_terms() const;
  PaddingMode padding() const;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  std::string checkpoint;  // whatever the epoch hook returned
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;  // 1-based; 0 before any epoch ran
};

struct TrainResult {
  ModelParams<float> params;  // from the best epoch
  TrainHistory history;
};

/// Called after every epoch with the parameters at that point; the returned
/// string is stored as the epoch's checkpoint reference.
using EpochHook = std::function<std::string(const EpochRecord&, const ModelParams<float>&)>;

/// Index of the smallest value, earliest on ties. NaN never wins.
std::size_t argmin_earliest(std::span<const double> values);

/// Model as it stands before the first update, with ablation flags applied.
ModelParams<float> initial_params(const TrainConfig& cfg, int num_judges);

/// Mean per-tuple loss over the whole corpus in inference mode.
double corpus_loss(const ModelParams<float>& params, const Corpus& corpus,
                   const TrainConfig& cfg);

/// Adam on the joint objective for cfg.epochs epochs; returns the parameters
/// of the epoch with the smallest validation loss. Throws DivergenceError on
/// a non-finite loss.
TrainResult train(const Corpus& train_corpus, const Corpus& val_corpus, const TrainConfig& cfg,
                  const EpochHook& on_epoch = {});

/// CSV with header epoch,train_loss,val_loss.
std::string history_csv(const TrainHistory& history);
void write_history_csv(const std::filesystem::path& path, const TrainHistory& history);

/// What run_seeds scores each trained model on.
struct EvalSpec {
  const Corpus* test = nullptr;
  std::vector<InferenceMode> modes;
};

struct SeedRun {
  std::uint64_t seed = 0;
  std::string failure;  // empty when training succeeded
  TrainResult result;
  std::vector<MetricsReport> reports;      // aligned with EvalSpec::modes
  std::vector<std::string> mode_failures;  // aligned with EvalSpec::modes; empty when scored

  bool ok() const { return failure.empty(); }
};

/// One metric summarized over seeds: mean and population standard deviation
/// of the runs where it is defined.
struct AggregateRow {
  std::string mode, level, metric;
  Metric mean, stddev;
  std::size_t defined = 0;  // runs contributing a value
  std::size_t seeds = 0;    // runs attempted
};

struct SeedAggregate {
  std::vector<SeedRun> runs;  // in seed order as given
  std::vector<AggregateRow> rows;

  std::size_t failures() const;
  const AggregateRow* find(const std::string& mode, const std::string& level,
                           const std::string& metric) const;
};

/// Hook factory so each seed can write its own checkpoints.
using SeedHookFactory = std::function<EpochHook(std::uint64_t seed)>;

/// Trains once per seed (cfg.seed replaced), scores each result in every
/// mode and aggregates. Training or scoring failures are recorded per seed
/// instead of aborting the remaining runs.
SeedAggregate run_seeds(const Corpus& train_corpus, const Corpus& val_corpus,
                        const TrainConfig& cfg, std::span<const std::uint64_t> seeds,
                        const EvalSpec& eval, const SeedHookFactory& hooks = {});

/// Header mode,level,metric,mean,std,defined,seeds.
std::string aggregate_csv(const SeedAggregate& aggregate);

/// Header seed,status,best_epoch,message; status is ok or failed.
std::string seed_runs_csv(const SeedAggregate& aggregate);

}  // namespace mosbench
