#include "mosbench/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "mosbench/adam.hpp"
#include "mosbench/csv.hpp"
#include "mosbench/error.hpp"
#include "mosbench/hashing.hpp"

namespace mosbench {

namespace {

// BiasNet trained alone must produce whole scores, so it starts where MeanNet
// would.
constexpr double kScoreOrigin = 3.0;

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw ValidationError("train.batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ValidationError("train.learning_rate must be positive");
  if (epochs < 1) throw ValidationError("train.epochs must be >= 1");
  if (ablation.disable_biasnet && ablation.disable_meannet)
    throw ValidationError("disable_biasnet and disable_meannet are mutually exclusive");
  loss.validate();
}

LossConfig TrainConfig::effective_loss() const {
  LossConfig out = loss;
  if (ablation.disable_clipping) out.clipping_enabled = false;
  return out;
}

LossTerms TrainConfig::loss_terms() const {
  LossTerms terms;
  if (ablation.disable_biasnet) terms.judge = false;
  if (ablation.disable_meannet) terms.mean = false;
  return terms;
}

PaddingMode TrainConfig::padding() const {
  return ablation.zero_padding ? PaddingMode::kZero : PaddingMode::kRepetitive;
}

std::size_t argmin_earliest(std::span<const double> values) {
  if (values.empty()) throw ValidationError("argmin of an empty sequence");
  std::size_t best = 0;
  double best_value = std::numeric_limits<double>::infinity();
  bool found = false;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (std::isnan(values[i])) continue;
    if (!found || values[i] < best_value) {
      best = i;
      best_value = values[i];
      found = true;
    }
  }
  return best;
}

ModelParams<float> initial_params(const TrainConfig& cfg, int num_judges) {
  ArchConfig arch = cfg.arch;
  if (arch.num_judges == 0) arch.num_judges = num_judges;
  if (arch.num_judges != num_judges)
    throw ValidationError("arch.num_judges (" + std::to_string(arch.num_judges) +
                          ") differs from the roster size (" + std::to_string(num_judges) + ")");
  auto params = init_params<float>(arch, derive_seed(cfg.seed, "init"));
  if (cfg.ablation.disable_biasnet) params.bias_net_active = false;
  if (cfg.ablation.disable_meannet) {
    params.mean_net_active = false;
    params.bias_net.output.bias.setConstant(float(kScoreOrigin));
  }
  return params;
}

double corpus_loss(const ModelParams<float>& params, const Corpus& corpus,
                   const TrainConfig& cfg) {
  const auto tuples = expand_tuples(corpus);
  if (tuples.empty()) throw ValidationError("loss over an empty corpus");
  const LossConfig loss = cfg.effective_loss();
  const LossTerms terms = cfg.loss_terms();
  // Fixed order: inference mode makes the result independent of grouping up
  // to rounding, and a fixed grouping removes even that.
  std::vector<std::size_t> order(tuples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  double total = 0.0;
  const std::size_t step = std::size_t(cfg.batch_size);
  for (std::size_t start = 0; start < order.size(); start += step) {
    const std::size_t end = std::min(order.size(), start + step);
    const std::span<const std::size_t> chosen(order.data() + start, end - start);
    const TrainingBatch batch = assemble_batch(tuples, chosen, corpus, cfg.padding());
    const auto out = mbnet_forward(params, batch);
    total += mbnet_loss(out.mean, out.judge, batch, loss, terms) * double(batch.size());
  }
  return total / double(tuples.size());
}

TrainResult train(const Corpus& train_corpus, const Corpus& val_corpus, const TrainConfig& cfg,
                  const EpochHook& on_epoch) {
  cfg.validate();
  if (train_corpus.empty()) throw ValidationError("training corpus is empty");
  if (val_corpus.empty()) throw ValidationError("validation corpus is empty");
  if (train_corpus.judge_roster != val_corpus.judge_roster)
    throw ValidationError("training and validation rosters differ");

  const int num_judges = int(train_corpus.judge_roster.size());
  ModelParams<float> params = initial_params(cfg, num_judges);
  Adam<float> adam(params, AdamConfig{cfg.learning_rate});
  if (!params.mean_net_active) adam.freeze("mean.");
  if (!params.bias_net_active) {
    adam.freeze("bias.");
    adam.freeze("judge_embeddings");
  }

  const LossConfig loss = cfg.effective_loss();
  const LossTerms terms = cfg.loss_terms();
  const auto tuples = expand_tuples(train_corpus);

  TrainResult result;
  ModelParams<float> grads = zeros_like(params);
  MbNetTape<float> tape;
  std::vector<double> val_losses;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto plan = plan_batches(tuples.size(), std::size_t(cfg.batch_size),
                                   derive_seed(cfg.seed, "batches", epoch));
    double epoch_total = 0.0;
    for (std::size_t b = 0; b < plan.size(); ++b) {
      const TrainingBatch batch = assemble_batch(tuples, plan[b], train_corpus, cfg.padding());
      const std::int64_t step = (std::int64_t(epoch) << 32) | std::int64_t(b);
      const auto out = tape.forward(params, batch, derive_seed(cfg.seed, "dropout", step));
      const auto lg = mbnet_loss_gradient(out.mean, out.judge, batch, loss, terms);
      if (!std::isfinite(lg.loss)) {
        std::ostringstream msg;
        msg << "non-finite training loss at epoch " << epoch << ", batch " << (b + 1);
        throw DivergenceError(msg.str());
      }
      epoch_total += lg.loss * double(batch.size());
      for_each_parameter(grads, [](const std::string&, auto& t) { t.setZero(); });
      tape.backward(params, lg.d_mean_frames, lg.d_judge_frames, grads);
      adam.step(params, grads);
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = epoch_total / double(tuples.size());
    record.val_loss = corpus_loss(params, val_corpus, cfg);
    if (!std::isfinite(record.val_loss)) {
      std::ostringstream msg;
      msg << "non-finite validation loss at epoch " << epoch;
      throw DivergenceError(msg.str());
    }
    if (on_epoch) record.checkpoint = on_epoch(record, params);

    val_losses.push_back(record.val_loss);
    const std::size_t best = argmin_earliest(val_losses);
    if (best + 1 == std::size_t(epoch)) {
      result.params = params;
      result.history.best_epoch = epoch;
    }
    result.history.epochs.push_back(std::move(record));
  }
  return result;
}

std::string history_csv(const TrainHistory& history) {
  std::string out = "epoch,train_loss,val_loss\n";
  for (const auto& r : history.epochs)
    out += std::to_string(r.epoch) + "," + format_real(r.train_loss) + "," +
           format_real(r.val_loss) + "\n";
  return out;
}

void write_history_csv(const std::filesystem::path& path, const TrainHistory& history) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << history_csv(history);
  if (!out) throw IoError("failed writing " + path.string());
}

std::size_t SeedAggregate::failures() const {
  return std::size_t(std::count_if(runs.begin(), runs.end(), [](const SeedRun& r) { return !r.ok(); }));
}

const AggregateRow* SeedAggregate::find(const std::string& mode, const std::string& level,
                                        const std::string& metric) const {
  for (const auto& row : rows)
    if (row.mode == mode && row.level == level && row.metric == metric) return &row;
  return nullptr;
}

SeedAggregate run_seeds(const Corpus& train_corpus, const Corpus& val_corpus,
                        const TrainConfig& cfg, std::span<const std::uint64_t> seeds,
                        const EvalSpec& eval, const SeedHookFactory& hooks) {
  if (seeds.empty()) throw ValidationError("run_seeds needs at least one seed");
  if (!eval.test) throw ValidationError("run_seeds needs an evaluation corpus");
  SeedAggregate out;
  for (const std::uint64_t seed : seeds) {
    SeedRun run;
    run.seed = seed;
    TrainConfig seeded = cfg;
    seeded.seed = seed;
    try {
      run.result = train(train_corpus, val_corpus, seeded, hooks ? hooks(seed) : EpochHook{});
    } catch (const std::exception& e) {
      run.failure = e.what();
    }
    for (const auto& mode : eval.modes) {
      MetricsReport report;
      report.mode = mode;
      std::string failure = run.ok() ? "" : "training failed";
      if (run.ok()) {
        try {
          report = evaluate(run.result.params, *eval.test, mode);
        } catch (const std::exception& e) {
          failure = e.what();
        }
      }
      run.reports.push_back(report);
      run.mode_failures.push_back(failure);
    }
    out.runs.push_back(std::move(run));
  }

  // Row layout follows the first run's report; failed entries contribute no value.
  for (std::size_t m = 0; m < eval.modes.size(); ++m) {
    MetricsReport shape;
    shape.mode = eval.modes[m];
    shape.utterance = LevelMetrics{};
    for (const auto& row : metric_rows(shape)) {
      AggregateRow agg{row.mode, row.level, row.metric, std::nullopt, std::nullopt, 0, seeds.size()};
      std::vector<double> values;
      for (const auto& run : out.runs) {
        if (!run.mode_failures[m].empty()) continue;
        for (const auto& r : metric_rows(run.reports[m]))
          if (r.level == row.level && r.metric == row.metric && r.value) values.push_back(*r.value);
      }
      agg.defined = values.size();
      if (!values.empty()) {
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= double(values.size());
        double var = 0.0;
        for (double v : values) var += (v - mean) * (v - mean);
        agg.mean = mean;
        agg.stddev = std::sqrt(var / double(values.size()));
      }
      out.rows.push_back(agg);
    }
  }
  return out;
}

std::string aggregate_csv(const SeedAggregate& aggregate) {
  std::string out = "mode,level,metric,mean,std,defined,seeds\n";
  for (const auto& r : aggregate.rows)
    out += r.mode + "," + r.level + "," + r.metric + "," + format_metric(r.mean) + "," +
           format_metric(r.stddev) + "," + std::to_string(r.defined) + "," +
           std::to_string(r.seeds) + "\n";
  return out;
}

std::string seed_runs_csv(const SeedAggregate& aggregate) {
  std::string out = "seed,status,best_epoch,message\n";
  for (const auto& run : aggregate.runs) {
    std::string message = run.failure;
    for (std::size_t m = 0; message.empty() && m < run.mode_failures.size(); ++m)
      if (!run.mode_failures[m].empty())
        message = run.reports[m].mode.name() + ": " + run.mode_failures[m];
    out += std::to_string(run.seed) + "," + (run.ok() ? "ok" : "failed") + "," +
           std::to_string(run.result.history.best_epoch) + "," + csv_escape(message) + "\n";
  }
  return out;
}

}  // namespace mosbench
