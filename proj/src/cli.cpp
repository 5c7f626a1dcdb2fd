#include "mosbench/cli.hpp"

#include <algorithm>
#include <cstdio>

#include "mosbench/checkpoint.hpp"
#include "mosbench/csv.hpp"
#include "mosbench/error.hpp"
#include "mosbench/evaluation.hpp"
#include "mosbench/experiments.hpp"
#include "mosbench/training.hpp"

namespace mosbench {

namespace fs = std::filesystem;

namespace {

constexpr const char* kResolvedConfig = "config.resolved";

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

std::string epoch_name(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "epoch_%03d.ckpt", epoch);
  return buf;
}

const Corpus& chosen_split(const LoadedData& data, const std::string& which) {
  if (which == "train") return data.split.train;
  if (which == "validation") return data.split.validation;
  if (which == "test") return data.split.test;
  return data.corpus;
}

/// Epoch hook writing one checkpoint per epoch under `dir`.
EpochHook checkpoint_writer(const fs::path& dir, const std::vector<std::string>& roster,
                            std::ostream& log) {
  return [dir, roster, &log](const EpochRecord& r, const ModelParams<float>& params) {
    const fs::path path = dir / epoch_name(r.epoch);
    save_checkpoint(path, Checkpoint<float>{params, roster});
    log << "epoch " << r.epoch << " train_loss=" << format_real(r.train_loss)
        << " val_loss=" << format_real(r.val_loss) << "\n";
    return path.filename().string();
  };
}

/// Per-epoch checkpoints, best.ckpt and history.csv for one finished run.
void finish_run(const fs::path& dir, const TrainResult& result,
                const std::vector<std::string>& roster) {
  save_checkpoint(dir / "best.ckpt", Checkpoint<float>{result.params, roster});
  write_history_csv(dir / "history.csv", result.history);
}

Checkpoint<float> load_matching_checkpoint(const RunConfig& config, const Corpus& corpus) {
  if (config.eval.checkpoint.empty())
    throw ValidationError("eval.checkpoint is required (set it with --set eval.checkpoint=PATH)");
  if (!fs::exists(config.eval.checkpoint))
    throw IoError("checkpoint not found: " + config.eval.checkpoint);
  auto ckpt = load_checkpoint<float>(config.eval.checkpoint);
  if (ckpt.roster != corpus.judge_roster)
    throw ValidationError("checkpoint judge roster differs from the corpus roster");
  return ckpt;
}

void cmd_synth(const RunConfig& config, const fs::path& out, std::ostream& log) {
  const SynthData data = generate_synthetic(config.synth);
  write_synthetic(out, data, config.stft);
  log << "wrote " << data.corpus.size() << " utterances, " << data.corpus.judge_roster.size()
      << " judges to " << out.string() << "\n";
}

void cmd_train(const RunConfig& config, const fs::path& out, std::ostream& log) {
  const LoadedData data = load_data(config);
  const fs::path ckpt_dir = out / "checkpoints";
  make_dir(ckpt_dir);
  const TrainResult result =
      train(data.split.train, data.split.validation, config.train,
            checkpoint_writer(ckpt_dir, data.corpus.judge_roster, log));
  finish_run(out, result, data.corpus.judge_roster);
  log << "best epoch " << result.history.best_epoch << "\n";
}

void cmd_evaluate(const RunConfig& config, const fs::path& out, std::ostream& log) {
  const LoadedData data = load_data(config);
  const Corpus& corpus = chosen_split(data, config.eval.split);
  const auto ckpt = load_matching_checkpoint(config, data.corpus);
  std::vector<MetricsReport> reports;
  for (const auto& mode : eval_modes(config)) {
    reports.push_back(evaluate(ckpt.params, corpus, mode));
    const std::string text = report_text(reports.back());
    write_text_file(out / ("report_" + mode.name() + ".txt"), text);
    log << text;
  }
  write_text_file(out / "report.csv", report_csv(reports));
}

void cmd_predict(const RunConfig& config, const fs::path& out, std::ostream& log) {
  const LoadedData data = load_data(config);
  const Corpus& corpus = chosen_split(data, config.eval.split);
  const auto ckpt = load_matching_checkpoint(config, data.corpus);
  const auto mode = InferenceMode::parse(config.eval.predict_mode, config.eval.random_seed);
  const auto predictions = predict_corpus(ckpt.params, corpus, mode);
  std::string text = "audio_id,system_id,prediction\n";
  for (std::size_t i = 0; i < corpus.size(); ++i)
    text += csv_escape(corpus.entries[i].audio_id) + "," +
            csv_escape(corpus.entries[i].system_id) + "," + format_real(predictions[i]) + "\n";
  write_text_file(out / "predictions.csv", text);
  log << "wrote " << corpus.size() << " predictions (" << mode.name() << ")\n";
}

void cmd_ablate(const RunConfig& config, const fs::path& out, std::ostream& log) {
  const LoadedData data = load_data(config);
  const auto variants = standard_variants(config.eval.random_seed);
  const auto& roster = data.corpus.judge_roster;
  const VariantHookFactory hooks = [&](const Variant& v, std::uint64_t seed) {
    const fs::path dir = out / v.slug / ("seed_" + std::to_string(seed)) / "checkpoints";
    make_dir(dir);
    log << "[" << v.label << " seed " << seed << "]\n";
    return checkpoint_writer(dir, roster, log);
  };
  const AblationStudy study = run_ablation(data.split, config.train, config.seeds, variants,
                                           data.truth ? &*data.truth : nullptr, hooks);
  for (const auto& row : study.rows) {
    const fs::path dir = out / row.variant.slug;
    for (const auto& run : row.aggregate.runs)
      if (run.ok()) finish_run(dir / ("seed_" + std::to_string(run.seed)), run.result, roster);
    write_text_file(dir / "aggregate.csv", aggregate_csv(row.aggregate));
    write_text_file(dir / "seeds.csv", seed_runs_csv(row.aggregate));
    if (!row.bias_recovery.empty()) {
      std::string text = "seed,bias_recovery\n";
      for (std::size_t i = 0; i < row.bias_recovery.size(); ++i)
        text += std::to_string(row.aggregate.runs[i].seed) + "," +
                format_metric(row.bias_recovery[i]) + "\n";
      write_text_file(dir / "bias_recovery.csv", text);
    }
  }
  write_text_file(out / "ablation_table.csv", ablation_table_csv(study));
  write_text_file(out / "condition_table.csv", condition_table_csv(study));
  log << study_text(study);
  std::size_t failures = 0;
  for (const auto& row : study.rows) failures += row.aggregate.failures();
  if (failures) throw DivergenceError(std::to_string(failures) + " training run(s) failed");
}

}  // namespace

LoadedData load_data(const RunConfig& config) {
  LoadedData data;
  if (config.data.source == "synth") {
    SynthData synth = generate_synthetic(config.synth);
    data.corpus = std::move(synth.corpus);
    data.truth = std::move(synth.truth);
  } else {
    std::optional<SpectrogramCache> cache;
    if (!config.data.cache.empty() && fs::exists(config.data.cache))
      cache = SpectrogramCache::load(config.data.cache);
    data.corpus = load_corpus(config.data.manifest, config.data.audio_root, config.stft,
                              cache ? &*cache : nullptr);
  }
  data.split = split_corpus(data.corpus, config.data.split, config.data.split_seed);
  return data;
}

RunConfig resolve_config(const CommandRequest& request) {
  RunConfig config = request.config_path.empty() ? RunConfig{} : load_config(request.config_path);
  for (const auto& o : request.overrides) apply_override(config, o);
  config.validate();
  return config;
}

int run_command(const CommandRequest& request, std::ostream& log, std::ostream& err) {
  try {
    if (std::find(kCommands.begin(), kCommands.end(), request.command) == kCommands.end())
      throw ValidationError("unknown command '" + request.command + "'");
    const RunConfig config = resolve_config(request);
    if (request.out_dir.empty()) throw ValidationError("--out is required");
    make_dir(request.out_dir);
    write_text_file(request.out_dir / kResolvedConfig, format_config(config));
    if (request.command == "synth") cmd_synth(config, request.out_dir, log);
    if (request.command == "train") cmd_train(config, request.out_dir, log);
    if (request.command == "evaluate") cmd_evaluate(config, request.out_dir, log);
    if (request.command == "predict") cmd_predict(config, request.out_dir, log);
    if (request.command == "ablate") cmd_ablate(config, request.out_dir, log);
    return 0;
  } catch (const ConfigError& e) {
    err << "error: invalid config key '" << e.key() << "': " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace mosbench
