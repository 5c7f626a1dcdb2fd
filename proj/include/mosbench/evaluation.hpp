#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mosbench/corpus.hpp"
#include "mosbench/model.hpp"

namespace mosbench {

/// Pearson correlation. Throws UndefinedCorrelation if either input is
/// constant, ValidationError on length mismatch or fewer than 2 points.
double pearson_lcc(std::span<const double> x, std::span<const double> y);

/// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of average ranks.
double spearman_srcc(std::span<const double> x, std::span<const double> y);

double mse(std::span<const double> x, std::span<const double> y);

/// Arithmetic mean per system id.
std::map<std::string, double> system_aggregate(
    std::span<const std::pair<std::string, double>> values);

enum class InferenceKind { kMeanOnly, kCorrectJudges, kRandomJudges };

struct InferenceMode {
  InferenceKind kind = InferenceKind::kMeanOnly;
  std::uint64_t seed = 0;  // random-judge sampling only

  static InferenceMode mean_only() { return {InferenceKind::kMeanOnly, 0}; }
  static InferenceMode correct_judges() { return {InferenceKind::kCorrectJudges, 0}; }
  static InferenceMode random_judges(std::uint64_t seed) {
    return {InferenceKind::kRandomJudges, seed};
  }

  /// mean_only, correct_judges or random_judges.
  std::string name() const;
  /// Inverse of name(); throws ValidationError.
  static InferenceMode parse(const std::string& name, std::uint64_t seed = 0);

  bool operator==(const InferenceMode&) const = default;
};

/// The judges an entry is scored with under `mode`, as roster indices.
/// Random-judge mode samples without replacement, seeded by (seed, audio_id).
std::vector<int> judges_for(const CorpusEntry& entry, const std::vector<std::string>& roster,
                            const InferenceMode& mode);

template <typename Scalar>
double predict_utterance(const ModelParams<Scalar>& params, const CorpusEntry& entry,
                         const InferenceMode& mode, const std::vector<std::string>& roster);

template <typename Scalar>
std::vector<double> predict_corpus(const ModelParams<Scalar>& params, const Corpus& corpus,
                                   const InferenceMode& mode);

/// A metric value; nullopt marks an undefined correlation.
using Metric = std::optional<double>;

struct LevelMetrics {
  Metric lcc, srcc, mse;
};

struct MetricsReport {
  InferenceMode mode;
  std::optional<LevelMetrics> utterance;
  LevelMetrics system;
  std::size_t utterance_count = 0;
  std::size_t system_count = 0;
};

/// Metrics for precomputed per-entry predictions (aligned with corpus order).
MetricsReport score_predictions(const Corpus& corpus, std::span<const double> predictions,
                                const InferenceMode& mode);

template <typename Scalar>
MetricsReport evaluate(const ModelParams<Scalar>& params, const Corpus& corpus,
                       const InferenceMode& mode);

/// One flattened metric: (mode, level, metric, value).
struct MetricRow {
  std::string mode, level, metric;
  Metric value;
};

std::vector<MetricRow> metric_rows(const MetricsReport& report);

/// "level.metric=value" lines headed by "mode=...".
std::string report_text(const MetricsReport& report);

/// Header mode,level,metric,value then one row per metric.
std::string report_csv(std::span<const MetricsReport> reports);

/// Metric value as text: shortest round-trip decimal or "undefined".
std::string format_metric(const Metric& value);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace mosbench
