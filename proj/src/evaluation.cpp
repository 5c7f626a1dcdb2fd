#include "mosbench/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "mosbench/csv.hpp"
#include "mosbench/error.hpp"
#include "mosbench/hashing.hpp"

namespace mosbench {

namespace {

void check_pair(std::span<const double> x, std::span<const double> y, std::size_t min_len) {
  if (x.size() != y.size()) throw ValidationError("metric inputs differ in length");
  if (x.size() < min_len)
    throw ValidationError("metric needs at least " + std::to_string(min_len) + " points");
}

bool is_constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
}

Metric guarded(double (*f)(std::span<const double>, std::span<const double>),
               std::span<const double> x, std::span<const double> y) {
  try {
    return f(x, y);
  } catch (const UndefinedCorrelation&) {
    return std::nullopt;
  }
}

LevelMetrics level_metrics(std::span<const double> pred, std::span<const double> truth) {
  LevelMetrics m;
  if (pred.size() >= 2) {
    m.lcc = guarded(pearson_lcc, pred, truth);
    m.srcc = guarded(spearman_srcc, pred, truth);
  }
  if (!pred.empty()) m.mse = mse(pred, truth);
  return m;
}

}  // namespace

double pearson_lcc(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, 2);
  if (is_constant(x) || is_constant(y))
    throw UndefinedCorrelation("correlation of a constant vector is undefined");
  const double n = double(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t(0));
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double rank = 0.5 * double(i + 1 + j);  // mean of ranks i+1 .. j
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double spearman_srcc(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, 2);
  if (is_constant(x) || is_constant(y))
    throw UndefinedCorrelation("rank correlation of a constant vector is undefined");
  const auto rx = average_ranks(x), ry = average_ranks(y);
  return pearson_lcc(rx, ry);
}

double mse(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y, 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sum += (x[i] - y[i]) * (x[i] - y[i]);
  return sum / double(x.size());
}

std::map<std::string, double> system_aggregate(
    std::span<const std::pair<std::string, double>> values) {
  if (values.empty()) throw ValidationError("system aggregate of no values");
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (const auto& [system, v] : values) {
    auto& slot = acc[system];
    slot.first += v;
    ++slot.second;
  }
  std::map<std::string, double> out;
  for (const auto& [system, s] : acc) out[system] = s.first / double(s.second);
  return out;
}

std::string InferenceMode::name() const {
  switch (kind) {
    case InferenceKind::kMeanOnly: return "mean_only";
    case InferenceKind::kCorrectJudges: return "correct_judges";
    case InferenceKind::kRandomJudges: return "random_judges";
  }
  return "unknown";
}

InferenceMode InferenceMode::parse(const std::string& name, std::uint64_t seed) {
  if (name == "mean_only") return mean_only();
  if (name == "correct_judges") return correct_judges();
  if (name == "random_judges") return random_judges(seed);
  throw ValidationError("unknown inference mode '" + name +
                        "' (expected mean_only, correct_judges or random_judges)");
}

std::vector<int> judges_for(const CorpusEntry& entry, const std::vector<std::string>& roster,
                            const InferenceMode& mode) {
  std::vector<int> judges;
  if (mode.kind == InferenceKind::kMeanOnly) return judges;
  if (entry.ratings.empty()) throw ValidationError(entry.audio_id + " has no ratings");
  if (mode.kind == InferenceKind::kCorrectJudges) {
    for (const auto& r : entry.ratings) {
      const auto it = std::lower_bound(roster.begin(), roster.end(), r.judge_id);
      if (it == roster.end() || *it != r.judge_id)
        throw ValidationError("judge '" + r.judge_id + "' is not in the roster");
      judges.push_back(int(it - roster.begin()));
    }
    return judges;
  }
  const std::size_t m = entry.ratings.size();
  if (m > roster.size()) throw ValidationError("roster smaller than the entry's judge count");
  std::vector<int> pool(roster.size());
  std::iota(pool.begin(), pool.end(), 0);
  Fnv1a h;
  h.add(entry.audio_id);
  std::mt19937_64 rng(derive_seed(mode.seed, "random_judges", std::int64_t(h.value())));
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t remaining = pool.size() - i;
    const std::size_t j = i + std::min(remaining - 1, std::size_t(nn::unit_uniform(rng) * double(remaining)));
    std::swap(pool[i], pool[j]);
    judges.push_back(pool[i]);
  }
  return judges;
}

template <typename Scalar>
double predict_utterance(const ModelParams<Scalar>& params, const CorpusEntry& entry,
                         const InferenceMode& mode, const std::vector<std::string>& roster) {
  if (!entry.spectrogram) throw ValidationError(entry.audio_id + " has no spectrogram");
  const Spectrogram& spec = *entry.spectrogram;
  if (mode.kind == InferenceKind::kMeanOnly && !params.mean_net_active)
    throw ValidationError("mean_only inference needs an active MeanNet");

  const auto judges = judges_for(entry, roster, mode);
  double mean = 0.0;
  if (params.mean_net_active)
    mean = double(meannet_forward(params, std::span<const Spectrogram>(&spec, 1))
                      .utterance_scores(0));
  if (mode.kind == InferenceKind::kMeanOnly || !params.bias_net_active) return mean;

  const std::vector<Spectrogram> copies(judges.size(), spec);
  const auto bias = biasnet_forward(params, std::span<const Spectrogram>(copies),
                                    std::span<const int>(judges));
  double sum = 0.0;
  for (Eigen::Index b = 0; b < bias.utterance_scores.size(); ++b)
    sum += mean + double(bias.utterance_scores(b));
  return sum / double(judges.size());
}

template <typename Scalar>
std::vector<double> predict_corpus(const ModelParams<Scalar>& params, const Corpus& corpus,
                                   const InferenceMode& mode) {
  std::vector<double> out;
  out.reserve(corpus.size());
  for (const auto& e : corpus.entries)
    out.push_back(predict_utterance(params, e, mode, corpus.judge_roster));
  return out;
}

MetricsReport score_predictions(const Corpus& corpus, std::span<const double> predictions,
                                const InferenceMode& mode) {
  if (predictions.size() != corpus.size())
    throw ValidationError("prediction count differs from corpus size");
  if (corpus.empty()) throw ValidationError("cannot evaluate an empty corpus");
  MetricsReport report;
  report.mode = mode;
  report.utterance_count = corpus.size();

  std::vector<double> truth;
  std::vector<std::pair<std::string, double>> sys_pred, sys_truth;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& e = corpus.entries[i];
    truth.push_back(e.mean_score);
    sys_pred.emplace_back(e.system_id, predictions[i]);
    sys_truth.emplace_back(e.system_id, e.mean_score);
  }
  report.utterance = level_metrics(predictions, truth);

  const auto agg_pred = system_aggregate(sys_pred);
  const auto agg_truth = system_aggregate(sys_truth);
  std::vector<double> sp, st;
  for (const auto& [system, v] : agg_pred) {
    sp.push_back(v);
    st.push_back(agg_truth.at(system));
  }
  report.system = level_metrics(sp, st);
  report.system_count = sp.size();
  return report;
}

template <typename Scalar>
MetricsReport evaluate(const ModelParams<Scalar>& params, const Corpus& corpus,
                       const InferenceMode& mode) {
  const auto predictions = predict_corpus(params, corpus, mode);
  return score_predictions(corpus, predictions, mode);
}

std::vector<MetricRow> metric_rows(const MetricsReport& report) {
  std::vector<MetricRow> rows;
  const std::string mode = report.mode.name();
  auto add = [&](const std::string& level, const LevelMetrics& m) {
    rows.push_back({mode, level, "lcc", m.lcc});
    rows.push_back({mode, level, "srcc", m.srcc});
    rows.push_back({mode, level, "mse", m.mse});
  };
  if (report.utterance) add("utterance", *report.utterance);
  add("system", report.system);
  return rows;
}

std::string format_metric(const Metric& value) {
  return value ? format_real(*value) : std::string("undefined");
}

std::string report_text(const MetricsReport& report) {
  std::string out = "mode=" + report.mode.name() + "\n";
  if (report.mode.kind == InferenceKind::kRandomJudges)
    out += "seed=" + std::to_string(report.mode.seed) + "\n";
  out += "utterances=" + std::to_string(report.utterance_count) + "\n";
  out += "systems=" + std::to_string(report.system_count) + "\n";
  for (const auto& row : metric_rows(report))
    out += row.level + "." + row.metric + "=" + format_metric(row.value) + "\n";
  return out;
}

std::string report_csv(std::span<const MetricsReport> reports) {
  std::string out = "mode,level,metric,value\n";
  for (const auto& r : reports)
    for (const auto& row : metric_rows(r))
      out += row.mode + "," + row.level + "," + row.metric + "," + format_metric(row.value) + "\n";
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

#define MOSBENCH_INSTANTIATE(S)                                                              \
  template double predict_utterance<S>(const ModelParams<S>&, const CorpusEntry&,             \
                                       const InferenceMode&, const std::vector<std::string>&); \
  template std::vector<double> predict_corpus<S>(const ModelParams<S>&, const Corpus&,        \
                                                 const InferenceMode&);                      \
  template MetricsReport evaluate<S>(const ModelParams<S>&, const Corpus&, const InferenceMode&);

MOSBENCH_INSTANTIATE(float)
MOSBENCH_INSTANTIATE(double)

#undef MOSBENCH_INSTANTIATE

}  // namespace mosbench
