#include "mosbench/experiments.hpp"

#include <cstdio>

#include "mosbench/error.hpp"

namespace mosbench {

namespace {

std::string cell(const AggregateRow* row, bool stddev) {
  if (!row) return "undefined";
  return format_metric(stddev ? row->stddev : row->mean);
}

std::string fixed(const AggregateRow* row) {
  if (!row || !row->mean) return "undefined";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f +- %.3f", *row->mean, row->stddev.value_or(0.0));
  return buf;
}

}  // namespace

std::vector<Variant> standard_variants(std::uint64_t random_seed) {
  const auto mean_only = InferenceMode::mean_only();
  const auto correct = InferenceMode::correct_judges();
  const auto random = InferenceMode::random_judges(random_seed);
  std::vector<Variant> out;
  out.push_back({"full", "full", {}, {mean_only, correct, random}, mean_only});
  AblationFlags f;
  f.disable_biasnet = true;
  out.push_back({"-BiasNet", "no_biasnet", f, {mean_only}, mean_only});
  f = {};
  f.disable_meannet = true;
  out.push_back({"-MeanNet", "no_meannet", f, {correct, random}, random});
  f = {};
  f.disable_clipping = true;
  out.push_back({"-CMSE", "no_clipping", f, {mean_only}, mean_only});
  f = {};
  f.zero_padding = true;
  out.push_back({"-Reppad", "zero_padding", f, {mean_only}, mean_only});
  return out;
}

std::vector<Variant> select_variants(std::span<const std::string> slugs,
                                     std::uint64_t random_seed) {
  const auto all = standard_variants(random_seed);
  std::vector<Variant> out;
  for (const auto& slug : slugs) {
    const auto it = std::find_if(all.begin(), all.end(),
                                 [&](const Variant& v) { return v.slug == slug; });
    if (it == all.end()) throw ValidationError("unknown ablation variant '" + slug + "'");
    out.push_back(*it);
  }
  return out;
}

const VariantResult* AblationStudy::find(const std::string& slug) const {
  for (const auto& r : rows)
    if (r.variant.slug == slug) return &r;
  return nullptr;
}

AblationStudy run_ablation(const CorpusSplit& split, const TrainConfig& base,
                           std::span<const std::uint64_t> seeds,
                           std::span<const Variant> variants, const SynthTruth* truth,
                           const VariantHookFactory& hooks) {
  AblationStudy study;
  for (const auto& variant : variants) {
    TrainConfig cfg = base;
    cfg.ablation = variant.flags;
    const EvalSpec eval{&split.test, variant.modes};
    SeedHookFactory seed_hooks;
    if (hooks) seed_hooks = [&](std::uint64_t seed) { return hooks(variant, seed); };
    VariantResult result{variant, run_seeds(split.train, split.validation, cfg, seeds, eval,
                                            seed_hooks), {}};
    if (truth && !variant.flags.disable_biasnet)
      for (const auto& run : result.aggregate.runs) {
        std::optional<double> r;
        if (run.ok()) {
          try {
            r = bias_recovery(run.result.params, split.test, *truth);
          } catch (const UndefinedCorrelation&) {
          }
        }
        result.bias_recovery.push_back(r);
      }
    study.rows.push_back(std::move(result));
  }
  return study;
}

std::string ablation_table_csv(const AblationStudy& study) {
  std::string out =
      "variant,mode,utterance_srcc,utterance_srcc_std,system_srcc,system_srcc_std,failed_seeds\n";
  for (const auto& r : study.rows) {
    const std::string mode = r.variant.table_mode.name();
    const auto* utt = r.aggregate.find(mode, "utterance", "srcc");
    const auto* sys = r.aggregate.find(mode, "system", "srcc");
    out += r.variant.label + "," + mode + "," + cell(utt, false) + "," + cell(utt, true) + "," +
           cell(sys, false) + "," + cell(sys, true) + "," +
           std::to_string(r.aggregate.failures()) + "\n";
  }
  return out;
}

std::string condition_table_csv(const AblationStudy& study) {
  std::string out = "condition,utterance_srcc,utterance_srcc_std,system_srcc,system_srcc_std\n";
  const auto* full = study.find("full");
  if (!full) return out;
  for (const auto& mode : full->variant.modes) {
    const auto* utt = full->aggregate.find(mode.name(), "utterance", "srcc");
    const auto* sys = full->aggregate.find(mode.name(), "system", "srcc");
    out += mode.name() + "," + cell(utt, false) + "," + cell(utt, true) + "," +
           cell(sys, false) + "," + cell(sys, true) + "\n";
  }
  return out;
}

std::string study_text(const AblationStudy& study) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-10s %-15s %-18s %-18s\n", "variant", "mode",
                "utterance SRCC", "system SRCC");
  out += line;
  for (const auto& r : study.rows) {
    const std::string mode = r.variant.table_mode.name();
    std::snprintf(line, sizeof line, "%-10s %-15s %-18s %-18s\n", r.variant.label.c_str(),
                  mode.c_str(), fixed(r.aggregate.find(mode, "utterance", "srcc")).c_str(),
                  fixed(r.aggregate.find(mode, "system", "srcc")).c_str());
    out += line;
  }
  if (const auto* full = study.find("full")) {
    out += "\n";
    std::snprintf(line, sizeof line, "%-16s %-18s %-18s\n", "condition", "utterance SRCC",
                  "system SRCC");
    out += line;
    for (const auto& mode : full->variant.modes) {
      std::snprintf(line, sizeof line, "%-16s %-18s %-18s\n", mode.name().c_str(),
                    fixed(full->aggregate.find(mode.name(), "utterance", "srcc")).c_str(),
                    fixed(full->aggregate.find(mode.name(), "system", "srcc")).c_str());
      out += line;
    }
  }
  return out;
}

}  // namespace mosbench
