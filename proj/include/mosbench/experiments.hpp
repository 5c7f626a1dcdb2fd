#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mosbench/corpus.hpp"
#include "mosbench/synthbench.hpp"
#include "mosbench/training.hpp"

namespace mosbench {

/// One row of the ablation grid.
struct Variant {
  std::string label;  // full, -BiasNet, -MeanNet, -CMSE, -Reppad
  std::string slug;   // directory-safe name
  AblationFlags flags;
  std::vector<InferenceMode> modes;  // modes scored for this row
  InferenceMode table_mode;          // judge-free protocol used in the ablation table
};

/// The five standard rows. The full model is scored in all three modes and
/// the other rows in mean-only mode, except the row without a MeanNet: it
/// has no judge-free path, so it is scored with correct and random judges
/// and tabulated with random judges.
std::vector<Variant> standard_variants(std::uint64_t random_seed);

/// Subset of standard_variants() by slug, in the given order. Throws
/// ValidationError for an unknown slug.
std::vector<Variant> select_variants(std::span<const std::string> slugs,
                                     std::uint64_t random_seed);

struct VariantResult {
  Variant variant;
  SeedAggregate aggregate;
  /// Per-seed judge-bias recovery, when ground truth is known and the run
  /// has an active BiasNet; nullopt entries mark undefined or failed runs.
  std::vector<std::optional<double>> bias_recovery;
};

struct AblationStudy {
  std::vector<VariantResult> rows;

  const VariantResult* find(const std::string& slug) const;
};

using VariantHookFactory =
    std::function<EpochHook(const Variant& variant, std::uint64_t seed)>;

/// Trains every variant with the same seeds and split.
AblationStudy run_ablation(const CorpusSplit& split, const TrainConfig& base,
                           std::span<const std::uint64_t> seeds,
                           std::span<const Variant> variants, const SynthTruth* truth = nullptr,
                           const VariantHookFactory& hooks = {});

/// Header variant,mode,utterance_srcc,utterance_srcc_std,system_srcc,
/// system_srcc_std,failed_seeds; one row per variant in its table mode.
std::string ablation_table_csv(const AblationStudy& study);

/// Header condition,utterance_srcc,utterance_srcc_std,system_srcc,
/// system_srcc_std; one row per mode scored for the full model.
std::string condition_table_csv(const AblationStudy& study);

/// Fixed-width rendering of both tables for terminals.
std::string study_text(const AblationStudy& study);

}  // namespace mosbench
