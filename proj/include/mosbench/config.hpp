#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mosbench/corpus.hpp"
#include "mosbench/stft.hpp"
#include "mosbench/synthbench.hpp"
#include "mosbench/training.hpp"

namespace mosbench {

/// Where the corpus comes from: generated in memory from the synth section,
/// or loaded from a rating manifest.
struct DataConfig {
  std::string source = "synth";  // synth | manifest
  std::string manifest;
  std::string audio_root;
  std::string cache;  // optional spectrogram cache file
  SplitSizes split{240, 40, 80};
  std::uint64_t split_seed = 0;
};

struct EvalConfig {
  std::vector<std::string> modes{"mean_only", "correct_judges", "random_judges"};
  std::uint64_t random_seed = 0;
  std::string checkpoint;  // evaluate / predict input
  std::string split = "test";  // train | validation | test | all
  std::string predict_mode = "mean_only";
};

/// Everything one command needs. Every field has a dotted key; see
/// config_keys().
struct RunConfig {
  StftConfig stft;
  TrainConfig train;
  SynthSpec synth;
  DataConfig data;
  EvalConfig eval;
  std::vector<std::uint64_t> seeds{0};

  /// Cross-field checks on top of the per-section validators.
  void validate() const;
};

/// Every accepted key in canonical order.
std::vector<std::string> config_keys();

/// Applies one "key = value" assignment. Throws ConfigError naming the key
/// if it is unknown or the value does not parse.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

/// Parses "key=value" (spaces around '=' allowed).
void apply_override(RunConfig& config, const std::string& assignment);

/// Lines of "key = value"; '#' starts a comment; blank lines ignored.
/// Repeated keys are an error.
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Canonical, fully resolved text: every key, in config_keys() order.
/// parse_config(format_config(c)) reproduces c exactly.
std::string format_config(const RunConfig& config);

/// The modes listed in eval.modes.
std::vector<InferenceMode> eval_modes(const RunConfig& config);

}  // namespace mosbench
