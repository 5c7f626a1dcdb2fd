#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mosbench/config.hpp"
#include "mosbench/corpus.hpp"
#include "mosbench/synthbench.hpp"

namespace mosbench {

inline const std::vector<std::string> kCommands{"synth", "train", "evaluate", "predict",
                                                "ablate"};

struct CommandRequest {
  std::string command;
  std::filesystem::path config_path;  // empty: built-in defaults
  std::vector<std::string> overrides;  // key=value, applied in order
  std::filesystem::path out_dir;
};

/// The configured corpus and its split; synthetic sources also carry truth.
struct LoadedData {
  Corpus corpus;
  CorpusSplit split;
  std::optional<SynthTruth> truth;
};

LoadedData load_data(const RunConfig& config);

/// Config file plus overrides, validated.
RunConfig resolve_config(const CommandRequest& request);

/// Runs one command. Progress goes to `log`, diagnostics to `err`. Returns
/// 0 iff every artifact was written; nonzero on any error.
int run_command(const CommandRequest& request, std::ostream& log, std::ostream& err);

}  // namespace mosbench
