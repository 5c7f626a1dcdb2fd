#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mosbench/corpus.hpp"

namespace mosbench {

/// One (audio, judge) training example.
struct TrainingTuple {
  std::size_t entry = 0;  // index into Corpus::entries
  std::string audio_id;
  int judge_index = 0;    // index into Corpus::judge_roster
  double judge_score = 0.0;
  double mean_score = 0.0;
};

/// Items padded to a shared length. All spectrograms have frame_count() ==
/// frames().
struct TrainingBatch {
  std::vector<Spectrogram> spectrograms;
  std::vector<int> frame_counts;  // length before padding
  std::vector<int> judge_indices;
  std::vector<double> judge_scores;
  std::vector<double> mean_scores;

  std::size_t size() const { return spectrograms.size(); }
  int frames() const { return spectrograms.empty() ? 0 : spectrograms.front().frame_count(); }
};

enum class PaddingMode { kRepetitive, kZero };

/// One tuple per rating, in corpus order.
std::vector<TrainingTuple> expand_tuples(const Corpus& corpus);

/// Cyclic tiling: output frame t is input frame t mod T.
Spectrogram repetitive_pad(const Spectrogram& spec, int target_len);

/// Appends all-zero frames up to target_len.
Spectrogram zero_pad(const Spectrogram& spec, int target_len);

/// Deterministic shuffle of tuple indices followed by chunking; the last
/// chunk may be short.
std::vector<std::vector<std::size_t>> plan_batches(std::size_t tuple_count,
                                                   std::size_t batch_size, std::uint64_t seed);

/// Pads the selected tuples to their longest member.
TrainingBatch assemble_batch(std::span<const TrainingTuple> tuples,
                             std::span<const std::size_t> chosen, const Corpus& corpus,
                             PaddingMode padding = PaddingMode::kRepetitive);

std::vector<TrainingBatch> make_batches(std::span<const TrainingTuple> tuples,
                                        const Corpus& corpus, std::size_t batch_size,
                                        std::uint64_t seed,
                                        PaddingMode padding = PaddingMode::kRepetitive);

}  // namespace mosbench
