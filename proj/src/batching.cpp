#include "mosbench/batching.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "mosbench/error.hpp"

namespace mosbench {

std::vector<TrainingTuple> expand_tuples(const Corpus& corpus) {
  std::vector<TrainingTuple> tuples;
  for (std::size_t i = 0; i < corpus.entries.size(); ++i) {
    const auto& e = corpus.entries[i];
    for (const auto& r : e.ratings) {
      auto judge = corpus.judge_index(r.judge_id);
      if (!judge) throw ValidationError("judge " + r.judge_id + " missing from roster");
      tuples.push_back({i, e.audio_id, *judge, double(r.score), e.mean_score});
    }
  }
  return tuples;
}

Spectrogram repetitive_pad(const Spectrogram& spec, int target_len) {
  const int frames = spec.frame_count();
  if (target_len < frames)
    throw ValidationError("padding target " + std::to_string(target_len) +
                          " is shorter than the input (" + std::to_string(frames) + " frames)");
  if (frames < 1) throw ValidationError("cannot pad an empty spectrogram");
  Spectrogram out;
  out.frames.resize(target_len, spec.bins());
  for (int t = 0; t < target_len; t += frames) {
    const int n = std::min(frames, target_len - t);
    out.frames.middleRows(t, n) = spec.frames.topRows(n);
  }
  return out;
}

Spectrogram zero_pad(const Spectrogram& spec, int target_len) {
  const int frames = spec.frame_count();
  if (target_len < frames)
    throw ValidationError("padding target " + std::to_string(target_len) +
                          " is shorter than the input (" + std::to_string(frames) + " frames)");
  Spectrogram out;
  out.frames = SpectrogramMatrix::Zero(target_len, spec.bins());
  out.frames.topRows(frames) = spec.frames;
  return out;
}

std::vector<std::vector<std::size_t>> plan_batches(std::size_t tuple_count,
                                                   std::size_t batch_size, std::uint64_t seed) {
  if (batch_size < 1) throw ValidationError("batch size must be at least 1");
  std::vector<std::size_t> order(tuple_count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> plan;
  for (std::size_t begin = 0; begin < tuple_count; begin += batch_size) {
    const std::size_t end = std::min(tuple_count, begin + batch_size);
    plan.emplace_back(order.begin() + begin, order.begin() + end);
  }
  return plan;
}

TrainingBatch assemble_batch(std::span<const TrainingTuple> tuples,
                             std::span<const std::size_t> chosen, const Corpus& corpus,
                             PaddingMode padding) {
  TrainingBatch batch;
  int longest = 0;
  for (auto i : chosen)
    longest = std::max(longest, corpus.entries.at(tuples[i].entry).spectrogram->frame_count());
  for (auto i : chosen) {
    const auto& tuple = tuples[i];
    const Spectrogram& spec = *corpus.entries.at(tuple.entry).spectrogram;
    batch.spectrograms.push_back(padding == PaddingMode::kRepetitive
                                     ? repetitive_pad(spec, longest)
                                     : zero_pad(spec, longest));
    batch.frame_counts.push_back(spec.frame_count());
    batch.judge_indices.push_back(tuple.judge_index);
    batch.judge_scores.push_back(tuple.judge_score);
    batch.mean_scores.push_back(tuple.mean_score);
  }
  return batch;
}

std::vector<TrainingBatch> make_batches(std::span<const TrainingTuple> tuples,
                                        const Corpus& corpus, std::size_t batch_size,
                                        std::uint64_t seed, PaddingMode padding) {
  std::vector<TrainingBatch> batches;
  for (const auto& chunk : plan_batches(tuples.size(), batch_size, seed))
    batches.push_back(assemble_batch(tuples, chunk, corpus, padding));
  return batches;
}

}  // namespace mosbench
