#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mosbench/stft.hpp"

namespace mosbench {

/// One judge's score for one audio.
struct RatingRecord {
  std::string audio_id;
  std::string system_id;
  std::string judge_id;
  int score = 0;  // 1..5
};

/// One audio with its spectrogram and every rating it received.
struct CorpusEntry {
  std::string audio_id;
  std::string system_id;
  std::shared_ptr<const Spectrogram> spectrogram;
  std::vector<RatingRecord> ratings;
  double mean_score = 0.0;
};

struct Corpus {
  std::vector<CorpusEntry> entries;
  /// Every judge id, sorted lexicographically; indexes the embedding table.
  std::vector<std::string> judge_roster;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  std::optional<int> judge_index(const std::string& judge_id) const;
  /// Stable fingerprint of the roster, stored in checkpoints.
  std::uint64_t roster_hash() const;
};

/// Arithmetic mean of the entry's scores.
double mean_of_ratings(const std::vector<RatingRecord>& ratings);

/// s_k - mean for every rating, in rating order.
std::vector<std::pair<std::string, double>> bias_scores(const CorpusEntry& entry);

/// Builds an entry from its ratings; validates scores and uniqueness.
CorpusEntry make_entry(std::string audio_id, std::string system_id,
                       std::shared_ptr<const Spectrogram> spectrogram,
                       std::vector<RatingRecord> ratings);

/// Checks every corpus invariant; throws ValidationError on the first
/// violation.
void validate_corpus(const Corpus& corpus);

/// Spectrograms keyed by (audio_id, StftConfig hash). The binary file format
/// stores raw float32 data so a save/load cycle is bit-exact.
class SpectrogramCache {
 public:
  void put(const std::string& audio_id, std::uint64_t stft_hash,
           std::shared_ptr<const Spectrogram> spec);
  std::shared_ptr<const Spectrogram> find(const std::string& audio_id,
                                          std::uint64_t stft_hash) const;
  std::size_t size() const { return items_.size(); }

  void save(const std::filesystem::path& path) const;
  static SpectrogramCache load(const std::filesystem::path& path);

 private:
  std::map<std::pair<std::string, std::uint64_t>, std::shared_ptr<const Spectrogram>> items_;
};

inline constexpr const char* kManifestHeader = "audio_id,system_id,audio_path,judge_id,score";

/// Reads a rating manifest (one row per audio/judge pair). Spectrograms come
/// from `cache` when present there, otherwise from decoding
/// audio_root/audio_path. Entries keep first-appearance order.
Corpus load_corpus(const std::filesystem::path& manifest_path,
                   const std::filesystem::path& audio_root, const StftConfig& stft,
                   const SpectrogramCache* cache = nullptr);

/// Writes the manifest for `corpus`; audio paths are audio_id + ".wav".
void write_manifest(const std::filesystem::path& path, const Corpus& corpus);

struct SplitSizes {
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
};

struct CorpusSplit {
  Corpus train;
  Corpus validation;
  Corpus test;
};

/// Seeded random partition into disjoint subsets of exactly the requested
/// sizes. Each subset keeps the full judge roster and manifest order.
CorpusSplit split_corpus(const Corpus& corpus, const SplitSizes& sizes, std::uint64_t seed);

}  // namespace mosbench
