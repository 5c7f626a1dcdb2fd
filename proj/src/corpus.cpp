#include "mosbench/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>

#include "mosbench/csv.hpp"
#include "mosbench/error.hpp"
#include "mosbench/hashing.hpp"

namespace mosbench {

std::optional<int> Corpus::judge_index(const std::string& judge_id) const {
  auto it = std::lower_bound(judge_roster.begin(), judge_roster.end(), judge_id);
  if (it == judge_roster.end() || *it != judge_id) return std::nullopt;
  return int(it - judge_roster.begin());
}

std::uint64_t Corpus::roster_hash() const {
  Fnv1a h;
  h.add_int(std::int64_t(judge_roster.size()));
  for (const auto& id : judge_roster) {
    h.add(id);
    h.add(std::string_view("\0", 1));
  }
  return h.value();
}

double mean_of_ratings(const std::vector<RatingRecord>& ratings) {
  double sum = 0.0;
  for (const auto& r : ratings) sum += r.score;
  return sum / double(ratings.size());
}

std::vector<std::pair<std::string, double>> bias_scores(const CorpusEntry& entry) {
  std::vector<std::pair<std::string, double>> out;
  out.reserve(entry.ratings.size());
  for (const auto& r : entry.ratings) out.emplace_back(r.judge_id, r.score - entry.mean_score);
  return out;
}

CorpusEntry make_entry(std::string audio_id, std::string system_id,
                       std::shared_ptr<const Spectrogram> spectrogram,
                       std::vector<RatingRecord> ratings) {
  if (ratings.empty()) throw ValidationError("audio " + audio_id + " has no ratings");
  std::set<std::string> seen;
  for (const auto& r : ratings) {
    if (r.score < 1 || r.score > 5)
      throw ValidationError("score " + std::to_string(r.score) + " for audio " + audio_id +
                            " is outside 1..5");
    if (!seen.insert(r.judge_id).second)
      throw ValidationError("judge " + r.judge_id + " rated audio " + audio_id + " twice");
  }
  CorpusEntry entry;
  entry.audio_id = std::move(audio_id);
  entry.system_id = std::move(system_id);
  entry.spectrogram = std::move(spectrogram);
  entry.ratings = std::move(ratings);
  entry.mean_score = mean_of_ratings(entry.ratings);
  return entry;
}

void validate_corpus(const Corpus& corpus) {
  if (!std::is_sorted(corpus.judge_roster.begin(), corpus.judge_roster.end()) ||
      std::adjacent_find(corpus.judge_roster.begin(), corpus.judge_roster.end()) !=
          corpus.judge_roster.end())
    throw ValidationError("judge roster must be sorted and unique");
  std::set<std::string> audio_ids;
  for (const auto& e : corpus.entries) {
    if (!audio_ids.insert(e.audio_id).second)
      throw ValidationError("duplicate audio id " + e.audio_id);
    if (e.ratings.empty()) throw ValidationError("audio " + e.audio_id + " has no ratings");
    if (!e.spectrogram) throw ValidationError("audio " + e.audio_id + " has no spectrogram");
    validate_spectrogram(*e.spectrogram);
    std::set<std::string> judges;
    for (const auto& r : e.ratings) {
      if (r.score < 1 || r.score > 5)
        throw ValidationError("score outside 1..5 for audio " + e.audio_id);
      if (!judges.insert(r.judge_id).second)
        throw ValidationError("judge " + r.judge_id + " rated audio " + e.audio_id + " twice");
      if (!corpus.judge_index(r.judge_id))
        throw ValidationError("judge " + r.judge_id + " missing from roster");
    }
    if (e.mean_score != mean_of_ratings(e.ratings))
      throw ValidationError("mean score of " + e.audio_id + " does not match its ratings");
  }
}

// --- cache -----------------------------------------------------------------

namespace {

constexpr char kCacheMagic[8] = {'M', 'O', 'S', 'B', 'S', 'P', 'E', 'C'};
constexpr std::uint32_t kCacheVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::istream& in, const std::filesystem::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
    throw IoError("truncated spectrogram cache " + path.string());
  return v;
}

}  // namespace

void SpectrogramCache::put(const std::string& audio_id, std::uint64_t stft_hash,
                           std::shared_ptr<const Spectrogram> spec) {
  items_[{audio_id, stft_hash}] = std::move(spec);
}

std::shared_ptr<const Spectrogram> SpectrogramCache::find(const std::string& audio_id,
                                                          std::uint64_t stft_hash) const {
  auto it = items_.find({audio_id, stft_hash});
  return it == items_.end() ? nullptr : it->second;
}

void SpectrogramCache::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write spectrogram cache " + path.string());
  out.write(kCacheMagic, sizeof kCacheMagic);
  write_pod(out, kCacheVersion);
  write_pod(out, std::uint64_t(items_.size()));
  for (const auto& [key, spec] : items_) {
    write_pod(out, std::uint32_t(key.first.size()));
    out.write(key.first.data(), std::streamsize(key.first.size()));
    write_pod(out, key.second);
    write_pod(out, std::uint32_t(spec->frames.rows()));
    write_pod(out, std::uint32_t(spec->frames.cols()));
    out.write(reinterpret_cast<const char*>(spec->frames.data()),
              std::streamsize(spec->frames.size() * sizeof(float)));
  }
  if (!out) throw IoError("failed writing spectrogram cache " + path.string());
}

SpectrogramCache SpectrogramCache::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open spectrogram cache " + path.string());
  char magic[sizeof kCacheMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kCacheMagic, sizeof magic) != 0)
    throw IoError("not a spectrogram cache: " + path.string());
  if (read_pod<std::uint32_t>(in, path) != kCacheVersion)
    throw IoError("unsupported spectrogram cache version in " + path.string());
  const auto count = read_pod<std::uint64_t>(in, path);
  SpectrogramCache cache;
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string id(read_pod<std::uint32_t>(in, path), '\0');
    if (!in.read(id.data(), std::streamsize(id.size())))
      throw IoError("truncated spectrogram cache " + path.string());
    const auto hash = read_pod<std::uint64_t>(in, path);
    const auto rows = read_pod<std::uint32_t>(in, path);
    const auto cols = read_pod<std::uint32_t>(in, path);
    auto spec = std::make_shared<Spectrogram>();
    spec->frames.resize(rows, cols);
    if (!in.read(reinterpret_cast<char*>(spec->frames.data()),
                 std::streamsize(spec->frames.size() * sizeof(float))))
      throw IoError("truncated spectrogram cache " + path.string());
    cache.put(id, hash, std::move(spec));
  }
  return cache;
}

// --- manifest ----------------------------------------------------------------

Corpus load_corpus(const std::filesystem::path& manifest_path,
                   const std::filesystem::path& audio_root, const StftConfig& stft,
                   const SpectrogramCache* cache) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest " + manifest_path.string());

  struct Pending {
    std::string system_id;
    std::string audio_path;
    std::vector<RatingRecord> ratings;
  };
  std::vector<std::string> order;
  std::unordered_map<std::string, Pending> pending;
  std::set<std::string> roster;

  std::string line;
  std::vector<std::string> fields;
  const std::string where = manifest_path.string();
  if (!std::getline(in, line)) throw ParseError(where + ":1: missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (line != kManifestHeader)
    throw ParseError(where + ":1: expected header '" + std::string(kManifestHeader) + "'");

  for (int lineno = 2; std::getline(in, line); ++lineno) {
    if (line.empty() || line == "\r") continue;
    const std::string loc = where + ":" + std::to_string(lineno) + ": ";
    if (!split_csv_line(line, fields)) throw ParseError(loc + "unterminated quote");
    if (fields.size() != 5)
      throw ParseError(loc + "expected 5 fields, got " + std::to_string(fields.size()));
    for (int c : {0, 1, 3})
      if (fields[c].empty()) throw ParseError(loc + "empty id field");
    int score = 0;
    const auto& s = fields[4];
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), score);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw ParseError(loc + "score '" + s + "' is not an integer");
    if (score < 1 || score > 5)
      throw ValidationError(loc + "score " + s + " is outside 1..5");

    auto [it, inserted] = pending.try_emplace(fields[0]);
    Pending& p = it->second;
    if (inserted) {
      order.push_back(fields[0]);
      p.system_id = fields[1];
      p.audio_path = fields[2];
    } else if (p.system_id != fields[1] || p.audio_path != fields[2]) {
      throw ValidationError(loc + "audio " + fields[0] +
                            " listed with conflicting system_id or audio_path");
    }
    for (const auto& r : p.ratings)
      if (r.judge_id == fields[3])
        throw ValidationError(loc + "duplicate rating of audio " + fields[0] + " by judge " +
                              fields[3]);
    p.ratings.push_back({fields[0], fields[1], fields[3], score});
    roster.insert(fields[3]);
  }

  Corpus corpus;
  corpus.judge_roster.assign(roster.begin(), roster.end());
  const std::uint64_t stft_hash = stft.hash();
  corpus.entries.reserve(order.size());
  for (const auto& id : order) {
    Pending& p = pending.at(id);
    std::shared_ptr<const Spectrogram> spec = cache ? cache->find(id, stft_hash) : nullptr;
    if (!spec) {
      std::filesystem::path audio = p.audio_path;
      if (audio.is_relative()) audio = audio_root / audio;
      spec = std::make_shared<Spectrogram>(compute_spectrogram(read_wav(audio), stft));
    }
    validate_spectrogram(*spec);
    corpus.entries.push_back(make_entry(id, p.system_id, std::move(spec), std::move(p.ratings)));
  }
  return corpus;
}

void write_manifest(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << kManifestHeader << '\n';
  for (const auto& e : corpus.entries)
    for (const auto& r : e.ratings)
      out << csv_escape(e.audio_id) << ',' << csv_escape(e.system_id) << ','
          << csv_escape(e.audio_id + ".wav") << ',' << csv_escape(r.judge_id) << ','
          << r.score << '\n';
  if (!out) throw IoError("failed writing manifest " + path.string());
}

// --- splitting ---------------------------------------------------------------

CorpusSplit split_corpus(const Corpus& corpus, const SplitSizes& sizes, std::uint64_t seed) {
  const std::size_t n = corpus.size();
  if (sizes.train > n || sizes.validation > n - sizes.train ||
      sizes.test > n - sizes.train - sizes.validation)
    throw ValidationError("split sizes " + std::to_string(sizes.train) + "+" +
                          std::to_string(sizes.validation) + "+" + std::to_string(sizes.test) +
                          " exceed corpus size " + std::to_string(n));
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  auto take = [&](std::size_t begin, std::size_t count) {
    std::vector<std::size_t> idx(perm.begin() + begin, perm.begin() + begin + count);
    std::sort(idx.begin(), idx.end());
    Corpus part;
    part.judge_roster = corpus.judge_roster;
    part.entries.reserve(count);
    for (auto i : idx) part.entries.push_back(corpus.entries[i]);
    return part;
  };
  CorpusSplit split;
  split.train = take(0, sizes.train);
  split.validation = take(sizes.train, sizes.validation);
  split.test = take(sizes.train + sizes.validation, sizes.test);
  return split;
}

}  // namespace mosbench
