#pragma once

#include <filesystem>
#include <vector>

namespace mosbench {

/// Mono waveform in [-1, 1] with its declared sample rate.
struct Waveform {
  std::vector<float> samples;
  int sample_rate = 16000;
};

/// Reads a 16-bit PCM RIFF/WAVE file. Multi-channel input is downmixed by
/// averaging channels. Throws IoError if the file cannot be read or is not
/// 16-bit PCM.
Waveform read_wav(const std::filesystem::path& path);

/// Writes mono 16-bit PCM; samples are clamped to [-1, 1].
void write_wav(const std::filesystem::path& path, const Waveform& wave);

}  // namespace mosbench
