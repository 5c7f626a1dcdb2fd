#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "mosbench/wav.hpp"

namespace mosbench {

/// Frequency bins of every spectrogram: one-sided 512-point FFT.
inline constexpr int kFrequencyBins = 257;

using SpectrogramMatrix =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Linear magnitude spectrogram, one row per frame, kFrequencyBins columns.
struct Spectrogram {
  SpectrogramMatrix frames;

  int frame_count() const { return int(frames.rows()); }
  int bins() const { return int(frames.cols()); }
  bool operator==(const Spectrogram& other) const {
    return frames.rows() == other.frames.rows() &&
           frames.cols() == other.frames.cols() && frames == other.frames;
  }
};

/// Throws ValidationError unless the width is kFrequencyBins, there is at
/// least one frame and all entries are finite and non-negative.
void validate_spectrogram(const Spectrogram& spec);

struct StftConfig {
  int sample_rate = 16000;
  int fft_size = 512;
  int window_length = 512;
  int hop_length = 256;

  /// Stable identifier used to key cached spectrograms.
  std::uint64_t hash() const;
};

/// Number of frames produced for `samples` input samples: windows are placed
/// at multiples of the hop and must lie entirely inside the signal.
int stft_frame_count(int samples, const StftConfig& stft);

/// Periodic Hann window of the configured length.
Eigen::VectorXf hann_window(int length);

/// Magnitude of the windowed short-time Fourier transform (no log, no
/// centering). Throws ValidationError on an empty or too-short waveform, on
/// a sample-rate mismatch, or if fft_size does not yield kFrequencyBins.
Spectrogram compute_spectrogram(const Waveform& wave, const StftConfig& stft);

}  // namespace mosbench
