#include "mosbench/stft.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "mosbench/error.hpp"
#include "mosbench/hashing.hpp"

namespace mosbench {

void validate_spectrogram(const Spectrogram& spec) {
  if (spec.bins() != kFrequencyBins)
    throw ValidationError("spectrogram must have " + std::to_string(kFrequencyBins) +
                          " bins, got " + std::to_string(spec.bins()));
  if (spec.frame_count() < 1) throw ValidationError("spectrogram has no frames");
  if (!spec.frames.allFinite() || (spec.frames.array() < 0.0f).any())
    throw ValidationError("spectrogram entries must be finite and non-negative");
}

std::uint64_t StftConfig::hash() const {
  Fnv1a h;
  h.add(std::string_view("stft/hann/magnitude"));
  h.add_int(sample_rate);
  h.add_int(fft_size);
  h.add_int(window_length);
  h.add_int(hop_length);
  return h.value();
}

int stft_frame_count(int samples, const StftConfig& stft) {
  if (samples < stft.window_length) return 0;
  return 1 + (samples - stft.window_length) / stft.hop_length;
}

Eigen::VectorXf hann_window(int length) {
  Eigen::VectorXf w(length);
  for (int n = 0; n < length; ++n)
    w[n] = float(0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / length));
  return w;
}

Spectrogram compute_spectrogram(const Waveform& wave, const StftConfig& stft) {
  if (stft.fft_size / 2 + 1 != kFrequencyBins)
    throw ValidationError("fft_size must be " + std::to_string(2 * (kFrequencyBins - 1)));
  if (stft.window_length < 1 || stft.window_length > stft.fft_size || stft.hop_length < 1)
    throw ValidationError("invalid STFT window/hop");
  if (wave.sample_rate != stft.sample_rate)
    throw ValidationError("waveform sample rate " + std::to_string(wave.sample_rate) +
                          " does not match expected " + std::to_string(stft.sample_rate));
  if (wave.samples.empty()) throw ValidationError("empty waveform");
  const int frames = stft_frame_count(int(wave.samples.size()), stft);
  if (frames < 1) throw ValidationError("waveform shorter than one analysis window");

  const Eigen::VectorXf window = hann_window(stft.window_length);
  Eigen::FFT<float> fft;
  std::vector<float> buffer(std::size_t(stft.fft_size), 0.0f);
  std::vector<std::complex<float>> spectrum;

  Spectrogram out;
  out.frames.resize(frames, kFrequencyBins);
  for (int t = 0; t < frames; ++t) {
    const float* src = wave.samples.data() + std::size_t(t) * stft.hop_length;
    for (int n = 0; n < stft.window_length; ++n) buffer[n] = src[n] * window[n];
    fft.fwd(spectrum, buffer);
    for (int k = 0; k < kFrequencyBins; ++k) out.frames(t, k) = std::abs(spectrum[k]);
  }
  return out;
}

}  // namespace mosbench
