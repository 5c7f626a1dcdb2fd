#pragma once

// Reference implementations written independently of the library, plus
// shared fixtures for the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "mosbench/model.hpp"
#include "mosbench/objective.hpp"
#include "mosbench/synthbench.hpp"

namespace oracle {

/// Textbook Pearson correlation, two-pass, long double accumulation.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return double(sxy / std::sqrt(sxx * syy));
}

/// Average rank by counting: rank(v) = #(< v) + (#(== v) + 1) / 2.
inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double w : v) {
      if (w < v[i]) ++less;
      if (w == v[i]) ++equal;
    }
    out[i] = less + (equal + 1.0) / 2.0;
  }
  return out;
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(ranks(x), ranks(y));
}

/// |X[k]| of the windowed frame by the O(n^2) DFT sum.
inline std::vector<double> dft_magnitude(const std::vector<double>& frame) {
  const std::size_t n = frame.size();
  std::vector<double> out(n / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::complex<long double> acc = 0;
    for (std::size_t t = 0; t < n; ++t) {
      const long double angle = -2.0L * std::numbers::pi_v<long double> * k * t / n;
      acc += (long double)frame[t] * std::complex<long double>(std::cos(angle), std::sin(angle));
    }
    out[k] = double(std::abs(acc));
  }
  return out;
}

/// Periodic Hann, w[t] = 0.5 - 0.5 cos(2 pi t / n).
inline std::vector<double> hann(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t t = 0; t < n; ++t)
    w[t] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * double(t) / double(n));
  return w;
}

/// Iterated ceil(width / 3).
inline int reduce(int width, int times) {
  for (int i = 0; i < times; ++i) width = (width + 2) / 3;
  return width;
}

/// Two channels per block, hidden 4, embedding 2.
inline mosbench::ArchConfig tiny_arch(int num_judges) {
  mosbench::ArchConfig arch;
  arch.mean_channels = {2, 2, 2, 2};
  arch.bias_channels = {2, 2};
  arch.recurrent_hidden = 4;
  arch.dense_hidden = 4;
  arch.dropout_rate = 0.2;
  arch.judge_embedding_dim = 2;
  arch.num_judges = num_judges;
  return arch;
}

/// Small synthetic corpus that trains in well under a second per epoch.
inline mosbench::SynthSpec tiny_synth(std::uint64_t seed = 1) {
  mosbench::SynthSpec spec;
  spec.num_systems = 4;
  spec.utterances_per_system = 6;
  spec.total_judges = 6;
  spec.judges_per_utterance = 3;
  spec.min_frames = 8;
  spec.max_frames = 16;
  spec.seed = seed;
  return spec;
}

struct GradCheck {
  std::size_t checked = 0;
  std::size_t kink_crossings = 0;  // re-measured one-sided with the fine step
  std::size_t on_kink = 0;         // kink on both sides even at the fine step; excluded
  double worst = 0.0;              // max relative error over compared coordinates
  std::string worst_name;
};

/// Relative error with a floor so that two tiny numbers compare as equal.
inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(a) + std::abs(b), 1e-4);
}

/// Central differences of the training-mode joint loss against the analytic
/// gradient, for every parameter coordinate. A coordinate whose +-step
/// changes any ReLU decision straddles a kink, where the central difference
/// mixes two linear pieces; it is re-measured with a one-sided difference of
/// `fine_step` on a side that keeps every decision. If both sides change a
/// decision the point lies on the kink itself and is not differentiable.
inline GradCheck gradient_check(const mosbench::ModelParams<double>& params,
                                const mosbench::TrainingBatch& batch,
                                const mosbench::LossConfig& loss, double step,
                                double fine_step, std::uint64_t dropout_seed = 11) {
  using namespace mosbench;
  auto p = params;
  auto evaluate = [&](std::uint64_t* signature) {
    auto copy = p;
    MbNetTape<double> tape;
    const auto out = tape.forward(copy, batch, dropout_seed);
    if (signature) *signature = tape.activation_signature();
    return mbnet_loss(out.mean, out.judge, batch, loss);
  };
  auto copy = p;
  MbNetTape<double> tape;
  const auto out = tape.forward(copy, batch, dropout_seed);
  const std::uint64_t base = tape.activation_signature();
  const double f0 = mbnet_loss(out.mean, out.judge, batch, loss);
  const auto lg = mbnet_loss_gradient(out.mean, out.judge, batch, loss);
  auto grads = zeros_like(p);
  tape.backward(p, lg.d_mean_frames, lg.d_judge_frames, grads);

  std::vector<double*> values, analytic;
  std::vector<long> sizes;
  std::vector<std::string> names;
  for_each_parameter(p, [&](const std::string& n, auto& t) {
    values.push_back(t.data());
    sizes.push_back(long(t.size()));
    names.push_back(n);
  });
  for_each_parameter(grads, [&](const std::string&, auto& t) { analytic.push_back(t.data()); });

  GradCheck result;
  for (std::size_t i = 0; i < values.size(); ++i)
    for (long k = 0; k < sizes[i]; ++k) {
      const double old = values[i][k];
      auto probe = [&](double h, std::uint64_t* signature) {
        values[i][k] = old + h;
        const double f = evaluate(signature);
        values[i][k] = old;
        return f;
      };
      std::uint64_t s_plus = 0, s_minus = 0;
      const double up = probe(step, &s_plus), down = probe(-step, &s_minus);
      double numeric = (up - down) / (2.0 * step);
      if (s_plus != base || s_minus != base) {
        ++result.kink_crossings;
        const double fine_up = probe(fine_step, &s_plus);
        const double fine_down = probe(-fine_step, &s_minus);
        if (s_plus == base && s_minus == base)
          numeric = (fine_up - fine_down) / (2.0 * fine_step);
        else if (s_plus == base)
          numeric = (fine_up - f0) / fine_step;
        else if (s_minus == base)
          numeric = (f0 - fine_down) / fine_step;
        else {
          ++result.on_kink;
          continue;
        }
      }
      const double err = relative_error(analytic[i][k], numeric);
      ++result.checked;
      if (err > result.worst) {
        result.worst = err;
        result.worst_name = names[i] + "[" + std::to_string(k) + "]";
      }
    }
  return result;
}

/// Fixed evaluation point for the gradient check. Points where some
/// normalization site is nearly degenerate have large third derivatives and
/// need a smaller step than 1e-3; this point does not.
inline constexpr std::uint64_t kGradcheckSeed = 4;

/// Batch for the gradient check: labels 1 and 5 keep every residual far
/// outside the clip band, and bias offsets move pre-activations off zero.
inline mosbench::ModelParams<double> gradcheck_params(int num_judges, std::uint64_t seed) {
  using namespace mosbench;
  auto p = init_params<double>(tiny_arch(num_judges), seed);
  std::mt19937_64 rng(seed + 1);
  for_each_parameter(p, [&](const std::string& n, auto& t) {
    if (n.find(".bias") == std::string::npos && n.find("beta") == std::string::npos) return;
    for (long k = 0; k < long(t.size()); ++k)
      t.data()[k] += 0.4 * mosbench::nn::unit_uniform(rng) - 0.2;
  });
  return p;
}

inline mosbench::TrainingBatch gradcheck_batch(int items, int frames, int num_judges,
                                               std::uint64_t seed) {
  using namespace mosbench;
  TrainingBatch batch;
  std::mt19937_64 rng(seed);
  for (int b = 0; b < items; ++b) {
    Spectrogram s;
    s.frames.resize(frames, kFrequencyBins);
    for (int t = 0; t < frames; ++t)
      for (int f = 0; f < kFrequencyBins; ++f) s.frames(t, f) = float(nn::unit_uniform(rng));
    batch.spectrograms.push_back(std::move(s));
    batch.frame_counts.push_back(frames);
    batch.judge_indices.push_back(b % num_judges);
    batch.judge_scores.push_back(b % 2 == 0 ? 1.0 : 5.0);
    batch.mean_scores.push_back(b % 2 == 0 ? 5.0 : 1.0);
  }
  return batch;
}

}  // namespace oracle
