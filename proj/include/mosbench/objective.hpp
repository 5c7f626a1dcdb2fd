#pragma once

#include <cmath>

#include "mosbench/batching.hpp"
#include "mosbench/error.hpp"
#include "mosbench/model.hpp"

namespace mosbench {

struct LossConfig {
  double tau = 0.5;          // residuals with |r| <= tau cost nothing
  double lambda_bias = 4.0;  // weight of the judge-score term
  double frame_weight = 1.0;
  bool clipping_enabled = true;

  void validate() const {
    if (!(tau >= 0.0)) throw ValidationError("loss.tau must be >= 0");
    if (!(lambda_bias >= 0.0)) throw ValidationError("loss.lambda_bias must be >= 0");
    if (!(frame_weight >= 0.0)) throw ValidationError("loss.frame_weight must be >= 0");
  }
  bool operator==(const LossConfig&) const = default;
};

/// Squared error that is zero while |y - y_hat| <= tau. The comparison is
/// strict, so a residual of exactly tau costs nothing. NaN residuals
/// propagate.
inline double clipped_mse(double y, double y_hat, double tau, bool clipping_enabled = true) {
  const double r = y - y_hat;
  if (clipping_enabled && std::abs(r) <= tau) return 0.0;
  return r * r;
}

/// Derivative of clipped_mse with respect to the prediction y; zero at the
/// clip boundary.
inline double clipped_mse_grad(double y, double y_hat, double tau, bool clipping_enabled = true) {
  const double r = y - y_hat;
  if (clipping_enabled && std::abs(r) <= tau) return 0.0;
  return 2.0 * r;
}

/// Mean over frames of clipped_mse(frame, label).
template <typename Derived>
double frame_loss(const Eigen::DenseBase<Derived>& frame_scores, double label, double tau,
                  bool clipping_enabled = true) {
  double sum = 0.0;
  for (Eigen::Index t = 0; t < frame_scores.size(); ++t)
    sum += clipped_mse(double(frame_scores(t)), label, tau, clipping_enabled);
  return sum / double(frame_scores.size());
}

/// Which halves of the joint objective are active. Dropping the judge term
/// gives the MeanNet-only objective; dropping the mean term trains the
/// judge-conditioned path alone.
struct LossTerms {
  bool mean = true;
  bool judge = true;
};

template <typename Scalar>
struct LossGradient {
  double loss = 0.0;
  Matrix<Scalar> d_mean_frames;   // B x T
  Matrix<Scalar> d_judge_frames;  // B x T
};

/// Batch mean of
///   C(mean_utt, s_mean) + lambda * C(judge_utt, s_judge)
///   + frame_weight * (F(mean_frames, s_mean) + lambda * F(judge_frames, s_judge))
/// together with its gradient with respect to both frame-score matrices
/// (utterance scores are frame means, so their gradient is spread evenly).
template <typename Scalar>
LossGradient<Scalar> mbnet_loss_gradient(const ForwardOutput<Scalar>& mean_out,
                                         const ForwardOutput<Scalar>& judge_out,
                                         const TrainingBatch& batch, const LossConfig& cfg,
                                         LossTerms terms = {}) {
  const Eigen::Index b_count = mean_out.frame_scores.rows();
  const Eigen::Index frames = mean_out.frame_scores.cols();
  if (Eigen::Index(batch.size()) != b_count || judge_out.frame_scores.rows() != b_count ||
      judge_out.frame_scores.cols() != frames)
    throw ValidationError("loss inputs have inconsistent shapes");
  const double tau = cfg.tau;
  const bool clip = cfg.clipping_enabled;
  const double lambda = cfg.lambda_bias;
  const double inv_b = 1.0 / double(b_count), inv_t = 1.0 / double(frames);

  LossGradient<Scalar> out;
  out.d_mean_frames = Matrix<Scalar>::Zero(b_count, frames);
  out.d_judge_frames = Matrix<Scalar>::Zero(b_count, frames);
  double total = 0.0;
  for (Eigen::Index b = 0; b < b_count; ++b) {
    const double mean_label = batch.mean_scores[b];
    const double judge_label = batch.judge_scores[b];
    if (terms.mean) {
      const double utt = mean_out.utterance_scores(b);
      total += clipped_mse(utt, mean_label, tau, clip);
      const double d_utt = clipped_mse_grad(utt, mean_label, tau, clip) * inv_t;
      for (Eigen::Index t = 0; t < frames; ++t) {
        const double y = mean_out.frame_scores(b, t);
        total += cfg.frame_weight * clipped_mse(y, mean_label, tau, clip) * inv_t;
        out.d_mean_frames(b, t) = Scalar(
            (d_utt + cfg.frame_weight * clipped_mse_grad(y, mean_label, tau, clip) * inv_t) *
            inv_b);
      }
    }
    if (terms.judge) {
      const double utt = judge_out.utterance_scores(b);
      total += lambda * clipped_mse(utt, judge_label, tau, clip);
      const double d_utt = clipped_mse_grad(utt, judge_label, tau, clip) * inv_t;
      for (Eigen::Index t = 0; t < frames; ++t) {
        const double y = judge_out.frame_scores(b, t);
        total += lambda * cfg.frame_weight * clipped_mse(y, judge_label, tau, clip) * inv_t;
        out.d_judge_frames(b, t) = Scalar(
            lambda *
            (d_utt + cfg.frame_weight * clipped_mse_grad(y, judge_label, tau, clip) * inv_t) *
            inv_b);
      }
    }
  }
  out.loss = total * inv_b;
  return out;
}

template <typename Scalar>
double mbnet_loss(const ForwardOutput<Scalar>& mean_out, const ForwardOutput<Scalar>& judge_out,
                  const TrainingBatch& batch, const LossConfig& cfg, LossTerms terms = {}) {
  return mbnet_loss_gradient(mean_out, judge_out, batch, cfg, terms).loss;
}

}  // namespace mosbench
