#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mosbench/model.hpp"

namespace mosbench {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias-corrected moments. Tensors whose name starts with a frozen
/// prefix are never touched.
template <typename Scalar>
class Adam {
 public:
  Adam(const ModelParams<Scalar>& params, AdamConfig cfg)
      : cfg_(cfg), m_(zeros_like(params)), v_(zeros_like(params)) {}

  void freeze(std::string prefix) { frozen_.push_back(std::move(prefix)); }

  void step(ModelParams<Scalar>& params, const ModelParams<Scalar>& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, double(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, double(t_));
    const double lr = cfg_.learning_rate * std::sqrt(c2) / c1;
    const Scalar b1 = Scalar(cfg_.beta1), b2 = Scalar(cfg_.beta2);
    const Scalar eps = Scalar(cfg_.epsilon * std::sqrt(c2));

    std::vector<Scalar*> p, g, m, v;
    std::vector<Eigen::Index> sizes;
    std::vector<bool> skip;
    for_each_parameter(params, [&](const std::string& name, auto& t) {
      p.push_back(t.data());
      sizes.push_back(t.size());
      skip.push_back(is_frozen(name));
    });
    for_each_parameter(grads, [&](const std::string&, const auto& t) {
      g.push_back(const_cast<Scalar*>(t.data()));
    });
    for_each_parameter(m_, [&](const std::string&, auto& t) { m.push_back(t.data()); });
    for_each_parameter(v_, [&](const std::string&, auto& t) { v.push_back(t.data()); });

    for (std::size_t i = 0; i < p.size(); ++i) {
      if (skip[i]) continue;
      for (Eigen::Index k = 0; k < sizes[i]; ++k) {
        const Scalar gk = g[i][k];
        m[i][k] = b1 * m[i][k] + (Scalar(1) - b1) * gk;
        v[i][k] = b2 * v[i][k] + (Scalar(1) - b2) * gk * gk;
        p[i][k] -= Scalar(lr) * m[i][k] / (std::sqrt(v[i][k]) + eps);
      }
    }
  }

  long steps() const { return t_; }

 private:
  bool is_frozen(const std::string& name) const {
    for (const auto& f : frozen_)
      if (name.compare(0, f.size(), f) == 0) return true;
    return false;
  }

  AdamConfig cfg_;
  ModelParams<Scalar> m_, v_;
  std::vector<std::string> frozen_;
  long t_ = 0;
};

}  // namespace mosbench
