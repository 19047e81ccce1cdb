#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "objn/net/layers.hpp"

namespace objn {

// Adam with the usual bias correction. Moment accumulators are kept in
// double regardless of the parameter scalar so float training stays stable.
template <class S>
class Adam {
 public:
  explicit Adam(std::vector<Param<S>*> params, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : params_(std::move(params)), b1_(beta1), b2_(beta2), eps_(eps) {
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
      m_[i].assign(params_[i]->w.size(), 0.0);
      v_[i].assign(params_[i]->w.size(), 0.0);
    }
  }

  void step(double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, t_);
    const double c2 = 1.0 - std::pow(b2_, t_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Param<S>& p = *params_[i];
      for (std::size_t j = 0; j < p.w.size(); ++j) {
        const double g = static_cast<double>(p.g[j]);
        m_[i][j] = b1_ * m_[i][j] + (1.0 - b1_) * g;
        v_[i][j] = b2_ * v_[i][j] + (1.0 - b2_) * g * g;
        const double mhat = m_[i][j] / c1;
        const double vhat = v_[i][j] / c2;
        p.w[j] -= static_cast<S>(lr * mhat / (std::sqrt(vhat) + eps_));
      }
    }
  }

  long long steps() const { return t_; }

 private:
  std::vector<Param<S>*> params_;
  double b1_, b2_, eps_;
  long long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace objn
