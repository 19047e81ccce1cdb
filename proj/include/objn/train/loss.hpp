#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "objn/core/error.hpp"
#include "objn/core/raster.hpp"
#include "objn/net/tensor.hpp"

namespace objn {

inline const std::vector<double> kMbsClassWeights = {1.0, 1.0, 1.0, 3.0};
inline const std::vector<double> kAspClassWeights = {1.0, 4.0, 4.0};

namespace detail {

template <class S>
void check_loss_inputs(const Tensor<S>& pred, const Mask& gt, std::size_t n_classes,
                       const char* where) {
  if (pred.t != 1 || pred.c != static_cast<int>(n_classes) || pred.h != gt.h || pred.w != gt.w)
    throw RuntimeError(std::string(where) + ": prediction " + pred.shape_str() + " vs " +
                       std::to_string(n_classes) + "-class ground truth " + std::to_string(gt.h) +
                       "x" + std::to_string(gt.w));
  for (const S v : pred.v)
    if (!std::isfinite(static_cast<double>(v)))
      throw NumericError(std::string(where) + ": prediction contains NaN or inf");
  for (const std::uint8_t g : gt.v)
    if (g >= n_classes)
      throw DataError(std::string(where) + ": ground-truth class " + std::to_string(int(g)) +
                      " out of range");
}

// log of a softmax probability; the softmax itself is computed with
// max-subtraction so values are sane, this only guards exact underflow to 0.
inline double safe_log(double p) {
  return std::log(std::max(p, std::numeric_limits<double>::min()));
}

}  // namespace detail

// Mean over pixels of w_gt * (-log p_gt), p being softmax probabilities.
template <class S>
double weighted_ce(const Tensor<S>& pred, const Mask& gt, const std::vector<double>& weights) {
  detail::check_loss_inputs(pred, gt, weights.size(), "weighted_ce");
  const std::size_t plane = pred.plane();
  double sum = 0.0;
  for (std::size_t i = 0; i < plane; ++i) {
    const int g = gt.v[i];
    sum -= weights[static_cast<std::size_t>(g)] *
           detail::safe_log(static_cast<double>(pred.v[static_cast<std::size_t>(g) * plane + i]));
  }
  return sum / static_cast<double>(plane);
}

// Loss plus gradient w.r.t. the logits that produced `pred`, scaled by
// `scale` and accumulated into `dlogits` (sized and zeroed by the caller or
// default-constructed). d/dlogit_c = scale * w_gt/N * (p_c - [c == gt]).
template <class S>
double weighted_ce_grad(const Tensor<S>& pred, const Mask& gt, const std::vector<double>& weights,
                        double scale, Tensor<S>& dlogits) {
  detail::check_loss_inputs(pred, gt, weights.size(), "weighted_ce_grad");
  if (dlogits.v.empty()) dlogits = Tensor<S>(1, pred.c, pred.h, pred.w);
  if (!dlogits.same_shape(pred))
    throw RuntimeError("weighted_ce_grad: gradient buffer " + dlogits.shape_str() +
                       " does not match prediction " + pred.shape_str());
  const std::size_t plane = pred.plane();
  const double inv_n = 1.0 / static_cast<double>(plane);
  double sum = 0.0;
  for (std::size_t i = 0; i < plane; ++i) {
    const int g = gt.v[i];
    const double w = weights[static_cast<std::size_t>(g)];
    sum -= w * detail::safe_log(
                   static_cast<double>(pred.v[static_cast<std::size_t>(g) * plane + i]));
    const double f = scale * w * inv_n;
    for (int c = 0; c < pred.c; ++c) {
      const std::size_t at = static_cast<std::size_t>(c) * plane + i;
      dlogits.v[at] +=
          static_cast<S>(f * (static_cast<double>(pred.v[at]) - (c == g ? 1.0 : 0.0)));
    }
  }
  return sum * inv_n;
}

// Boundary-sense loss; mixed-sense pixels carry triple weight.
template <class S>
double mbs_loss(const Tensor<S>& pred, const Mask& gt) {
  return weighted_ce(pred, gt, kMbsClassWeights);
}

// Attended-surface loss; object pixels (visible or obscured) carry quadruple
// weight against the background class.
template <class S>
double asp_loss(const Tensor<S>& pred, const Mask& gt) {
  return weighted_ce(pred, gt, kAspClassWeights);
}

}  // namespace objn
