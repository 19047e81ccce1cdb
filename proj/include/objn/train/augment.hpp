#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "objn/core/rng.hpp"
#include "objn/net/tensor.hpp"

namespace objn {

struct MbsDropoutConfig {
  bool enabled = true;
  int max_frames = 6;
  double frame_prob = 0.583;  // binomial(6, p) puts the mean at ~3.5
};

struct AttDropoutConfig {
  bool enabled = false;
  double frame_prob = 0.15;  // each frame independently zeroed
};

// Zeroes k whole frames of the MBS prediction stack, k drawn from
// binomial(max_frames, frame_prob), the zeroed frames uniform without
// replacement. Forces the downstream net to integrate across time.
template <class S>
std::vector<int> temporal_mbs_dropout(Tensor<S>& mbs_pred, Rng& rng,
                                      const MbsDropoutConfig& cfg = {}) {
  if (!cfg.enabled || mbs_pred.t == 0) return {};
  int k = rng.binomial(cfg.max_frames, cfg.frame_prob);
  k = std::min(k, mbs_pred.t);
  std::vector<int> frames(static_cast<std::size_t>(mbs_pred.t));
  std::iota(frames.begin(), frames.end(), 0);
  rng.shuffle(frames.begin(), frames.end());
  frames.resize(static_cast<std::size_t>(k));
  std::sort(frames.begin(), frames.end());
  const std::size_t fsz = static_cast<std::size_t>(mbs_pred.c) * mbs_pred.plane();
  for (const int t : frames) std::fill(mbs_pred.frame(t), mbs_pred.frame(t) + fsz, S(0));
  return frames;
}

// Independent per-frame attention dropout; returns the zeroed frame indices.
template <class S>
std::vector<int> temporal_attention_dropout(Tensor<S>& att, Rng& rng,
                                            const AttDropoutConfig& cfg = {}) {
  std::vector<int> dropped;
  if (!cfg.enabled) return dropped;
  const std::size_t fsz = static_cast<std::size_t>(att.c) * att.plane();
  for (int t = 0; t < att.t; ++t)
    if (rng.bernoulli(cfg.frame_prob)) {
      std::fill(att.frame(t), att.frame(t) + fsz, S(0));
      dropped.push_back(t);
    }
  return dropped;
}

}  // namespace objn
