#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "objn/core/hash.hpp"
#include "objn/core/rng.hpp"
#include "objn/net/config.hpp"
#include "objn/net/layers.hpp"
#include "objn/net/tensor.hpp"

namespace objn {

namespace detail {

template <class S>
struct ResBlock {
  ResBlock(const std::string& name, int in_c, int out_c, const NetConfig& cfg, Rng& rng)
      : conv1(name + ".conv1", in_c, out_c, 3, cfg.padding, rng),
        n1(name + ".norm1", out_c, cfg.norm),
        conv2(name + ".conv2", out_c, out_c, 3, cfg.padding, rng),
        n2(name + ".norm2", out_c, cfg.norm) {
    if (in_c != out_c)
      proj = std::make_unique<Conv2d<S>>(name + ".proj", in_c, out_c, 1, cfg.padding, rng);
  }

  Tensor<S> forward(const Tensor<S>& x, bool train) {
    Tensor<S> main = n2.forward(
        conv2.forward(relu_mid.forward(n1.forward(conv1.forward(x, train), train), train), train),
        train);
    const Tensor<S> skip = proj ? proj->forward(x, train) : x;
    for (std::size_t i = 0; i < main.v.size(); ++i) main.v[i] += skip.v[i];
    return relu_out.forward(main, train);
  }

  Tensor<S> backward(const Tensor<S>& dy) {
    const Tensor<S> d = relu_out.backward(dy);
    Tensor<S> dmain =
        conv1.backward(n1.backward(relu_mid.backward(conv2.backward(n2.backward(d)))));
    const Tensor<S> dskip = proj ? proj->backward(d) : d;
    for (std::size_t i = 0; i < dmain.v.size(); ++i) dmain.v[i] += dskip.v[i];
    return dmain;
  }

  void collect(std::vector<Param<S>*>& out) {
    conv1.collect(out);
    n1.collect(out);
    conv2.collect(out);
    n2.collect(out);
    if (proj) proj->collect(out);
  }

  Conv2d<S> conv1;
  Norm<S> n1;
  Conv2d<S> conv2;
  Norm<S> n2;
  std::unique_ptr<Conv2d<S>> proj;
  ReLU<S> relu_mid, relu_out;
};

template <class S>
struct DecBlock {
  DecBlock(const std::string& name, int c_below, int c_skip, int out_c, const NetConfig& cfg,
           Rng& rng)
      : up(cfg.padding),
        conv1(name + ".conv1", c_below + c_skip, out_c, 3, cfg.padding, rng),
        n1(name + ".norm1", out_c, cfg.norm),
        conv2(name + ".conv2", out_c, out_c, 3, cfg.padding, rng),
        n2(name + ".norm2", out_c, cfg.norm),
        c_below_(c_below),
        c_skip_(c_skip) {}

  Tensor<S> forward(const Tensor<S>& below, const Tensor<S>& skip, bool train) {
    const Tensor<S> u = up.forward(below, train);
    const Tensor<S> cat = concat_channels(u, skip);
    Tensor<S> y = r1.forward(n1.forward(conv1.forward(cat, train), train), train);
    return r2.forward(n2.forward(conv2.forward(y, train), train), train);
  }

  // Returns gradient for `below`; writes the skip gradient to dskip.
  Tensor<S> backward(const Tensor<S>& dy, Tensor<S>& dskip) {
    const Tensor<S> dcat =
        conv1.backward(n1.backward(r1.backward(conv2.backward(n2.backward(r2.backward(dy))))));
    Tensor<S> dup;
    split_channels(dcat, dup, dskip, c_below_, c_skip_);
    return up.backward(dup);
  }

  void collect(std::vector<Param<S>*>& out) {
    conv1.collect(out);
    n1.collect(out);
    conv2.collect(out);
    n2.collect(out);
  }

  Upsample2<S> up;
  Conv2d<S> conv1;
  Norm<S> n1;
  Conv2d<S> conv2;
  Norm<S> n2;
  ReLU<S> r1, r2;
  int c_below_, c_skip_;
};

}  // namespace detail

// R(2+1)U-Net: per-frame 2-D residual conv blocks arranged as a U-Net, with
// kernel-3 valid temporal convolutions interleaved in the encoder until the
// window collapses to one frame. forward() returns per-pixel softmax
// probabilities for the temporally centered frame; backward() takes the
// gradient at the logits.
template <class S>
class R21UNet {
 public:
  R21UNet(const NetConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(derive_seed(seed, {0x4E7ull}));
    int tconv_index = 0;
    for (int i = 0; i < cfg_.levels; ++i) {
      const int in_c = i == 0 ? cfg_.in_channels : cfg_.channels_at(i - 1);
      enc_.push_back(std::make_unique<detail::ResBlock<S>>("enc" + std::to_string(i), in_c,
                                                           cfg_.channels_at(i), cfg_, rng));
      auto& convs = tconvs_.emplace_back();
      for (int k = 0; k < cfg_.temporal_convs_at(i); ++k)
        convs.push_back(std::make_unique<TemporalConv<S>>("temp" + std::to_string(tconv_index++),
                                                          cfg_.channels_at(i), rng));
      trelu_.emplace_back(static_cast<std::size_t>(cfg_.temporal_convs_at(i)));
      if (i + 1 < cfg_.levels) pools_.push_back(std::make_unique<MaxPool2<S>>());
    }
    for (int j = cfg_.levels - 2; j >= 0; --j)
      dec_.push_back(std::make_unique<detail::DecBlock<S>>(
          "up" + std::to_string(j), cfg_.channels_at(j + 1), cfg_.channels_at(j),
          cfg_.channels_at(j), cfg_, rng));
    head_ = std::make_unique<Conv2d<S>>("head", cfg_.channels_at(0), cfg_.out_classes, 1,
                                        cfg_.padding, rng);
  }

  const NetConfig& config() const { return cfg_; }

  // Softmax probabilities [1, K, H, W] for the center frame of the window.
  Tensor<S> forward(const Tensor<S>& x, bool train = false) {
    if (x.t != cfg_.temporal_window())
      throw RuntimeError("forward: axis T is " + std::to_string(x.t) + ", expected window " +
                         std::to_string(cfg_.temporal_window()));
    require_shape(x, -1, cfg_.in_channels, -1, -1, "forward input");
    const int div = cfg_.spatial_divisor();
    if (x.h % div || x.w % div)
      throw RuntimeError("forward: axis H/W is " + std::to_string(x.h) + "x" +
                         std::to_string(x.w) + ", expected multiple of " + std::to_string(div));

    train_pass_ = train;
    Tensor<S> cur = x;
    skips_.assign(static_cast<std::size_t>(cfg_.levels), Tensor<S>{});
    skip_t_.assign(static_cast<std::size_t>(cfg_.levels), 0);
    int temp_index = 0;
    for (int i = 0; i < cfg_.levels; ++i) {
      cur = enc_[static_cast<std::size_t>(i)]->forward(cur, train);
      hook("space" + std::to_string(i), cur);
      auto& convs = tconvs_[static_cast<std::size_t>(i)];
      for (std::size_t k = 0; k < convs.size(); ++k) {
        cur = trelu_[static_cast<std::size_t>(i)][k].forward(convs[k]->forward(cur, train), train);
        hook("temp" + std::to_string(temp_index++), cur);
      }
      if (i + 1 < cfg_.levels) {
        skips_[static_cast<std::size_t>(i)] = center_frame(cur);
        skip_t_[static_cast<std::size_t>(i)] = cur.t;
        cur = pools_[static_cast<std::size_t>(i)]->forward(cur, train);
      }
    }
    if (cur.t != 1)
      throw RuntimeError("forward: temporal extent " + std::to_string(cur.t) +
                         " after encoder, expected 1 (window/conv mismatch)");
    for (std::size_t j = 0; j < dec_.size(); ++j) {
      const int level = cfg_.levels - 2 - static_cast<int>(j);
      cur = dec_[j]->forward(cur, skips_[static_cast<std::size_t>(level)], train);
      hook("up" + std::to_string(level), cur);
    }
    logits_ = head_->forward(cur, train);
    hook("head", logits_);
    Tensor<S> prob = softmax(logits_);
    hook("prob", prob);
    return prob;
  }

  // Accumulates parameter gradients from d(loss)/d(logits). Call zero_grad()
  // between optimizer steps, not between accumulation passes.
  void backward(const Tensor<S>& dlogits) {
    // Inference-mode forward skips the activation caches; a backward pass over
    // empty caches would silently accumulate zero gradients everywhere.
    if (!train_pass_)
      throw RuntimeError("backward: last forward pass ran with train=false");
    Tensor<S> d = head_->backward(dlogits);
    std::vector<Tensor<S>> dskip(static_cast<std::size_t>(cfg_.levels));
    // dec_[j] handled level (levels-2-j) on the way up; unwind in reverse.
    for (std::size_t j = dec_.size(); j-- > 0;) {
      Tensor<S> ds;
      d = dec_[j]->backward(d, ds);
      dskip[static_cast<std::size_t>(cfg_.levels - 2 - static_cast<int>(j))] = std::move(ds);
    }
    for (int i = cfg_.levels - 1; i >= 0; --i) {
      if (i + 1 < cfg_.levels) {
        d = pools_[static_cast<std::size_t>(i)]->backward(d);
        // Skip gradient joins at the center frame of this level's features.
        const Tensor<S>& ds = dskip[static_cast<std::size_t>(i)];
        const int tc = (skip_t_[static_cast<std::size_t>(i)] - 1) / 2;
        S* dst = d.frame(tc);
        for (std::size_t n = 0; n < ds.v.size(); ++n) dst[n] += ds.v[n];
      }
      auto& convs = tconvs_[static_cast<std::size_t>(i)];
      for (std::size_t k = convs.size(); k-- > 0;)
        d = convs[k]->backward(trelu_[static_cast<std::size_t>(i)][k].backward(d));
      d = enc_[static_cast<std::size_t>(i)]->backward(d);
    }
  }

  std::vector<Param<S>*> params() {
    std::vector<Param<S>*> out;
    for (auto& b : enc_) b->collect(out);
    for (auto& convs : tconvs_)
      for (auto& tc : convs) tc->collect(out);
    for (auto& b : dec_) b->collect(out);
    head_->collect(out);
    return out;
  }

  void zero_grad() {
    for (Param<S>* p : params()) std::fill(p->g.begin(), p->g.end(), S(0));
  }

  void set_hook(bool on) { hook_on_ = on; }
  const std::map<std::string, Tensor<S>>& activations() const { return acts_; }

  // Per-pixel softmax over the class axis, max-subtracted for stability.
  static Tensor<S> softmax(const Tensor<S>& logits) {
    Tensor<S> p = logits;
    const std::size_t plane = p.plane();
    for (int t = 0; t < p.t; ++t)
      for (std::size_t i = 0; i < plane; ++i) {
        S mx = p.frame(t)[i];
        for (int c = 1; c < p.c; ++c) mx = std::max(mx, p.frame(t)[c * plane + i]);
        S sum = S(0);
        for (int c = 0; c < p.c; ++c) {
          S& e = p.frame(t)[c * plane + i];
          e = std::exp(e - mx);
          sum += e;
        }
        for (int c = 0; c < p.c; ++c) p.frame(t)[c * plane + i] /= sum;
      }
    return p;
  }

 private:
  void hook(const std::string& name, const Tensor<S>& x) {
    if (hook_on_) acts_[name] = x;
  }

  NetConfig cfg_;
  std::vector<std::unique_ptr<detail::ResBlock<S>>> enc_;
  std::vector<std::vector<std::unique_ptr<TemporalConv<S>>>> tconvs_;
  std::vector<std::vector<ReLU<S>>> trelu_;
  std::vector<std::unique_ptr<MaxPool2<S>>> pools_;
  std::vector<std::unique_ptr<detail::DecBlock<S>>> dec_;
  std::unique_ptr<Conv2d<S>> head_;

  std::vector<Tensor<S>> skips_;
  std::vector<int> skip_t_;
  Tensor<S> logits_;
  bool train_pass_ = false;
  bool hook_on_ = false;
  std::map<std::string, Tensor<S>> acts_;
};

// Fresh instance with the same config and weights; forward caches are not
// shared, so clones can run inference on separate threads.
template <class S>
std::unique_ptr<R21UNet<S>> clone_model(R21UNet<S>& model) {
  auto out = std::make_unique<R21UNet<S>>(model.config(), 0);
  const std::vector<Param<S>*> src = model.params();
  const std::vector<Param<S>*> dst = out->params();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i]->w = src[i]->w;
  return out;
}

// FNV-1a over parameter names, shapes and raw values in collection order.
// Training asserts this stays constant for the frozen MBS model.
template <class S>
std::string weight_hash(R21UNet<S>& model) {
  Fnv1a h;
  for (const Param<S>* p : model.params()) {
    h.update(p->name.data(), p->name.size());
    for (int d : p->shape) h.update_value(d);
    h.update(p->w.data(), p->w.size() * sizeof(S));
  }
  return h.hex();
}

// Sliding-window inference over a frame sequence: output frame t corresponds
// to input frame t + (window-1)/2.
template <class S>
Tensor<S> predict_sequence(R21UNet<S>& model, const Tensor<S>& frames) {
  const int win = model.config().temporal_window();
  if (frames.t < win)
    throw DataError("predict_sequence: " + std::to_string(frames.t) +
                    " frames, need at least the temporal window of " + std::to_string(win));
  const int n = frames.t - win + 1;
  Tensor<S> out;
  for (int s = 0; s < n; ++s) {
    Tensor<S> window(win, frames.c, frames.h, frames.w);
    std::copy(frames.frame(s), frames.frame(s + win), window.frame(0));
    const Tensor<S> p = model.forward(window, false);
    if (s == 0) out = Tensor<S>(n, p.c, p.h, p.w);
    std::copy(p.frame(0), p.frame(0) + p.size(), out.frame(s));
  }
  return out;
}

// Drops the "none" channel from a 4-class boundary softmax, keeping
// [foreground, background, mixed] for the ASP input stack.
template <class S>
Tensor<S> mbs_prob_to_channels(const Tensor<S>& prob) {
  require_shape(prob, -1, 4, -1, -1, "mbs_prob_to_channels");
  Tensor<S> out(prob.t, 3, prob.h, prob.w);
  const std::size_t plane = prob.plane();
  for (int t = 0; t < prob.t; ++t)
    std::copy(prob.frame(t) + plane, prob.frame(t) + 4 * plane, out.frame(t));
  return out;
}

// ASP input stacking; channel order [mbs_fg, mbs_bg, mbs_mixed, luma, att].
// Luma is expected in [0,1] (scaled at load time), matching the softmax and
// attention channels' range.
template <class S>
Tensor<S> stack_asp_inputs(const Tensor<S>& luma, const Tensor<S>& mbs_pred,
                           const Tensor<S>& att) {
  if (luma.t != mbs_pred.t || luma.t != att.t || luma.h != mbs_pred.h || luma.w != mbs_pred.w ||
      luma.h != att.h || luma.w != att.w || luma.c != 1 || mbs_pred.c != 3 || att.c != 1)
    throw DataError("stack_asp_inputs: mismatched shapes " + luma.shape_str() + " / " +
                    mbs_pred.shape_str() + " / " + att.shape_str());
  Tensor<S> out(luma.t, 5, luma.h, luma.w);
  const std::size_t plane = luma.plane();
  for (int t = 0; t < luma.t; ++t) {
    std::copy(mbs_pred.frame(t), mbs_pred.frame(t) + 3 * plane, out.frame(t));
    std::copy(luma.frame(t), luma.frame(t) + plane, out.frame(t) + 3 * plane);
    std::copy(att.frame(t), att.frame(t) + plane, out.frame(t) + 4 * plane);
  }
  return out;
}

}  // namespace objn
