#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "objn/core/rng.hpp"
#include "objn/net/config.hpp"
#include "objn/net/tensor.hpp"

namespace objn {

template <class S>
using MatR = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using MapM = Eigen::Map<MatR<S>>;
template <class S>
using MapC = Eigen::Map<const MatR<S>>;

template <class S>
struct Param {
  std::string name;
  std::vector<int> shape;
  std::vector<S> w;  // values
  std::vector<S> g;  // gradient, same length

  void init(std::string n, std::vector<int> sh, S fill = S(0)) {
    name = std::move(n);
    shape = std::move(sh);
    std::size_t count = 1;
    for (int d : shape) count *= static_cast<std::size_t>(d);
    w.assign(count, fill);
    g.assign(count, S(0));
  }
  void he_init(Rng& rng, int fan_in) {
    const double sd = std::sqrt(2.0 / fan_in);
    for (auto& x : w) x = static_cast<S>(rng.normal(0.0, sd));
  }
};

template <class S>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor<S> forward(const Tensor<S>& x, bool train) = 0;
  virtual Tensor<S> backward(const Tensor<S>& dy) = 0;
  virtual void collect(std::vector<Param<S>*>& out) { (void)out; }
};

// Per-frame 2-D convolution (kernel 1 or 3, same-size output) via im2col and
// a GEMM per frame. Padding is zero or periodic; periodic exists so the
// translation-covariance property can be tested without boundary effects.
template <class S>
class Conv2d : public Layer<S> {
 public:
  Conv2d(const std::string& name, int in_c, int out_c, int k, PadKind pad, Rng& rng)
      : in_c_(in_c), out_c_(out_c), k_(k), pad_(pad) {
    w_.init(name + ".w", {out_c, in_c, k, k});
    w_.he_init(rng, in_c * k * k);
    b_.init(name + ".b", {out_c});
  }

  Tensor<S> forward(const Tensor<S>& x, bool train) override {
    require_shape(x, -1, in_c_, -1, -1, w_.name.c_str());
    if (train) x_ = x;
    Tensor<S> y(x.t, out_c_, x.h, x.w);
    const int hw = x.h * x.w, rows = in_c_ * k_ * k_;
    col_.resize(static_cast<std::size_t>(rows) * hw);
    MapC<S> W(w_.w.data(), out_c_, rows);
    for (int t = 0; t < x.t; ++t) {
      build_col(x, t);
      MapC<S> col(col_.data(), rows, hw);
      MapM<S> Y(y.frame(t), out_c_, hw);
      Y.noalias() = W * col;
      for (int c = 0; c < out_c_; ++c) Y.row(c).array() += b_.w[static_cast<std::size_t>(c)];
    }
    return y;
  }

  Tensor<S> backward(const Tensor<S>& dy) override {
    const Tensor<S>& x = x_;
    Tensor<S> dx(x.t, x.c, x.h, x.w);
    const int hw = x.h * x.w, rows = in_c_ * k_ * k_;
    MapC<S> W(w_.w.data(), out_c_, rows);
    MapM<S> dW(w_.g.data(), out_c_, rows);
    dcol_.resize(static_cast<std::size_t>(rows) * hw);
    for (int t = 0; t < x.t; ++t) {
      build_col(x, t);  // recomputed instead of cached: the col matrix is large
      MapC<S> col(col_.data(), rows, hw);
      MapC<S> dY(dy.frame(t), out_c_, hw);
      dW.noalias() += dY * col.transpose();
      for (int c = 0; c < out_c_; ++c) b_.g[static_cast<std::size_t>(c)] += dY.row(c).sum();
      MapM<S> dcol(dcol_.data(), rows, hw);
      dcol.noalias() = W.transpose() * dY;
      scatter_col(dx, t);
    }
    return dx;
  }

  void collect(std::vector<Param<S>*>& out) override {
    out.push_back(&w_);
    out.push_back(&b_);
  }

 private:
  void build_col(const Tensor<S>& x, int t) {
    const int h = x.h, w = x.w, r = k_ / 2;
    std::size_t row = 0;
    for (int ci = 0; ci < in_c_; ++ci)
      for (int ky = -r; ky <= r; ++ky)
        for (int kx = -r; kx <= r; ++kx, ++row) {
          S* dst = col_.data() + row * static_cast<std::size_t>(h) * w;
          for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx) {
              int sy = y + ky, sx = xx + kx;
              S val;
              if (pad_ == PadKind::periodic) {
                sy = (sy + h) % h;
                sx = (sx + w) % w;
                val = x.at(t, ci, sy, sx);
              } else {
                val = (sy < 0 || sy >= h || sx < 0 || sx >= w) ? S(0) : x.at(t, ci, sy, sx);
              }
              dst[static_cast<std::size_t>(y) * w + xx] = val;
            }
        }
  }

  void scatter_col(Tensor<S>& dx, int t) {
    const int h = dx.h, w = dx.w, r = k_ / 2;
    std::size_t row = 0;
    for (int ci = 0; ci < in_c_; ++ci)
      for (int ky = -r; ky <= r; ++ky)
        for (int kx = -r; kx <= r; ++kx, ++row) {
          const S* src = dcol_.data() + row * static_cast<std::size_t>(h) * w;
          for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx) {
              int sy = y + ky, sx = xx + kx;
              if (pad_ == PadKind::periodic) {
                sy = (sy + h) % h;
                sx = (sx + w) % w;
              } else if (sy < 0 || sy >= h || sx < 0 || sx >= w) {
                continue;
              }
              dx.at(t, ci, sy, sx) += src[static_cast<std::size_t>(y) * w + xx];
            }
        }
  }

  int in_c_, out_c_, k_;
  PadKind pad_;
  Param<S> w_, b_;
  Tensor<S> x_;
  std::vector<S> col_, dcol_;
};

// Kernel-3 valid temporal convolution with full channel mixing: drops the
// first and last frame, the mechanism behind the 15 -> 11 -> 5 chain.
template <class S>
class TemporalConv : public Layer<S> {
 public:
  TemporalConv(const std::string& name, int c, Rng& rng) : c_(c) {
    w_.init(name + ".w", {3, c, c});
    w_.he_init(rng, 3 * c);
    b_.init(name + ".b", {c});
  }

  Tensor<S> forward(const Tensor<S>& x, bool train) override {
    require_shape(x, -1, c_, -1, -1, w_.name.c_str());
    if (x.t < 3) throw RuntimeError(w_.name + ": axis T is " + std::to_string(x.t) + ", expected >= 3");
    if (train) x_ = x;
    Tensor<S> y(x.t - 2, c_, x.h, x.w);
    const int hw = x.h * x.w;
    for (int t = 0; t < y.t; ++t) {
      MapM<S> Y(y.frame(t), c_, hw);
      for (int k = 0; k < 3; ++k) {
        MapC<S> Wk(w_.w.data() + static_cast<std::size_t>(k) * c_ * c_, c_, c_);
        MapC<S> X(x.frame(t + k), c_, hw);
        if (k == 0)
          Y.noalias() = Wk * X;
        else
          Y.noalias() += Wk * X;
      }
      for (int c = 0; c < c_; ++c) Y.row(c).array() += b_.w[static_cast<std::size_t>(c)];
    }
    return y;
  }

  Tensor<S> backward(const Tensor<S>& dy) override {
    const Tensor<S>& x = x_;
    Tensor<S> dx(x.t, x.c, x.h, x.w);
    const int hw = x.h * x.w;
    for (int t = 0; t < dy.t; ++t) {
      MapC<S> dY(dy.frame(t), c_, hw);
      for (int c = 0; c < c_; ++c) b_.g[static_cast<std::size_t>(c)] += dY.row(c).sum();
      for (int k = 0; k < 3; ++k) {
        MapC<S> Wk(w_.w.data() + static_cast<std::size_t>(k) * c_ * c_, c_, c_);
        MapM<S> dWk(w_.g.data() + static_cast<std::size_t>(k) * c_ * c_, c_, c_);
        MapC<S> X(x.frame(t + k), c_, hw);
        MapM<S> dX(dx.frame(t + k), c_, hw);
        dWk.noalias() += dY * X.transpose();
        dX.noalias() += Wk.transpose() * dY;
      }
    }
    return dx;
  }

  void collect(std::vector<Param<S>*>& out) override {
    out.push_back(&w_);
    out.push_back(&b_);
  }

 private:
  int c_;
  Param<S> w_, b_;
  Tensor<S> x_;
};

// Instance norm normalizes each (frame, channel) plane; batch norm pools the
// statistics over all frames of the window (the closest analogue of batch
// statistics when the batch axis is time). Both always use current-input
// statistics, so inference needs no running averages and stays a pure
// function of the input.
template <class S>
class Norm : public Layer<S> {
 public:
  static constexpr double kEps = 1e-5;

  Norm(const std::string& name, int c, NormKind kind) : c_(c), kind_(kind) {
    gamma_.init(name + ".gamma", {c}, S(1));
    beta_.init(name + ".beta", {c});
  }

  Tensor<S> forward(const Tensor<S>& x, bool train) override {
    if (kind_ == NormKind::none) return x;
    require_shape(x, -1, c_, -1, -1, gamma_.name.c_str());
    Tensor<S> y(x.t, x.c, x.h, x.w);
    xhat_ = Tensor<S>(x.t, x.c, x.h, x.w);
    const std::size_t plane = x.plane();
    const int groups_t = kind_ == NormKind::instance ? x.t : 1;
    const std::size_t n = plane * (kind_ == NormKind::instance ? 1 : static_cast<std::size_t>(x.t));
    invstd_.assign(static_cast<std::size_t>(groups_t) * c_, S(0));
    for (int gt = 0; gt < groups_t; ++gt)
      for (int c = 0; c < c_; ++c) {
        double sum = 0, sum2 = 0;
        for_group(x, gt, c, [&](S v) {
          sum += v;
          sum2 += static_cast<double>(v) * v;
        });
        const double mean = sum / static_cast<double>(n);
        const double var = sum2 / static_cast<double>(n) - mean * mean;
        const S istd = static_cast<S>(1.0 / std::sqrt(std::max(var, 0.0) + kEps));
        invstd_[static_cast<std::size_t>(gt) * c_ + c] = istd;
        const S g = gamma_.w[static_cast<std::size_t>(c)], b = beta_.w[static_cast<std::size_t>(c)];
        transform_group(x, xhat_, y, gt, c, static_cast<S>(mean), istd, g, b);
      }
    (void)train;
    return y;
  }

  Tensor<S> backward(const Tensor<S>& dy) override {
    if (kind_ == NormKind::none) return dy;
    Tensor<S> dx(dy.t, dy.c, dy.h, dy.w);
    const std::size_t plane = dy.plane();
    const int groups_t = kind_ == NormKind::instance ? dy.t : 1;
    const std::size_t n = plane * (kind_ == NormKind::instance ? 1 : static_cast<std::size_t>(dy.t));
    for (int gt = 0; gt < groups_t; ++gt)
      for (int c = 0; c < c_; ++c) {
        const S g = gamma_.w[static_cast<std::size_t>(c)];
        const S istd = invstd_[static_cast<std::size_t>(gt) * c_ + c];
        double sum_dy = 0, sum_dy_xhat = 0;
        for_group2(dy, xhat_, gt, c, [&](S d, S xh) {
          sum_dy += d;
          sum_dy_xhat += static_cast<double>(d) * xh;
        });
        gamma_.g[static_cast<std::size_t>(c)] += static_cast<S>(sum_dy_xhat);
        beta_.g[static_cast<std::size_t>(c)] += static_cast<S>(sum_dy);
        const double mean_dy = sum_dy / static_cast<double>(n);
        const double mean_dy_xhat = sum_dy_xhat / static_cast<double>(n);
        apply_dx(dy, dx, gt, c, g, istd, static_cast<S>(mean_dy), static_cast<S>(mean_dy_xhat));
      }
    return dx;
  }

  void collect(std::vector<Param<S>*>& out) override {
    if (kind_ == NormKind::none) return;
    out.push_back(&gamma_);
    out.push_back(&beta_);
  }

 private:
  template <class F>
  void for_group(const Tensor<S>& x, int gt, int c, F f) {
    const int t0 = kind_ == NormKind::instance ? gt : 0;
    const int t1 = kind_ == NormKind::instance ? gt + 1 : x.t;
    for (int t = t0; t < t1; ++t) {
      const S* p = x.frame(t) + static_cast<std::size_t>(c) * x.plane();
      for (std::size_t i = 0; i < x.plane(); ++i) f(p[i]);
    }
  }
  template <class F>
  void for_group2(const Tensor<S>& a, const Tensor<S>& b, int gt, int c, F f) {
    const int t0 = kind_ == NormKind::instance ? gt : 0;
    const int t1 = kind_ == NormKind::instance ? gt + 1 : a.t;
    for (int t = t0; t < t1; ++t) {
      const S* pa = a.frame(t) + static_cast<std::size_t>(c) * a.plane();
      const S* pb = b.frame(t) + static_cast<std::size_t>(c) * b.plane();
      for (std::size_t i = 0; i < a.plane(); ++i) f(pa[i], pb[i]);
    }
  }
  void transform_group(const Tensor<S>& x, Tensor<S>& xhat, Tensor<S>& y, int gt, int c, S mean,
                       S istd, S g, S b) {
    const int t0 = kind_ == NormKind::instance ? gt : 0;
    const int t1 = kind_ == NormKind::instance ? gt + 1 : x.t;
    for (int t = t0; t < t1; ++t) {
      const S* px = x.frame(t) + static_cast<std::size_t>(c) * x.plane();
      S* ph = xhat.frame(t) + static_cast<std::size_t>(c) * x.plane();
      S* py = y.frame(t) + static_cast<std::size_t>(c) * x.plane();
      for (std::size_t i = 0; i < x.plane(); ++i) {
        ph[i] = (px[i] - mean) * istd;
        py[i] = g * ph[i] + b;
      }
    }
  }
  void apply_dx(const Tensor<S>& dy, Tensor<S>& dx, int gt, int c, S g, S istd, S mean_dy,
                S mean_dy_xhat) {
    const int t0 = kind_ == NormKind::instance ? gt : 0;
    const int t1 = kind_ == NormKind::instance ? gt + 1 : dy.t;
    for (int t = t0; t < t1; ++t) {
      const S* pd = dy.frame(t) + static_cast<std::size_t>(c) * dy.plane();
      const S* ph = xhat_.frame(t) + static_cast<std::size_t>(c) * dy.plane();
      S* px = dx.frame(t) + static_cast<std::size_t>(c) * dy.plane();
      for (std::size_t i = 0; i < dy.plane(); ++i)
        px[i] = g * istd * (pd[i] - mean_dy - ph[i] * mean_dy_xhat);
    }
  }

  int c_;
  NormKind kind_;
  Param<S> gamma_, beta_;
  Tensor<S> xhat_;
  std::vector<S> invstd_;
};

template <class S>
class ReLU : public Layer<S> {
 public:
  Tensor<S> forward(const Tensor<S>& x, bool train) override {
    Tensor<S> y = x;
    if (train) mask_.assign(x.size(), 0);
    for (std::size_t i = 0; i < y.v.size(); ++i) {
      if (y.v[i] > S(0)) {
        if (train) mask_[i] = 1;
      } else {
        y.v[i] = S(0);
      }
    }
    return y;
  }
  Tensor<S> backward(const Tensor<S>& dy) override {
    Tensor<S> dx = dy;
    for (std::size_t i = 0; i < dx.v.size(); ++i)
      if (!mask_[i]) dx.v[i] = S(0);
    return dx;
  }

 private:
  std::vector<std::uint8_t> mask_;
};

template <class S>
class MaxPool2 : public Layer<S> {
 public:
  Tensor<S> forward(const Tensor<S>& x, bool train) override {
    if (x.h % 2 || x.w % 2)
      throw RuntimeError("maxpool: axis H/W is " + std::to_string(x.h) + "x" +
                         std::to_string(x.w) + ", expected even");
    Tensor<S> y(x.t, x.c, x.h / 2, x.w / 2);
    if (train) {
      in_h_ = x.h;
      in_w_ = x.w;
      in_t_ = x.t;
      in_c_ = x.c;
      arg_.assign(y.size(), 0);
    }
    std::size_t o = 0;
    for (int t = 0; t < x.t; ++t)
      for (int c = 0; c < x.c; ++c)
        for (int yy = 0; yy < y.h; ++yy)
          for (int xx = 0; xx < y.w; ++xx, ++o) {
            S best = x.at(t, c, 2 * yy, 2 * xx);
            int arg = 0;
            for (int k = 1; k < 4; ++k) {
              const S v = x.at(t, c, 2 * yy + (k >> 1), 2 * xx + (k & 1));
              if (v > best) {
                best = v;
                arg = k;
              }
            }
            y.v[o] = best;
            if (train) arg_[o] = static_cast<std::uint8_t>(arg);
          }
    return y;
  }
  Tensor<S> backward(const Tensor<S>& dy) override {
    Tensor<S> dx(in_t_, in_c_, in_h_, in_w_);
    std::size_t o = 0;
    for (int t = 0; t < dy.t; ++t)
      for (int c = 0; c < dy.c; ++c)
        for (int yy = 0; yy < dy.h; ++yy)
          for (int xx = 0; xx < dy.w; ++xx, ++o) {
            const int k = arg_[o];
            dx.at(t, c, 2 * yy + (k >> 1), 2 * xx + (k & 1)) += dy.v[o];
          }
    return dx;
  }

 private:
  int in_h_ = 0, in_w_ = 0, in_t_ = 0, in_c_ = 0;
  std::vector<std::uint8_t> arg_;
};

// Bilinear 2x upsampling. Border handling follows the conv padding mode so a
// periodically padded net stays exactly translation covariant.
template <class S>
class Upsample2 : public Layer<S> {
 public:
  explicit Upsample2(PadKind pad) : pad_(pad) {}

  Tensor<S> forward(const Tensor<S>& x, bool train) override {
    Tensor<S> y(x.t, x.c, x.h * 2, x.w * 2);
    if (train) {
      in_h_ = x.h;
      in_w_ = x.w;
    }
    for (int t = 0; t < x.t; ++t)
      for (int c = 0; c < x.c; ++c)
        for (int yy = 0; yy < y.h; ++yy)
          for (int xx = 0; xx < y.w; ++xx) {
            int y0, x0;
            S wy, wx;
            source(yy, x.h, y0, wy);
            source(xx, x.w, x0, wx);
            const int y1 = wrap(y0 + 1, x.h), x1 = wrap(x0 + 1, x.w);
            const int yc = wrap(y0, x.h), xc = wrap(x0, x.w);
            y.at(t, c, yy, xx) = (S(1) - wy) * ((S(1) - wx) * x.at(t, c, yc, xc) + wx * x.at(t, c, yc, x1)) +
                                 wy * ((S(1) - wx) * x.at(t, c, y1, xc) + wx * x.at(t, c, y1, x1));
          }
    return y;
  }

  Tensor<S> backward(const Tensor<S>& dy) override {
    Tensor<S> dx(dy.t, dy.c, in_h_, in_w_);
    for (int t = 0; t < dy.t; ++t)
      for (int c = 0; c < dy.c; ++c)
        for (int yy = 0; yy < dy.h; ++yy)
          for (int xx = 0; xx < dy.w; ++xx) {
            int y0, x0;
            S wy, wx;
            source(yy, in_h_, y0, wy);
            source(xx, in_w_, x0, wx);
            const int y1 = wrap(y0 + 1, in_h_), x1 = wrap(x0 + 1, in_w_);
            const int yc = wrap(y0, in_h_), xc = wrap(x0, in_w_);
            const S d = dy.at(t, c, yy, xx);
            dx.at(t, c, yc, xc) += (S(1) - wy) * (S(1) - wx) * d;
            dx.at(t, c, yc, x1) += (S(1) - wy) * wx * d;
            dx.at(t, c, y1, xc) += wy * (S(1) - wx) * d;
            dx.at(t, c, y1, x1) += wy * wx * d;
          }
    return dx;
  }

 private:
  // Output pixel i samples input at (i + 0.5)/2 - 0.5; returns the floor
  // index (possibly -1, resolved by wrap()) and the interpolation weight.
  void source(int i, int n, int& i0, S& frac) const {
    const double pos = (i + 0.5) / 2.0 - 0.5;
    const double f = std::floor(pos);
    i0 = static_cast<int>(f);
    frac = static_cast<S>(pos - f);
    (void)n;
  }
  int wrap(int i, int n) const {
    if (pad_ == PadKind::periodic) return ((i % n) + n) % n;
    return std::min(std::max(i, 0), n - 1);
  }

  PadKind pad_;
  int in_h_ = 0, in_w_ = 0;
};

// Channel concatenation and its adjoint, used by the decoder skip joins.
template <class S>
Tensor<S> concat_channels(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.t != b.t || a.h != b.h || a.w != b.w)
    throw RuntimeError("concat: shapes " + a.shape_str() + " vs " + b.shape_str());
  Tensor<S> y(a.t, a.c + b.c, a.h, a.w);
  for (int t = 0; t < a.t; ++t) {
    std::copy(a.frame(t), a.frame(t) + static_cast<std::size_t>(a.c) * a.plane(), y.frame(t));
    std::copy(b.frame(t), b.frame(t) + static_cast<std::size_t>(b.c) * b.plane(),
              y.frame(t) + static_cast<std::size_t>(a.c) * a.plane());
  }
  return y;
}

template <class S>
void split_channels(const Tensor<S>& dy, Tensor<S>& da, Tensor<S>& db, int ca, int cb) {
  da = Tensor<S>(dy.t, ca, dy.h, dy.w);
  db = Tensor<S>(dy.t, cb, dy.h, dy.w);
  for (int t = 0; t < dy.t; ++t) {
    std::copy(dy.frame(t), dy.frame(t) + static_cast<std::size_t>(ca) * dy.plane(), da.frame(t));
    std::copy(dy.frame(t) + static_cast<std::size_t>(ca) * dy.plane(),
              dy.frame(t) + static_cast<std::size_t>(ca + cb) * dy.plane(), db.frame(t));
  }
}

// Temporal center frame of a tensor, as its own single-frame tensor.
template <class S>
Tensor<S> center_frame(const Tensor<S>& x) {
  Tensor<S> y(1, x.c, x.h, x.w);
  const int t = (x.t - 1) / 2;
  std::copy(x.frame(t), x.frame(t) + static_cast<std::size_t>(x.c) * x.plane(), y.frame(0));
  return y;
}

}  // namespace objn
