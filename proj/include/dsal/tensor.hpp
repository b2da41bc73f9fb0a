#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "dsal/common.hpp"
#include "dsal/rng.hpp"

namespace dsal {

template <class S>
using MatRM = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S>
using ArrX = Eigen::Array<S, Eigen::Dynamic, 1>;

// Dense H x W x C image tensor in channel-planar layout: plane c is a
// contiguous row-major H x W block. Values are conventionally in [0, 1] for
// images and saliency maps; intermediate network activations are unbounded.
template <class S>
class Tensor {
 public:
  Tensor() = default;
  Tensor(int h, int w, int c) : h_(h), w_(w), c_(c), v_(ArrX<S>::Zero(std::int64_t(h) * w * c)) {
    require(h > 0 && w > 0 && c > 0, cat("Tensor: bad shape ", h, "x", w, "x", c));
  }

  int height() const { return h_; }
  int width() const { return w_; }
  int channels() const { return c_; }
  std::int64_t size() const { return v_.size(); }
  bool empty() const { return v_.size() == 0; }

  S& operator()(int y, int x, int ch) { return v_[idx(y, x, ch)]; }
  S operator()(int y, int x, int ch) const { return v_[idx(y, x, ch)]; }

  ArrX<S>& array() { return v_; }
  const ArrX<S>& array() const { return v_; }
  S* data() { return v_.data(); }
  const S* data() const { return v_.data(); }

  Eigen::Map<MatRM<S>> plane(int ch) {
    return {v_.data() + std::int64_t(ch) * h_ * w_, h_, w_};
  }
  Eigen::Map<const MatRM<S>> plane(int ch) const {
    return {v_.data() + std::int64_t(ch) * h_ * w_, h_, w_};
  }

  // Channels-as-rows view: C x (H*W), matching the conv engine's GEMM layout.
  Eigen::Map<MatRM<S>> as_matrix() { return {v_.data(), c_, std::int64_t(h_) * w_}; }
  Eigen::Map<const MatRM<S>> as_matrix() const { return {v_.data(), c_, std::int64_t(h_) * w_}; }

  void set_zero() { v_.setZero(); }
  void fill(S value) { v_.setConstant(value); }

  bool same_shape(const Tensor& o) const { return h_ == o.h_ && w_ == o.w_ && c_ == o.c_; }

  bool all_finite() const { return v_.isFinite().all(); }

 private:
  std::int64_t idx(int y, int x, int ch) const {
    return (std::int64_t(ch) * h_ + y) * w_ + x;
  }

  int h_ = 0, w_ = 0, c_ = 0;
  ArrX<S> v_;
};

template <class S>
Tensor<S> constant_like(const Tensor<S>& t, S value) {
  Tensor<S> out(t.height(), t.width(), t.channels());
  out.fill(value);
  return out;
}

template <class S>
Tensor<S> clamp01(Tensor<S> t) {
  t.array() = t.array().min(S(1)).max(S(0));
  return t;
}

template <class S>
S mean(const Tensor<S>& t) {
  return t.array().mean();
}

template <class S>
S max_abs_diff(const Tensor<S>& a, const Tensor<S>& b) {
  require(a.same_shape(b), "max_abs_diff: shape mismatch");
  return (a.array() - b.array()).abs().maxCoeff();
}

template <class S>
bool bitwise_equal(const Tensor<S>& a, const Tensor<S>& b) {
  return a.same_shape(b) && (a.array() == b.array()).all();
}

// True when every element is exactly 0 or 1.
template <class S>
bool is_binary(const Tensor<S>& t) {
  return ((t.array() == S(0)) || (t.array() == S(1))).all();
}

template <class S>
Tensor<S> random_tensor(int h, int w, int c, Rng& rng, S lo = S(0), S hi = S(1)) {
  Tensor<S> t(h, w, c);
  for (std::int64_t i = 0; i < t.size(); ++i) t.data()[i] = S(rng.uniform(double(lo), double(hi)));
  return t;
}

// Stacks tensors along the channel axis; spatial dims must agree.
template <class S>
Tensor<S> concat_channels(const Tensor<S>& a, const Tensor<S>& b) {
  require(a.height() == b.height() && a.width() == b.width(),
          "concat_channels: spatial dims differ");
  Tensor<S> out(a.height(), a.width(), a.channels() + b.channels());
  out.array().head(a.size()) = a.array();
  out.array().tail(b.size()) = b.array();
  return out;
}

template <class S>
std::pair<Tensor<S>, Tensor<S>> split_channels(const Tensor<S>& t, int c_first) {
  require(c_first > 0 && c_first < t.channels(), "split_channels: bad split point");
  Tensor<S> a(t.height(), t.width(), c_first);
  Tensor<S> b(t.height(), t.width(), t.channels() - c_first);
  a.array() = t.array().head(a.size());
  b.array() = t.array().tail(b.size());
  return {std::move(a), std::move(b)};
}

}  // namespace dsal
