#pragma once

#include <algorithm>
#include <cmath>

#include "dsal/tensor.hpp"

namespace dsal {

// Bilinear resize with half-pixel centers. Identity sizes return a copy.
template <class S>
Tensor<S> resize_bilinear(const Tensor<S>& src, int out_h, int out_w) {
  require(out_h > 0 && out_w > 0, "resize_bilinear: non-positive target size");
  if (out_h == src.height() && out_w == src.width()) return src;
  Tensor<S> dst(out_h, out_w, src.channels());
  const double sy = double(src.height()) / out_h;
  const double sx = double(src.width()) / out_w;
  for (int y = 0; y < out_h; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    int y0 = int(std::floor(fy));
    double wy = fy - y0;
    int ya = std::clamp(y0, 0, src.height() - 1);
    int yb = std::clamp(y0 + 1, 0, src.height() - 1);
    for (int x = 0; x < out_w; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      int x0 = int(std::floor(fx));
      double wx = fx - x0;
      int xa = std::clamp(x0, 0, src.width() - 1);
      int xb = std::clamp(x0 + 1, 0, src.width() - 1);
      for (int ch = 0; ch < src.channels(); ++ch) {
        double top = (1.0 - wx) * src(ya, xa, ch) + wx * src(ya, xb, ch);
        double bot = (1.0 - wx) * src(yb, xa, ch) + wx * src(yb, xb, ch);
        dst(y, x, ch) = S((1.0 - wy) * top + wy * bot);
      }
    }
  }
  return dst;
}

// Rec.601 luma; identity for single-channel input.
template <class S>
Tensor<S> to_gray(const Tensor<S>& src) {
  if (src.channels() == 1) return src;
  require(src.channels() == 3, cat("to_gray: expected 1 or 3 channels, got ", src.channels()));
  Tensor<S> dst(src.height(), src.width(), 1);
  dst.plane(0) = S(0.299) * src.plane(0) + S(0.587) * src.plane(1) + S(0.114) * src.plane(2);
  return dst;
}

template <class S>
Tensor<S> to_rgb(const Tensor<S>& src) {
  if (src.channels() == 3) return src;
  require(src.channels() == 1, cat("to_rgb: expected 1 or 3 channels, got ", src.channels()));
  Tensor<S> dst(src.height(), src.width(), 3);
  for (int ch = 0; ch < 3; ++ch) dst.plane(ch) = src.plane(0);
  return dst;
}

template <class S>
Tensor<S> binarize(Tensor<S> t, S threshold) {
  t.array() = (t.array() >= threshold).template cast<S>();
  return t;
}

}  // namespace dsal
