#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "dsal/tensor.hpp"

namespace dsal {

// Interleaved 8-bit pixels, c in {1, 3}.
struct RawImage {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;
};

// Decodes PNG or JPEG (sniffed from the file's magic bytes). Throws IoError
// naming the path on any failure.
RawImage load_raw_image(const std::string& path);

// 8-bit PNG, grayscale or RGB.
void save_raw_png(const std::string& path, const RawImage& img);

template <class S>
Tensor<S> from_raw(const RawImage& raw) {
  Tensor<S> t(raw.height, raw.width, raw.channels);
  const std::uint8_t* p = raw.pixels.data();
  for (int y = 0; y < raw.height; ++y)
    for (int x = 0; x < raw.width; ++x)
      for (int ch = 0; ch < raw.channels; ++ch) t(y, x, ch) = S(*p++) / S(255);
  return t;
}

template <class S>
RawImage to_raw(const Tensor<S>& t) {
  require(t.channels() == 1 || t.channels() == 3,
          cat("to_raw: expected 1 or 3 channels, got ", t.channels()));
  RawImage raw{t.height(), t.width(), t.channels(), {}};
  raw.pixels.resize(std::size_t(t.size()));
  std::uint8_t* p = raw.pixels.data();
  for (int y = 0; y < t.height(); ++y)
    for (int x = 0; x < t.width(); ++x)
      for (int ch = 0; ch < t.channels(); ++ch) {
        double v = std::min(1.0, std::max(0.0, double(t(y, x, ch))));
        *p++ = std::uint8_t(std::lround(v * 255.0));
      }
  return raw;
}

template <class S>
Tensor<S> load_image(const std::string& path) {
  return from_raw<S>(load_raw_image(path));
}

template <class S>
void save_png(const std::string& path, const Tensor<S>& t) {
  save_raw_png(path, to_raw(t));
}

}  // namespace dsal
