#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "dsal/image_io.hpp"
#include "dsal/image_ops.hpp"
#include "dsal/rng.hpp"
#include "dsal/tensor.hpp"

namespace dsal {

// Default preprocessing edge; smallest size that leaves the saliency
// generator a non-trivial bottleneck after its four pooling stages.
inline constexpr int kDefaultImageSize = 96;
inline constexpr double kMaskThreshold = 0.5;

// sigma is expressed on the 0-255 intensity scale and applied as sigma/255
// in unit scale.
struct NoiseModel {
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

template <class S>
struct SampleTriplet {
  Tensor<S> clean;  // H x W x 3
  Tensor<S> noisy;  // H x W x 3
  Tensor<S> mask;   // H x W x 1, binary
  double sigma = 0.0;
  std::string id;
};

// The raw Gaussian field added by corrupt_gaussian, before clamping.
template <class S>
Tensor<S> gaussian_noise_field(int h, int w, int c, const NoiseModel& noise) {
  require(noise.sigma >= 0.0, cat("gaussian_noise_field: negative sigma ", noise.sigma));
  Tensor<S> field(h, w, c);
  if (noise.sigma == 0.0) return field;
  Rng rng(noise.seed);
  const double scale = noise.sigma / 255.0;
  for (std::int64_t i = 0; i < field.size(); ++i) field.data()[i] = S(scale * rng.normal());
  return field;
}

// clamp(image + N(0, sigma/255), 0, 1), i.i.d. per pixel and channel.
template <class S>
Tensor<S> corrupt_gaussian(const Tensor<S>& image, const NoiseModel& noise) {
  require(noise.sigma >= 0.0, cat("corrupt_gaussian: negative sigma ", noise.sigma));
  if (noise.sigma == 0.0) return image;
  Tensor<S> out = image;
  out.array() += gaussian_noise_field<S>(image.height(), image.width(), image.channels(), noise).array();
  return clamp01(std::move(out));
}

// Loads an image/mask pair, resizes both to target_size x target_size and
// binarizes the mask at 0.5. The noisy field is left empty for the caller.
template <class S>
SampleTriplet<S> load_pair(const std::string& image_path, const std::string& mask_path,
                           int target_size) {
  require(target_size > 0 && target_size % 16 == 0,
          cat("load_pair: target_size ", target_size, " must be a positive multiple of 16"));
  SampleTriplet<S> t;
  t.clean = to_rgb(resize_bilinear(load_image<S>(image_path), target_size, target_size));
  t.mask = binarize(to_gray(resize_bilinear(load_image<S>(mask_path), target_size, target_size)),
                    S(kMaskThreshold));
  t.id = std::filesystem::path(image_path).stem().string();
  return t;
}

namespace detail {

template <class S>
void draw_shape(Tensor<S>& img, Tensor<S>& mask, Rng& rng) {
  const int size = img.height();
  const int kind = rng.uniform_int(3);
  S color[3];
  const double base = rng.uniform(0.65, 0.95);
  for (auto& c : color) c = S(std::min(1.0, base + rng.uniform(-0.08, 0.08)));

  auto paint = [&](int y, int x) {
    for (int ch = 0; ch < 3; ++ch) img(y, x, ch) = color[ch];
    mask(y, x, 0) = S(1);
  };

  if (kind == 0) {  // circle
    const double r = rng.uniform(size / 10.0, size / 4.0);
    const double cy = rng.uniform(r, size - r), cx = rng.uniform(r, size - r);
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x)
        if ((y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r) paint(y, x);
  } else if (kind == 1) {  // axis-aligned rectangle
    const int hh = int(rng.uniform(size / 10.0, size / 4.0));
    const int hw = int(rng.uniform(size / 10.0, size / 4.0));
    const int cy = hh + rng.uniform_int(std::max(1, size - 2 * hh));
    const int cx = hw + rng.uniform_int(std::max(1, size - 2 * hw));
    for (int y = std::max(0, cy - hh); y < std::min(size, cy + hh + 1); ++y)
      for (int x = std::max(0, cx - hw); x < std::min(size, cx + hw + 1); ++x) paint(y, x);
  } else {  // triangle
    double py[3], px[3];
    const double r = rng.uniform(size / 8.0, size / 3.5);
    const double cy = rng.uniform(r, size - r), cx = rng.uniform(r, size - r);
    const double phase = rng.uniform(0.0, 2.0 * M_PI);
    for (int k = 0; k < 3; ++k) {
      py[k] = cy + r * std::sin(phase + 2.0 * M_PI * k / 3.0);
      px[k] = cx + r * std::cos(phase + 2.0 * M_PI * k / 3.0);
    }
    auto edge = [&](int a, int b, double y, double x) {
      return (px[b] - px[a]) * (y - py[a]) - (py[b] - py[a]) * (x - px[a]);
    };
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        double e0 = edge(0, 1, y, x), e1 = edge(1, 2, y, x), e2 = edge(2, 0, y, x);
        if ((e0 >= 0 && e1 >= 0 && e2 >= 0) || (e0 <= 0 && e1 <= 0 && e2 <= 0)) paint(y, x);
      }
  }
}

// Textured dark-ish background: smooth gratings plus fine uniform grain.
template <class S>
void fill_background(Tensor<S>& img, Rng& rng) {
  const int size = img.height();
  double base[3], amp[2], freq[2], theta[2], phase[2];
  for (auto& b : base) b = rng.uniform(0.15, 0.4);
  for (int g = 0; g < 2; ++g) {
    amp[g] = rng.uniform(0.02, 0.06);
    freq[g] = rng.uniform(2.0, 6.0) * 2.0 * M_PI / size;
    theta[g] = rng.uniform(0.0, M_PI);
    phase[g] = rng.uniform(0.0, 2.0 * M_PI);
  }
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      double tex = 0.0;
      for (int g = 0; g < 2; ++g) {
        double u = y * std::sin(theta[g]) + x * std::cos(theta[g]);
        tex += amp[g] * std::sin(freq[g] * u + phase[g]);
      }
      tex += rng.uniform(-0.03, 0.03);
      for (int ch = 0; ch < 3; ++ch)
        img(y, x, ch) = S(std::min(1.0, std::max(0.0, base[ch] + tex)));
    }
}

}  // namespace detail

// Procedural desk-scale corpus: textured backgrounds with 1-3 bright shapes,
// mask = union of shape interiors. Fully deterministic per (seed, index).
template <class S>
std::vector<SampleTriplet<S>> make_shapes_corpus(int n, int size,
                                                 const std::vector<double>& sigmas,
                                                 std::uint64_t seed) {
  require(n >= 1, cat("make_shapes_corpus: n must be >= 1, got ", n));
  require(size > 0 && size % 16 == 0,
          cat("make_shapes_corpus: size ", size, " must be a positive multiple of 16"));
  require(!sigmas.empty(), "make_shapes_corpus: sigma list is empty");
  for (double s : sigmas) require(s >= 0.0, cat("make_shapes_corpus: negative sigma ", s));

  std::vector<SampleTriplet<S>> corpus;
  corpus.reserve(std::size_t(n));
  for (int i = 0; i < n; ++i) {
    Rng rng(mix64(seed, std::uint64_t(i)));
    SampleTriplet<S> t;
    t.clean = Tensor<S>(size, size, 3);
    t.mask = Tensor<S>(size, size, 1);
    detail::fill_background(t.clean, rng);
    const int n_shapes = 1 + rng.uniform_int(3);
    for (int k = 0; k < n_shapes; ++k) detail::draw_shape(t.clean, t.mask, rng);
    t.sigma = sigmas[rng.uniform_int(int(sigmas.size()))];
    t.noisy = corrupt_gaussian(t.clean, {t.sigma, mix64(seed, std::uint64_t(i), 0x6e6f697365ull)});
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%05d", i);
    t.id = buf;
    corpus.push_back(std::move(t));
  }
  return corpus;
}

// ---- corpus manifest (CSV of clean_path, noisy_path, mask_path, sigma) ----

struct ManifestRow {
  std::string clean_path;
  std::string noisy_path;
  std::string mask_path;
  double sigma = 0.0;
};

inline void write_manifest(const std::string& path, const std::vector<ManifestRow>& rows) {
  std::ofstream os(path);
  if (!os) throw IoError(cat("cannot write manifest '", path, "'"));
  os << "clean_path,noisy_path,mask_path,sigma\n";
  for (const auto& r : rows)
    os << r.clean_path << ',' << r.noisy_path << ',' << r.mask_path << ',' << r.sigma << '\n';
}

inline std::vector<ManifestRow> read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError(cat("cannot read manifest '", path, "'"));
  std::vector<ManifestRow> rows;
  std::string line;
  std::getline(is, line);  // header
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    ManifestRow r;
    std::istringstream ls(line);
    std::string sigma;
    if (!std::getline(ls, r.clean_path, ',') || !std::getline(ls, r.noisy_path, ',') ||
        !std::getline(ls, r.mask_path, ',') || !std::getline(ls, sigma))
      throw IoError(cat("malformed manifest row in '", path, "': ", line));
    r.sigma = std::stod(sigma);
    rows.push_back(std::move(r));
  }
  return rows;
}

// Writes a corpus as clean/ noisy/ masks/ PNG triples plus manifest.csv.
template <class S>
void write_corpus(const std::string& dir, const std::vector<SampleTriplet<S>>& corpus) {
  namespace fs = std::filesystem;
  for (const char* sub : {"clean", "noisy", "masks"}) fs::create_directories(fs::path(dir) / sub);
  std::vector<ManifestRow> rows;
  for (const auto& t : corpus) {
    ManifestRow r;
    r.clean_path = (fs::path(dir) / "clean" / (t.id + ".png")).string();
    r.noisy_path = (fs::path(dir) / "noisy" / (t.id + ".png")).string();
    r.mask_path = (fs::path(dir) / "masks" / (t.id + ".png")).string();
    r.sigma = t.sigma;
    save_png(r.clean_path, t.clean);
    save_png(r.noisy_path, t.noisy);
    save_png(r.mask_path, t.mask);
    rows.push_back(std::move(r));
  }
  write_manifest((fs::path(dir) / "manifest.csv").string(), rows);
}

// Loads triplets from a manifest directory. Images are resized to
// target_size; the stored noisy image is used as-is when present.
template <class S>
std::vector<SampleTriplet<S>> load_corpus(const std::string& dir, int target_size) {
  namespace fs = std::filesystem;
  const auto rows = read_manifest((fs::path(dir) / "manifest.csv").string());
  std::vector<SampleTriplet<S>> corpus;
  corpus.reserve(rows.size());
  for (const auto& r : rows) {
    SampleTriplet<S> t = load_pair<S>(r.clean_path, r.mask_path, target_size);
    t.sigma = r.sigma;
    if (!r.noisy_path.empty())
      t.noisy = to_rgb(resize_bilinear(load_image<S>(r.noisy_path), target_size, target_size));
    corpus.push_back(std::move(t));
  }
  return corpus;
}

}  // namespace dsal
