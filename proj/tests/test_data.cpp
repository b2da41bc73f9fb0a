#include <doctest.h>

#include <cstring>
#include <filesystem>

#include "dsal/data.hpp"

using namespace dsal;
namespace fs = std::filesystem;

TEST_CASE("corrupt_gaussian is identity at sigma 0") {
  Rng rng(1);
  const auto img = random_tensor<float>(32, 32, 3, rng);
  const auto out = corrupt_gaussian(img, {0.0, 99});
  CHECK(bitwise_equal(img, out));
}

TEST_CASE("corrupt_gaussian is deterministic per seed") {
  Rng rng(2);
  const auto img = random_tensor<float>(16, 16, 3, rng);
  const auto a = corrupt_gaussian(img, {30.0, 7});
  const auto b = corrupt_gaussian(img, {30.0, 7});
  const auto c = corrupt_gaussian(img, {30.0, 8});
  CHECK(bitwise_equal(a, b));
  CHECK_FALSE(bitwise_equal(a, c));
}

TEST_CASE("corrupt_gaussian rejects negative sigma") {
  Tensor<float> img(16, 16, 3);
  CHECK_THROWS_AS(corrupt_gaussian(img, {-1.0, 0}), ValidationError);
}

// Empirical-moment oracle: the unclamped noise field on a 256x256 constant
// image at sigma=50 must have sample std within 10% of 50/255.
TEST_CASE("noise field std matches sigma/255") {
  const auto field = gaussian_noise_field<double>(256, 256, 1, {50.0, 123});
  const double mean = field.array().mean();
  const double var = (field.array() - mean).square().mean();
  const double target = 50.0 / 255.0;
  CHECK(std::sqrt(var) == doctest::Approx(target).epsilon(0.10));
  CHECK(std::abs(mean) < 0.01);
}

TEST_CASE("corruption stays in [0,1] and grows with sigma") {
  Rng rng(5);
  const auto img = random_tensor<double>(64, 64, 3, rng);
  double prev_mad = 0.0;
  for (double sigma : {10.0, 30.0, 50.0, 80.0}) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &sigma, sizeof(sigma));
    const auto out = corrupt_gaussian(img, {sigma, mix64(77, bits)});
    CHECK((out.array() >= 0.0).all());
    CHECK((out.array() <= 1.0).all());
    const double mad = (out.array() - img.array()).abs().mean();
    CHECK(mad > prev_mad);
    prev_mad = mad;
  }
}

TEST_CASE("shapes corpus basics") {
  const auto one = make_shapes_corpus<float>(1, 64, {0.0}, 7);
  REQUIRE(one.size() == 1);
  const auto& t = one[0];
  CHECK(t.clean.height() == 64);
  CHECK(t.clean.channels() == 3);
  CHECK(t.mask.channels() == 1);
  CHECK(is_binary(t.mask));
  const double fg = double(t.mask.array().sum());
  CHECK(fg > 0);
  CHECK(fg < 64.0 * 64.0);
  CHECK(bitwise_equal(t.clean, t.noisy));  // sigma list was {0}

  SUBCASE("deterministic under the same arguments") {
    const auto again = make_shapes_corpus<float>(1, 64, {0.0}, 7);
    CHECK(bitwise_equal(again[0].clean, t.clean));
    CHECK(bitwise_equal(again[0].mask, t.mask));
  }
  SUBCASE("validation") {
    CHECK_THROWS_AS(make_shapes_corpus<float>(1, 60, {0.0}, 7), ValidationError);
    CHECK_THROWS_AS(make_shapes_corpus<float>(0, 64, {0.0}, 7), ValidationError);
    CHECK_THROWS_AS(make_shapes_corpus<float>(1, 64, {}, 7), ValidationError);
  }
}

// Counting oracle over a 500-image corpus: mean foreground fraction must be
// comfortably inside (0.05, 0.5).
TEST_CASE("shapes corpus foreground fraction") {
  const auto corpus = make_shapes_corpus<float>(500, 64, {0.0}, 11);
  double total = 0.0;
  for (const auto& t : corpus) total += double(t.mask.array().sum()) / double(t.mask.size());
  const double mean_fraction = total / double(corpus.size());
  CHECK(mean_fraction > 0.05);
  CHECK(mean_fraction < 0.5);
}

TEST_CASE("shapes corpus draws sigma from the list") {
  const auto corpus = make_shapes_corpus<float>(40, 32, {10, 30, 50, 80}, 3);
  for (const auto& t : corpus) {
    const bool known = t.sigma == 10 || t.sigma == 30 || t.sigma == 50 || t.sigma == 80;
    CHECK(known);
    CHECK((t.noisy.array() >= 0.f).all());
    CHECK(t.clean.same_shape(t.noisy));
  }
}

TEST_CASE("load_pair and mask binarization oracle") {
  const fs::path dir = fs::temp_directory_path() / "dsal_test_data";
  fs::create_directories(dir);

  // mask with three gray levels; 128/255 > 0.5 so it must binarize to 1
  RawImage mask{4, 4, 1, std::vector<std::uint8_t>(16, 0)};
  mask.pixels[1] = 128;
  mask.pixels[2] = 255;
  mask.pixels[5] = 255;
  save_raw_png((dir / "mask.png").string(), mask);

  Rng rng(9);
  save_png((dir / "img.png").string(), random_tensor<float>(4, 4, 3, rng));

  // undersized inputs are resized to the requested (multiple of 16) size
  const auto t = load_pair<float>((dir / "img.png").string(), (dir / "mask.png").string(), 16);
  CHECK(t.clean.height() == 16);
  CHECK(t.clean.width() == 16);
  CHECK(t.mask.height() == 16);
  CHECK(is_binary(t.mask));

  SUBCASE("per-pixel threshold on identity-size load") {
    RawImage big{16, 16, 1, std::vector<std::uint8_t>(256, 0)};
    big.pixels[0] = 0;
    big.pixels[1] = 128;
    big.pixels[2] = 255;
    save_raw_png((dir / "m16.png").string(), big);
    save_png((dir / "i16.png").string(), Tensor<float>(16, 16, 3));
    const auto u = load_pair<float>((dir / "i16.png").string(), (dir / "m16.png").string(), 16);
    CHECK(u.mask(0, 0, 0) == 0.f);
    CHECK(u.mask(0, 1, 0) == 1.f);  // 128/255 ~ 0.502 >= 0.5
    CHECK(u.mask(0, 2, 0) == 1.f);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(load_pair<float>((dir / "nope.png").string(), (dir / "mask.png").string(), 16),
                    IoError);
    CHECK_THROWS_AS(load_pair<float>((dir / "img.png").string(), (dir / "mask.png").string(), 15),
                    ValidationError);
  }
}

TEST_CASE("binary masks survive a save/load round-trip exactly") {
  const fs::path dir = fs::temp_directory_path() / "dsal_test_data";
  fs::create_directories(dir);
  const auto corpus = make_shapes_corpus<float>(3, 32, {0.0}, 21);
  for (const auto& t : corpus) {
    const auto path = (dir / (t.id + "_mask.png")).string();
    save_png(path, t.mask);
    save_png((dir / (t.id + "_img.png")).string(), t.clean);
    const auto back = load_pair<float>((dir / (t.id + "_img.png")).string(), path, 32);
    CHECK(bitwise_equal(back.mask, t.mask));
  }
}

TEST_CASE("manifest round-trip and corpus writer") {
  const fs::path dir = fs::temp_directory_path() / "dsal_test_corpus";
  fs::remove_all(dir);
  const auto corpus = make_shapes_corpus<float>(4, 32, {0.0, 50.0}, 13);
  write_corpus(dir.string(), corpus);
  CHECK(fs::exists(dir / "manifest.csv"));
  const auto rows = read_manifest((dir / "manifest.csv").string());
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].sigma == corpus[0].sigma);

  const auto loaded = load_corpus<float>(dir.string(), 32);
  REQUIRE(loaded.size() == 4);
  CHECK(bitwise_equal(loaded[1].mask, corpus[1].mask));
  // 8-bit quantization bounds the clean image round-trip error
  CHECK(max_abs_diff(loaded[2].clean, corpus[2].clean) <= 0.5f / 255.f + 1e-6f);
}
