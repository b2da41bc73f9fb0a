#include <doctest.h>

#include "dsal/rng.hpp"
#include "dsal/tensor.hpp"

using namespace dsal;

TEST_CASE("tensor layout is channel-planar") {
  Tensor<float> t(2, 3, 2);
  t(0, 0, 0) = 1.f;
  t(1, 2, 0) = 2.f;
  t(0, 1, 1) = 3.f;
  CHECK(t.data()[0] == 1.f);
  CHECK(t.data()[5] == 2.f);       // (ch0, y1, x2)
  CHECK(t.data()[6 + 1] == 3.f);   // plane 1 starts at h*w
  CHECK(t.plane(0)(1, 2) == 2.f);
  CHECK(t.plane(1)(0, 1) == 3.f);
  CHECK(t.as_matrix()(1, 1) == 3.f);
}

TEST_CASE("clamp01 and is_binary") {
  Tensor<double> t(1, 4, 1);
  t(0, 0, 0) = -0.5;
  t(0, 1, 0) = 0.25;
  t(0, 2, 0) = 1.5;
  t(0, 3, 0) = 1.0;
  const auto c = clamp01(t);
  CHECK(c(0, 0, 0) == 0.0);
  CHECK(c(0, 1, 0) == 0.25);
  CHECK(c(0, 2, 0) == 1.0);
  CHECK_FALSE(is_binary(c));
  Tensor<double> b(1, 2, 1);
  b(0, 1, 0) = 1.0;
  CHECK(is_binary(b));
}

TEST_CASE("concat and split round-trip") {
  Rng rng(3);
  const auto a = random_tensor<float>(4, 4, 1, rng);
  const auto b = random_tensor<float>(4, 4, 3, rng);
  const auto joined = concat_channels(a, b);
  CHECK(joined.channels() == 4);
  const auto [a2, b2] = split_channels(joined, 1);
  CHECK(bitwise_equal(a, a2));
  CHECK(bitwise_equal(b, b2));
  CHECK_THROWS_AS(concat_channels(a, random_tensor<float>(5, 4, 1, rng)), ValidationError);
}

TEST_CASE("rng determinism and state round-trip") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());
  const std::string state = a.save_state();
  const double next = a.normal();
  Rng c;
  c.load_state(state);
  CHECK(c.normal() == next);
}

TEST_CASE("rng normal moments") {
  Rng rng(7);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double v = rng.normal();
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}
