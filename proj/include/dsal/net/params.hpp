#pragma once

#include <cmath>
#include <vector>

#include "dsal/net/spec.hpp"
#include "dsal/rng.hpp"
#include "dsal/tensor.hpp"

namespace dsal {

// Learned weights for one spec. Entry i corresponds to the i-th parametric
// layer (conv or fc) in spec order; the same container shape doubles as the
// gradient and optimizer-moment storage.
template <class S>
struct NetworkParams {
  struct Layer {
    MatRM<S> weight;  // out x fan_in
    VecX<S> bias;     // out
  };
  std::vector<Layer> layers;
  std::uint64_t init_seed = 0;

  bool all_finite() const {
    for (const auto& l : layers)
      if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
    return true;
  }

  void set_zero() {
    for (auto& l : layers) {
      l.weight.setZero();
      l.bias.setZero();
    }
  }

  long count() const {
    long n = 0;
    for (const auto& l : layers) n += long(l.weight.size()) + long(l.bias.size());
    return n;
  }
};

template <class S>
NetworkParams<S> zero_params(const NetworkSpec& spec) {
  NetworkParams<S> p;
  for (const auto& ps : param_shapes(spec)) {
    typename NetworkParams<S>::Layer l;
    l.weight = MatRM<S>::Zero(ps.rows, ps.cols);
    l.bias = VecX<S>::Zero(ps.rows);
    p.layers.push_back(std::move(l));
  }
  return p;
}

// Fan-in-scaled Gaussian weights (gain 2 for relu layers, 1 otherwise), zero
// biases. Each layer draws from its own stream so partial rebuilds reproduce.
template <class S>
NetworkParams<S> init_params(const NetworkSpec& spec, std::uint64_t seed) {
  NetworkParams<S> p = zero_params<S>(spec);
  p.init_seed = seed;
  const auto shapes = param_shapes(spec);
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    Rng rng(mix64(seed, std::uint64_t(i)));
    const double gain = shapes[i].activation == Act::Relu ? 2.0 : 1.0;
    const double stddev = std::sqrt(gain / double(shapes[i].fan_in));
    auto& w = p.layers[i].weight;
    for (long r = 0; r < w.rows(); ++r)
      for (long c = 0; c < w.cols(); ++c) w(r, c) = S(stddev * rng.normal());
  }
  return p;
}

template <class S>
bool bitwise_equal(const NetworkParams<S>& a, const NetworkParams<S>& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    if (a.layers[i].weight.rows() != b.layers[i].weight.rows() ||
        a.layers[i].weight.cols() != b.layers[i].weight.cols())
      return false;
    if ((a.layers[i].weight.array() != b.layers[i].weight.array()).any()) return false;
    if ((a.layers[i].bias.array() != b.layers[i].bias.array()).any()) return false;
  }
  return true;
}

// grads += other
template <class S>
void accumulate(NetworkParams<S>& grads, const NetworkParams<S>& other) {
  for (std::size_t i = 0; i < grads.layers.size(); ++i) {
    grads.layers[i].weight += other.layers[i].weight;
    grads.layers[i].bias += other.layers[i].bias;
  }
}

template <class S>
double global_norm(const NetworkParams<S>& grads) {
  double sq = 0.0;
  for (const auto& l : grads.layers) {
    sq += double(l.weight.squaredNorm());
    sq += double(l.bias.squaredNorm());
  }
  return std::sqrt(sq);
}

template <class S>
void scale(NetworkParams<S>& grads, S factor) {
  for (auto& l : grads.layers) {
    l.weight *= factor;
    l.bias *= factor;
  }
}

// Clips to the given global norm; no-op when already within it.
template <class S>
void clip_global_norm(NetworkParams<S>& grads, double max_norm) {
  if (max_norm <= 0.0) return;
  const double n = global_norm(grads);
  if (n > max_norm) scale(grads, S(max_norm / n));
}

}  // namespace dsal
