#pragma once

#include <cmath>

#include "dsal/net/params.hpp"

namespace dsal {

// Adam with bias correction. Moment buffers mirror NetworkParams so they
// serialize through the same path as the weights.
template <class S>
struct AdamState {
  NetworkParams<S> m, v;
  std::int64_t t = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  void init(const NetworkSpec& spec) {
    m = zero_params<S>(spec);
    v = zero_params<S>(spec);
    t = 0;
  }

  void step(NetworkParams<S>& params, const NetworkParams<S>& grads, double lr) {
    ++t;
    const S b1 = S(beta1), b2 = S(beta2);
    const S corr1 = S(1) - S(std::pow(beta1, double(t)));
    const S corr2 = S(1) - S(std::pow(beta2, double(t)));
    const S alpha = S(lr) / corr1;
    for (std::size_t i = 0; i < params.layers.size(); ++i) {
      auto& mw = m.layers[i].weight;
      auto& vw = v.layers[i].weight;
      const auto& gw = grads.layers[i].weight;
      mw = b1 * mw + (S(1) - b1) * gw;
      vw = b2 * vw.array().matrix() + (S(1) - b2) * gw.array().square().matrix();
      params.layers[i].weight.array() -=
          alpha * mw.array() / ((vw.array() / corr2).sqrt() + S(eps));

      auto& mb = m.layers[i].bias;
      auto& vb = v.layers[i].bias;
      const auto& gb = grads.layers[i].bias;
      mb = b1 * mb + (S(1) - b1) * gb;
      vb = b2 * vb.array().matrix() + (S(1) - b2) * gb.array().square().matrix();
      params.layers[i].bias.array() -=
          alpha * mb.array() / ((vb.array() / corr2).sqrt() + S(eps));
    }
  }
};

}  // namespace dsal
