#pragma once

#include <cstring>
#include <type_traits>
#include <vector>

#include "dsal/net/params.hpp"
#include "dsal/net/spec.hpp"
#include "dsal/tensor.hpp"

namespace dsal {

inline constexpr double kProbEps = 1e-7;

// Per-sample forward cache: every layer's post-activation output plus pool
// argmax indices, enough to run backward without re-doing the forward pass.
template <class S>
struct Workspace {
  Tensor<S> input;
  std::vector<Tensor<S>> out;
  std::vector<std::vector<std::int32_t>> pool_argmax;
  MatRM<S> col;  // im2col scratch, reused across layers
};

namespace detail {

template <class S>
void apply_activation(Tensor<S>& t, Act act) {
  switch (act) {
    case Act::None:
      break;
    case Act::Relu:
      t.array() = t.array().max(S(0));
      break;
    case Act::Tanh:
      t.array() = t.array().tanh();
      break;
    case Act::Sigmoid:
      t.array() = S(1) / (S(1) + (-t.array()).exp());
      break;
  }
}

// d(pre-activation) from d(post-activation), using the cached output.
template <class S>
void activation_backward(Tensor<S>& d, const Tensor<S>& out, Act act) {
  switch (act) {
    case Act::None:
      break;
    case Act::Relu:
      d.array() *= (out.array() > S(0)).template cast<S>();
      break;
    case Act::Tanh:
      d.array() *= S(1) - out.array().square();
      break;
    case Act::Sigmoid:
      d.array() *= out.array() * (S(1) - out.array());
      break;
  }
}

// col is (cin*kh*kw) x (oh*ow); row (ci,ky,kx) holds the input plane ci
// shifted by (ky-p, kx-p). Stride-1 rows are contiguous runs per output row.
template <class S>
void im2col(const Tensor<S>& in, const LayerSpec& l, int oh, int ow, MatRM<S>& col) {
  const int kh = l.kh, kw = l.kw, s = l.stride, p = l.padding;
  col.resize(long(in.channels()) * kh * kw, long(oh) * ow);
  for (int ci = 0; ci < in.channels(); ++ci) {
    const S* plane = in.data() + std::int64_t(ci) * in.height() * in.width();
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        S* dst = col.row((long(ci) * kh + ky) * kw + kx).data();
        if (s == 1) {
          for (int oy = 0; oy < oh; ++oy, dst += ow) {
            const int iy = oy + ky - p;
            if (iy < 0 || iy >= in.height()) {
              std::memset(dst, 0, sizeof(S) * std::size_t(ow));
              continue;
            }
            const int x0 = kx - p;  // input x of output column 0
            const int lo = std::max(0, -x0);
            const int hi = std::min(ow, in.width() - x0);
            if (lo > 0) std::memset(dst, 0, sizeof(S) * std::size_t(lo));
            if (hi > lo) std::memcpy(dst + lo, plane + std::int64_t(iy) * in.width() + x0 + lo,
                                     sizeof(S) * std::size_t(hi - lo));
            if (hi < ow) std::memset(dst + std::max(hi, 0), 0,
                                     sizeof(S) * std::size_t(ow - std::max(hi, 0)));
          }
        } else {
          for (int oy = 0; oy < oh; ++oy, dst += ow) {
            const int iy = oy * s + ky - p;
            for (int ox = 0; ox < ow; ++ox) {
              const int ix = ox * s + kx - p;
              dst[ox] = (iy < 0 || iy >= in.height() || ix < 0 || ix >= in.width())
                            ? S(0)
                            : plane[std::int64_t(iy) * in.width() + ix];
            }
          }
        }
      }
    }
  }
}

// Scatter-add of the column gradient back onto the input tensor.
template <class S>
void col2im_add(const MatRM<S>& dcol, const LayerSpec& l, int oh, int ow, Tensor<S>& din) {
  const int kh = l.kh, kw = l.kw, s = l.stride, p = l.padding;
  for (int ci = 0; ci < din.channels(); ++ci) {
    S* plane = din.data() + std::int64_t(ci) * din.height() * din.width();
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        const S* src = dcol.row((long(ci) * kh + ky) * kw + kx).data();
        for (int oy = 0; oy < oh; ++oy, src += ow) {
          const int iy = oy * s + ky - p;
          if (iy < 0 || iy >= din.height()) continue;
          S* dst = plane + std::int64_t(iy) * din.width();
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * s + kx - p;
            if (ix >= 0 && ix < din.width()) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace detail

// Deterministic forward pass; caches everything backward() needs in ws.
// Generators return a same-size tensor, discriminators a 1x1x1 tensor.
template <class S>
const Tensor<S>& forward(const NetworkSpec& spec, const NetworkParams<S>& params,
                         const Tensor<S>& input, Workspace<S>& ws) {
  require(input.channels() == spec.input_channels,
          cat(spec.name, ": expected ", spec.input_channels, " input channels, got ",
              input.channels()));
  const std::size_t n = spec.layers.size();
  ws.input = input;
  ws.out.resize(n);
  ws.pool_argmax.assign(n, {});

  const Tensor<S>* cur = &ws.input;
  std::size_t pi = 0;  // parametric layer index
  for (std::size_t i = 0; i < n; ++i) {
    const LayerSpec& l = spec.layers[i];
    Tensor<S>& out = ws.out[i];
    switch (l.kind) {
      case LayerKind::Conv: {
        const int oh = (cur->height() + 2 * l.padding - l.kh) / l.stride + 1;
        const int ow = (cur->width() + 2 * l.padding - l.kw) / l.stride + 1;
        require(oh > 0 && ow > 0, cat(spec.name, "/", l.name, ": conv cannot consume ",
                                      cur->height(), "x", cur->width()));
        const auto& w = params.layers[pi].weight;
        require(w.cols() == long(cur->channels()) * l.kh * l.kw,
                cat(spec.name, "/", l.name, ": expected ", w.cols() / (l.kh * l.kw),
                    " input channels, got ", cur->channels()));
        detail::im2col(*cur, l, oh, ow, ws.col);
        out = Tensor<S>(oh, ow, l.out_channels);
        auto out_mat = out.as_matrix();
        out_mat.noalias() = w * ws.col;
        out_mat.colwise() += params.layers[pi].bias;
        detail::apply_activation(out, l.activation);
        ++pi;
        break;
      }
      case LayerKind::Pool: {
        require(cur->height() % 2 == 0 && cur->width() % 2 == 0,
                cat(spec.name, "/", l.name, ": pool needs even spatial dims, got ",
                    cur->height(), "x", cur->width()));
        const int oh = cur->height() / 2, ow = cur->width() / 2;
        out = Tensor<S>(oh, ow, cur->channels());
        auto& arg = ws.pool_argmax[i];
        arg.resize(std::size_t(out.size()));
        std::int64_t o = 0;
        for (int ci = 0; ci < cur->channels(); ++ci) {
          const S* plane = cur->data() + std::int64_t(ci) * cur->height() * cur->width();
          for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox, ++o) {
              const std::int64_t base =
                  std::int64_t(ci) * cur->height() * cur->width() + std::int64_t(2 * oy) * cur->width() + 2 * ox;
              std::int64_t best = base;
              S bv = plane[std::int64_t(2 * oy) * cur->width() + 2 * ox];
              for (auto [dy, dx] : {std::pair{0, 1}, {1, 0}, {1, 1}}) {
                const std::int64_t idx2 = base + std::int64_t(dy) * cur->width() + dx;
                const S v = cur->data()[idx2];
                if (v > bv) {
                  bv = v;
                  best = idx2;
                }
              }
              out.data()[o] = bv;
              arg[std::size_t(o)] = std::int32_t(best);
            }
        }
        break;
      }
      case LayerKind::Upsample: {
        out = Tensor<S>(cur->height() * 2, cur->width() * 2, cur->channels());
        for (int ci = 0; ci < cur->channels(); ++ci) {
          auto src = cur->plane(ci);
          auto dst = out.plane(ci);
          for (int y = 0; y < out.height(); ++y)
            for (int x = 0; x < out.width(); ++x) dst(y, x) = src(y / 2, x / 2);
        }
        break;
      }
      case LayerKind::FullyConnected: {
        const auto& w = params.layers[pi].weight;
        require(w.cols() == cur->size(),
                cat(spec.name, "/", l.name, ": expected ", w.cols(), " input features, got ",
                    cur->size()));
        out = Tensor<S>(1, 1, l.out_channels);
        Eigen::Map<const VecX<S>> xv(cur->data(), cur->size());
        Eigen::Map<VecX<S>> ov(out.data(), out.size());
        ov.noalias() = w * xv + params.layers[pi].bias;
        detail::apply_activation(out, l.activation);
        ++pi;
        break;
      }
      case LayerKind::Activation: {
        out = *cur;
        detail::apply_activation(out, l.activation);
        break;
      }
      case LayerKind::SkipAdd: {
        require(l.skip_from >= 0 && l.skip_from < int(i),
                cat(spec.name, "/", l.name, ": skip_from ", l.skip_from, " out of range"));
        const Tensor<S>& src = ws.out[std::size_t(l.skip_from)];
        require(src.same_shape(*cur), cat(spec.name, "/", l.name, ": skip source shape mismatch"));
        out = *cur;
        out.array() += src.array();
        break;
      }
    }
    cur = &out;
  }
  return *cur;
}

// Backpropagates d(loss)/d(output) through the cached forward pass. Returns
// d(loss)/d(input); accumulates parameter gradients into *grads when given
// (grads must be zero_params-shaped). Pure with respect to params.
template <class S>
Tensor<S> backward(const NetworkSpec& spec, const NetworkParams<S>& params,
                   Workspace<S>& ws, const Tensor<S>& dout,
                   std::type_identity_t<NetworkParams<S>>* grads = nullptr) {
  const std::size_t n = spec.layers.size();
  require(ws.out.size() == n, "backward: workspace does not match spec (run forward first)");
  require(dout.same_shape(ws.out.back()), cat(spec.name, ": dout shape mismatch"));

  std::vector<int> pidx(n, -1);
  {
    int pi = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (spec.layers[i].has_params()) pidx[i] = pi++;
  }

  // d[i] accumulates gradients flowing into layer i's output; consumers of
  // that output (layer i+1 and any skip_add) all run before layer i.
  std::vector<Tensor<S>> d(n);
  d[n - 1] = dout;
  Tensor<S> dinput;

  auto add_into = [](Tensor<S>& acc, const Tensor<S>& g, const Tensor<S>& like) {
    if (acc.empty()) {
      acc = Tensor<S>(like.height(), like.width(), like.channels());
    }
    acc.array() += g.array();
  };

  for (std::size_t ri = n; ri-- > 0;) {
    const LayerSpec& l = spec.layers[ri];
    const Tensor<S>& in = ri == 0 ? ws.input : ws.out[ri - 1];
    Tensor<S>& dcur = d[ri];
    if (dcur.empty()) {
      // Unconsumed layer output (cannot happen in a chain, but keeps the
      // walk total for degenerate specs).
      dcur = Tensor<S>(ws.out[ri].height(), ws.out[ri].width(), ws.out[ri].channels());
    }
    Tensor<S> din;
    switch (l.kind) {
      case LayerKind::Conv: {
        detail::activation_backward(dcur, ws.out[ri], l.activation);
        const int oh = ws.out[ri].height(), ow = ws.out[ri].width();
        auto dmat = dcur.as_matrix();
        if (grads) {
          detail::im2col(in, l, oh, ow, ws.col);
          auto& g = grads->layers[std::size_t(pidx[ri])];
          g.weight.noalias() += dmat * ws.col.transpose();
          g.bias.noalias() += dmat.rowwise().sum();
        }
        MatRM<S> dcol = params.layers[std::size_t(pidx[ri])].weight.transpose() * dmat;
        din = Tensor<S>(in.height(), in.width(), in.channels());
        detail::col2im_add(dcol, l, oh, ow, din);
        break;
      }
      case LayerKind::Pool: {
        din = Tensor<S>(in.height(), in.width(), in.channels());
        const auto& arg = ws.pool_argmax[ri];
        for (std::int64_t o = 0; o < dcur.size(); ++o)
          din.data()[arg[std::size_t(o)]] += dcur.data()[o];
        break;
      }
      case LayerKind::Upsample: {
        din = Tensor<S>(in.height(), in.width(), in.channels());
        for (int ci = 0; ci < in.channels(); ++ci) {
          auto dsrc = dcur.plane(ci);
          auto ddst = din.plane(ci);
          for (int y = 0; y < dcur.height(); ++y)
            for (int x = 0; x < dcur.width(); ++x) ddst(y / 2, x / 2) += dsrc(y, x);
        }
        break;
      }
      case LayerKind::FullyConnected: {
        detail::activation_backward(dcur, ws.out[ri], l.activation);
        Eigen::Map<const VecX<S>> dv(dcur.data(), dcur.size());
        Eigen::Map<const VecX<S>> xv(in.data(), in.size());
        if (grads) {
          auto& g = grads->layers[std::size_t(pidx[ri])];
          g.weight.noalias() += dv * xv.transpose();
          g.bias.noalias() += dv;
        }
        din = Tensor<S>(in.height(), in.width(), in.channels());
        Eigen::Map<VecX<S>> din_v(din.data(), din.size());
        din_v.noalias() = params.layers[std::size_t(pidx[ri])].weight.transpose() * dv;
        break;
      }
      case LayerKind::Activation: {
        din = dcur;
        detail::activation_backward(din, ws.out[ri], l.activation);
        break;
      }
      case LayerKind::SkipAdd: {
        din = dcur;
        add_into(d[std::size_t(l.skip_from)], dcur, ws.out[std::size_t(l.skip_from)]);
        break;
      }
    }
    if (ri == 0) {
      dinput = std::move(din);
    } else {
      add_into(d[ri - 1], din, ws.out[ri - 1]);
    }
    dcur = Tensor<S>();  // release
  }
  return dinput;
}

// Scalar view of a discriminator output, clamped strictly inside (0,1).
template <class S>
S discriminator_score(const Tensor<S>& out) {
  require(out.size() == 1, cat("discriminator_score: expected scalar output, got ",
                               out.height(), "x", out.width(), "x", out.channels()));
  return std::min(S(1) - S(kProbEps), std::max(S(kProbEps), out.data()[0]));
}

}  // namespace dsal
