#pragma once

#include <cmath>
#include <type_traits>
#include <vector>

#include "dsal/tensor.hpp"

namespace dsal {

// Weights of the adversarial and cyclic terms. Defaults put each weighted
// term at the same order of magnitude as its content/BCE partner at
// initialization on the shapes corpus.
struct LossWeights {
  double w1 = 1e-3;   // adversarial weight, denoising objective
  double w2 = 5e-3;   // adversarial weight, SOD objective
  double w3 = 1e-1;   // cyclic weight, SOD objective
  double eps = 1e-7;  // probability clamp before every log

  void validate() const {
    require(std::isfinite(w1) && std::isfinite(w2) && std::isfinite(w3),
            "LossWeights: non-finite weight");
    require(w1 >= 0 && w2 >= 0 && w3 >= 0, "LossWeights: negative weight");
    require(eps > 0 && eps < 1e-3, cat("LossWeights: eps must be in (0, 1e-3), got ", eps));
  }
};

// One training step's named scalars.
struct LossReport {
  double content = 0, adv_denoise = 0, total_denoise = 0;
  double bce = 0, adv_sod = 0, cyclic = 0, total_sod = 0;
  double d1 = 0, d2 = 0;
  int batch_size = 0;

  bool all_finite() const {
    for (double v : {content, adv_denoise, total_denoise, bce, adv_sod, cyclic, total_sod, d1, d2})
      if (!std::isfinite(v)) return false;
    return true;
  }
};

// totals must equal their weighted component sums (checked every step).
inline bool totals_consistent(const LossReport& r, const LossWeights& w, double rtol = 1e-6) {
  auto close = [&](double got, double want) {
    return std::abs(got - want) <= rtol * std::max({1.0, std::abs(got), std::abs(want)});
  };
  return close(r.total_denoise, r.content + w.w1 * r.adv_denoise) &&
         close(r.total_sod, r.bce + w.w2 * r.adv_sod + w.w3 * r.cyclic);
}

namespace detail {
template <class S>
S clamp_prob(S v, double eps) {
  return std::min(S(1.0 - eps), std::max(S(eps), v));
}

template <class S>
void check_batch_shapes(const std::vector<Tensor<S>>& a, const std::vector<Tensor<S>>& b,
                        const char* who) {
  require(a.size() == b.size() && !a.empty(), cat(who, ": batch size mismatch or empty batch"));
  for (std::size_t i = 0; i < a.size(); ++i)
    require(a[i].same_shape(b[i]), cat(who, ": shape mismatch at batch index ", i));
}

// Batch mean of the per-sample L2 norm of the difference (the printed norm
// form), or of the per-pixel mean squared difference when squared is set.
// Gradients with respect to `a` go to *grad_a, their negations to *grad_b.
template <class S>
S l2_difference_loss(const std::vector<Tensor<S>>& a, const std::vector<Tensor<S>>& b,
                     bool squared, const char* who,
                     std::type_identity_t<std::vector<Tensor<S>>>* grad_a,
                     std::type_identity_t<std::vector<Tensor<S>>>* grad_b) {
  check_batch_shapes(a, b, who);
  const S n = S(a.size());
  if (grad_a) grad_a->assign(a.size(), Tensor<S>());
  if (grad_b) grad_b->assign(a.size(), Tensor<S>());
  S total = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    Tensor<S> diff = a[i];
    diff.array() -= b[i].array();
    if (squared) {
      const S p = S(diff.size());
      total += diff.array().square().sum() / (n * p);
      if (grad_a || grad_b) {
        diff.array() *= S(2) / (n * p);
        if (grad_a) (*grad_a)[i] = diff;
        if (grad_b) {
          diff.array() = -diff.array();
          (*grad_b)[i] = std::move(diff);
        }
      }
    } else {
      const S norm = std::sqrt(diff.array().square().sum());
      total += norm / n;
      if (grad_a || grad_b) {
        // Subgradient 0 at zero difference.
        diff.array() *= norm > S(0) ? S(1) / (n * norm) : S(0);
        if (grad_a) (*grad_a)[i] = diff;
        if (grad_b) {
          diff.array() = -diff.array();
          (*grad_b)[i] = std::move(diff);
        }
      }
    }
  }
  return total;
}
}  // namespace detail

// Content loss of the denoising generator: batch mean of ||pred - target||_2.
template <class S>
S denoise_content_loss(const std::vector<Tensor<S>>& pred, const std::vector<Tensor<S>>& target,
                       bool l2_squared = false,
                       std::type_identity_t<std::vector<Tensor<S>>>* grad_pred = nullptr) {
  return detail::l2_difference_loss(pred, target, l2_squared, "denoise_content_loss", grad_pred,
                                    nullptr);
}

// Cyclic consistency: batch mean of ||reconstructed - denoised||_2.
template <class S>
S cycle_loss(const std::vector<Tensor<S>>& reconstructed, const std::vector<Tensor<S>>& denoised,
             bool l2_squared = false,
             std::type_identity_t<std::vector<Tensor<S>>>* grad_reconstructed = nullptr,
             std::type_identity_t<std::vector<Tensor<S>>>* grad_denoised = nullptr) {
  return detail::l2_difference_loss(reconstructed, denoised, l2_squared, "cycle_loss",
                                    grad_reconstructed, grad_denoised);
}

// Non-saturating generator loss: mean of -log D(fake).
template <class S>
S adversarial_gen_loss(const std::vector<S>& d_scores, double eps = 1e-7,
                       std::type_identity_t<std::vector<S>>* grad_scores = nullptr) {
  require(!d_scores.empty(), "adversarial_gen_loss: empty batch");
  const S n = S(d_scores.size());
  if (grad_scores) grad_scores->assign(d_scores.size(), S(0));
  S total = 0;
  for (std::size_t i = 0; i < d_scores.size(); ++i) {
    const S s = detail::clamp_prob(d_scores[i], eps);
    total += -std::log(s) / n;
    if (grad_scores && d_scores[i] > S(eps) && d_scores[i] < S(1.0 - eps))
      (*grad_scores)[i] = S(-1) / (n * s);
  }
  return total;
}

// Pixel-and-batch mean binary cross entropy against a binary target map.
template <class S>
S saliency_bce_loss(const std::vector<Tensor<S>>& pred, const std::vector<Tensor<S>>& target,
                    double eps = 1e-7,
                    std::type_identity_t<std::vector<Tensor<S>>>* grad_pred = nullptr) {
  detail::check_batch_shapes(pred, target, "saliency_bce_loss");
  for (std::size_t i = 0; i < target.size(); ++i)
    require(is_binary(target[i]),
            cat("saliency_bce_loss: non-binary target at batch index ", i));
  const S n = S(pred.size());
  if (grad_pred) grad_pred->assign(pred.size(), Tensor<S>());
  S total = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const S p_count = S(pred[i].size());
    const S scale = S(1) / (n * p_count);
    Tensor<S> grad;
    if (grad_pred) grad = Tensor<S>(pred[i].height(), pred[i].width(), pred[i].channels());
    for (std::int64_t k = 0; k < pred[i].size(); ++k) {
      const S z = target[i].data()[k];
      const S raw = pred[i].data()[k];
      const S p = detail::clamp_prob(raw, eps);
      total += -(z * std::log(p) + (S(1) - z) * std::log(S(1) - p)) * scale;
      if (grad_pred && raw > S(eps) && raw < S(1.0 - eps))
        grad.data()[k] = (p - z) / (p * (S(1) - p)) * scale;
    }
    if (grad_pred) (*grad_pred)[i] = std::move(grad);
  }
  return total;
}

// Total denoising objective: content + w1 * adversarial.
template <class S>
S total_denoise_loss(S content, S adversarial, const LossWeights& w) {
  return content + S(w.w1) * adversarial;
}

// Total SOD objective: bce + w2 * adversarial + w3 * cyclic.
template <class S>
S total_sod_loss(S bce, S adversarial, S cyclic, const LossWeights& w) {
  return bce + S(w.w2) * adversarial + S(w.w3) * cyclic;
}

// Discriminator objective (the paper trains D1/D2 but never writes their
// loss): mean of -log(real) - log(1 - fake).
template <class S>
S discriminator_loss(const std::vector<S>& real_scores, const std::vector<S>& fake_scores,
                     double eps = 1e-7,
                     std::type_identity_t<std::vector<S>>* grad_real = nullptr,
                     std::type_identity_t<std::vector<S>>* grad_fake = nullptr) {
  require(!real_scores.empty() && real_scores.size() == fake_scores.size(),
          "discriminator_loss: batch size mismatch or empty batch");
  const S n = S(real_scores.size());
  if (grad_real) grad_real->assign(real_scores.size(), S(0));
  if (grad_fake) grad_fake->assign(fake_scores.size(), S(0));
  S total = 0;
  for (std::size_t i = 0; i < real_scores.size(); ++i) {
    const S r = detail::clamp_prob(real_scores[i], eps);
    const S f = detail::clamp_prob(fake_scores[i], eps);
    total += (-std::log(r) - std::log(S(1) - f)) / n;
    if (grad_real && real_scores[i] > S(eps) && real_scores[i] < S(1.0 - eps))
      (*grad_real)[i] = S(-1) / (n * r);
    if (grad_fake && fake_scores[i] > S(eps) && fake_scores[i] < S(1.0 - eps))
      (*grad_fake)[i] = S(1) / (n * (S(1) - f));
  }
  return total;
}

}  // namespace dsal
