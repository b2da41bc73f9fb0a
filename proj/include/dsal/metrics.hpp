#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "dsal/data.hpp"
#include "dsal/net/forward.hpp"
#include "dsal/tensor.hpp"

namespace dsal {

inline constexpr double kFMeasureBetaSq = 0.3;
inline constexpr int kMaxFThresholds = 256;  // t in {0, 1/255, ..., 1}

// Per-dataset, per-sigma metric row (Tables 3/4 shape).
struct MetricsReport {
  std::string dataset;
  double sigma = 0.0;
  int n_images = 0;   // images actually evaluated
  int n_skipped = 0;  // single-class ground truth, skipped not failed
  double ave_f = 0.0;
  double max_f = 0.0;
  double auc = 0.0;
  double mae = 0.0;
};

// Mean absolute per-pixel difference.
template <class S>
double mae(const Tensor<S>& pred, const Tensor<S>& gt) {
  require(pred.same_shape(gt), "mae: shape mismatch");
  double total = 0.0;
  for (std::int64_t i = 0; i < pred.size(); ++i)
    total += std::abs(double(pred.data()[i]) - double(gt.data()[i]));
  return total / double(pred.size());
}

namespace detail {

// F_beta at one threshold (predicted positive = pred >= t); 0 when there are
// no predicted positives or no true positives.
template <class S>
double f_at_threshold(const Tensor<S>& pred, const Tensor<S>& gt, double t) {
  std::int64_t tp = 0, fp = 0, fn = 0;
  for (std::int64_t i = 0; i < pred.size(); ++i) {
    const bool p = double(pred.data()[i]) >= t;
    const bool g = gt.data()[i] != S(0);
    tp += p && g;
    fp += p && !g;
    fn += !p && g;
  }
  if (tp == 0) return 0.0;
  const double precision = double(tp) / double(tp + fp);
  const double recall = double(tp) / double(tp + fn);
  return (1.0 + kFMeasureBetaSq) * precision * recall /
         (kFMeasureBetaSq * precision + recall);
}

}  // namespace detail

struct FMeasures {
  double ave_f = 0.0;  // adaptive threshold min(1, 2*mean(pred))
  double max_f = 0.0;  // best over the 256-threshold sweep
};

template <class S>
FMeasures f_measures(const Tensor<S>& pred, const Tensor<S>& gt) {
  require(pred.same_shape(gt), "f_measures: shape mismatch");
  require((gt.array() != S(0)).any(), "f_measures: ground truth has no positive pixel");
  FMeasures f;
  const double adaptive = std::min(1.0, 2.0 * double(mean(pred)));
  f.ave_f = detail::f_at_threshold(pred, gt, adaptive);
  for (int k = 0; k < kMaxFThresholds; ++k)
    f.max_f = std::max(f.max_f, detail::f_at_threshold(pred, gt, double(k) / 255.0));
  return f;
}

// Pixel-level ROC AUC via the rank statistic, ties handled by midrank.
template <class S>
double auc(const Tensor<S>& pred, const Tensor<S>& gt) {
  require(pred.same_shape(gt), "auc: shape mismatch");
  const std::int64_t n = pred.size();
  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
    return pred.data()[a] < pred.data()[b];
  });
  std::int64_t n_pos = 0;
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && pred.data()[order[j]] == pred.data()[order[i]]) ++j;
    const double midrank = 0.5 * double(i + 1 + j);  // mean of 1-based ranks i+1..j
    for (std::size_t k = i; k < j; ++k)
      if (gt.data()[order[k]] != S(0)) {
        rank_sum_pos += midrank;
        ++n_pos;
      }
    i = j;
  }
  const std::int64_t n_neg = n - n_pos;
  require(n_pos > 0 && n_neg > 0, "auc: ground truth must contain both classes");
  return (rank_sum_pos - 0.5 * double(n_pos) * double(n_pos + 1)) /
         (double(n_pos) * double(n_neg));
}

// Peak signal-to-noise ratio against a [0,1] reference.
template <class S>
double psnr(const Tensor<S>& reference, const Tensor<S>& image) {
  require(reference.same_shape(image), "psnr: shape mismatch");
  double mse = 0.0;
  for (std::int64_t i = 0; i < reference.size(); ++i) {
    const double d = double(reference.data()[i]) - double(image.data()[i]);
    mse += d * d;
  }
  mse /= double(reference.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

// Called per evaluated image; used by the CLI to emit panel figures.
template <class S>
using EvalObserver = std::function<void(const std::string& dataset, double sigma, int index,
                                        const SampleTriplet<S>& sample,
                                        const Tensor<S>& denoised, const Tensor<S>& predicted)>;

// Maps a corrupted image to (denoised image, saliency map).
template <class S>
using Predictor = std::function<std::pair<Tensor<S>, Tensor<S>>(const SampleTriplet<S>& sample,
                                                                const Tensor<S>& noisy)>;

// Corrupts every clean image at each sigma, runs the predictor and averages
// the four metrics. Images whose mask has a single class are skipped and
// counted. Deterministic per seed; rows come out ordered by sigma.
template <class S>
std::vector<MetricsReport> evaluate_with(const Predictor<S>& predictor,
                                         const std::string& dataset_name,
                                         const std::vector<SampleTriplet<S>>& samples,
                                         std::vector<double> sigmas, std::uint64_t seed,
                                         const EvalObserver<S>& observer = {}) {
  require(!samples.empty(), "evaluate_with: empty dataset");
  std::sort(sigmas.begin(), sigmas.end());
  std::vector<MetricsReport> reports;
  for (double sigma : sigmas) {
    MetricsReport r;
    r.dataset = dataset_name;
    r.sigma = sigma;
    std::uint64_t sigma_bits = 0;
    std::memcpy(&sigma_bits, &sigma, sizeof(sigma));
    for (int i = 0; i < int(samples.size()); ++i) {
      const auto& sample = samples[std::size_t(i)];
      const bool has_pos = (sample.mask.array() != S(0)).any();
      const bool has_neg = (sample.mask.array() != S(1)).any();
      if (!has_pos || !has_neg) {
        ++r.n_skipped;
        continue;
      }
      const Tensor<S> noisy =
          corrupt_gaussian(sample.clean, {sigma, mix64(seed, std::uint64_t(i), sigma_bits)});
      const auto [denoised, pred] = predictor(sample, noisy);
      const FMeasures f = f_measures(pred, sample.mask);
      r.ave_f += f.ave_f;
      r.max_f += f.max_f;
      r.auc += auc(pred, sample.mask);
      r.mae += mae(pred, sample.mask);
      ++r.n_images;
      if (observer) observer(dataset_name, sigma, i, sample, denoised, pred);
    }
    if (r.n_images > 0) {
      r.ave_f /= r.n_images;
      r.max_f /= r.n_images;
      r.auc /= r.n_images;
      r.mae /= r.n_images;
    }
    reports.push_back(std::move(r));
  }
  return reports;
}

// The standard pipeline predictor: G2(G1(x)).
template <class S>
std::vector<MetricsReport> evaluate_model(
    const NetworkSpec& g1_spec, const NetworkParams<S>& g1_params, const NetworkSpec& g2_spec,
    const NetworkParams<S>& g2_params, const std::string& dataset_name,
    const std::vector<SampleTriplet<S>>& samples, std::vector<double> sigmas,
    std::uint64_t seed, const EvalObserver<S>& observer = {}) {
  auto shared_ws1 = std::make_shared<Workspace<S>>();
  auto shared_ws2 = std::make_shared<Workspace<S>>();
  Predictor<S> predictor = [&, shared_ws1, shared_ws2](const SampleTriplet<S>&,
                                                       const Tensor<S>& noisy) {
    const Tensor<S>& denoised = forward(g1_spec, g1_params, noisy, *shared_ws1);
    const Tensor<S>& pred = forward(g2_spec, g2_params, denoised, *shared_ws2);
    return std::pair<Tensor<S>, Tensor<S>>(denoised, pred);
  };
  return evaluate_with(predictor, dataset_name, samples, std::move(sigmas), seed, observer);
}

}  // namespace dsal
