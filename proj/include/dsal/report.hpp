#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "dsal/image_ops.hpp"
#include "dsal/metrics.hpp"

namespace dsal {

inline void write_metrics_csv(const std::string& path, const std::vector<MetricsReport>& reports) {
  std::ofstream os(path);
  if (!os) throw IoError(cat("cannot write report '", path, "'"));
  os << "dataset,sigma,n_images,aveF,maxF,auc,mae\n";
  os << std::setprecision(6) << std::fixed;
  for (const auto& r : reports)
    os << r.dataset << ',' << std::defaultfloat << r.sigma << std::fixed << ',' << r.n_images
       << ',' << r.ave_f << ',' << r.max_f << ',' << r.auc << ',' << r.mae << '\n';
}

// Two tables: per-sigma metric blocks (rows aveF/maxF/AUC/MAE, one column per
// dataset) and the AUC-versus-sigma grid (one row per dataset, one column per
// sigma).
inline void write_metrics_markdown(const std::string& path,
                                   const std::vector<MetricsReport>& reports) {
  std::ofstream os(path);
  if (!os) throw IoError(cat("cannot write report '", path, "'"));
  os << std::setprecision(4) << std::fixed;

  std::vector<std::string> datasets;
  std::set<double> sigma_set;
  std::map<std::pair<std::string, double>, const MetricsReport*> by_key;
  for (const auto& r : reports) {
    if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end())
      datasets.push_back(r.dataset);
    sigma_set.insert(r.sigma);
    by_key[{r.dataset, r.sigma}] = &r;
  }

  os << "# Evaluation report\n";
  for (double sigma : sigma_set) {
    os << "\n## Metrics at sigma = " << std::defaultfloat << sigma << std::fixed << "\n\n|  |";
    for (const auto& d : datasets) os << ' ' << d << " |";
    os << "\n|---|";
    for (std::size_t i = 0; i < datasets.size(); ++i) os << "---|";
    os << '\n';
    const char* names[] = {"aveF", "maxF", "AUC", "MAE"};
    for (int m = 0; m < 4; ++m) {
      os << "| " << names[m] << " |";
      for (const auto& d : datasets) {
        auto it = by_key.find({d, sigma});
        if (it == by_key.end()) {
          os << " - |";
          continue;
        }
        const MetricsReport& r = *it->second;
        const double v = m == 0 ? r.ave_f : m == 1 ? r.max_f : m == 2 ? r.auc : r.mae;
        os << ' ' << v << " |";
      }
      os << '\n';
    }
  }

  os << "\n## AUC by noise level\n\n| dataset |";
  for (double sigma : sigma_set) os << " sigma=" << std::defaultfloat << sigma << std::fixed << " |";
  os << "\n|---|";
  for (std::size_t i = 0; i < sigma_set.size(); ++i) os << "---|";
  os << '\n';
  for (const auto& d : datasets) {
    os << "| " << d << " |";
    for (double sigma : sigma_set) {
      auto it = by_key.find({d, sigma});
      if (it == by_key.end())
        os << " - |";
      else
        os << ' ' << it->second->auc << " |";
    }
    os << '\n';
  }
}

inline constexpr int kPanelSeparator = 2;

// Side-by-side figure: noisy | denoised | predicted map | ground truth,
// separated by white gutters. Width = 4 * image width + 3 * separator.
template <class S>
Tensor<S> make_panel(const Tensor<S>& noisy, const Tensor<S>& denoised,
                     const Tensor<S>& predicted, const Tensor<S>& ground_truth) {
  const Tensor<S> tiles[4] = {to_rgb(noisy), to_rgb(denoised), to_rgb(predicted),
                              to_rgb(ground_truth)};
  const int h = tiles[0].height(), w = tiles[0].width();
  for (const auto& t : tiles)
    require(t.height() == h && t.width() == w, "make_panel: tile sizes differ");
  Tensor<S> panel(h, 4 * w + 3 * kPanelSeparator, 3);
  panel.fill(S(1));
  for (int k = 0; k < 4; ++k) {
    const int x0 = k * (w + kPanelSeparator);
    for (int ch = 0; ch < 3; ++ch)
      panel.plane(ch).block(0, x0, h, w) = tiles[k].plane(ch);
  }
  return panel;
}

// Writes CSV (+ markdown mirror) reports; format is "csv" or "markdown".
// An empty report list still produces a header-only CSV.
inline std::vector<std::string> emit_report(const std::vector<MetricsReport>& reports,
                                            const std::string& out_dir,
                                            const std::string& format = "csv") {
  require(format == "csv" || format == "markdown",
          cat("emit_report: unknown format '", format, "'"));
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> files;
  const auto csv = (std::filesystem::path(out_dir) / "metrics.csv").string();
  write_metrics_csv(csv, reports);
  files.push_back(csv);
  if (format == "markdown") {
    const auto md = (std::filesystem::path(out_dir) / "metrics.md").string();
    write_metrics_markdown(md, reports);
    files.push_back(md);
  }
  return files;
}

}  // namespace dsal
