// dsalgan: corpus generation, Gaussian corruption, phase training,
// evaluation and demo panels for the coupled denoising + saliency GAN.

#include <CLI11.hpp>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <optional>

#include "dsal/checkpoint.hpp"
#include "dsal/config.hpp"
#include "dsal/data.hpp"
#include "dsal/image_io.hpp"
#include "dsal/metrics.hpp"
#include "dsal/report.hpp"
#include "dsal/train.hpp"

namespace fs = std::filesystem;
using Scalar = float;

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::vector<double> sigmas;
  std::optional<int> steps;
};

dsal::RunConfig resolve_config(const CommonFlags& f) {
  dsal::RunConfig cfg = f.config_path.empty() ? dsal::RunConfig{} : dsal::load_config(f.config_path);
  if (f.seed) {
    cfg.train.seed = *f.seed;
    cfg.data.seed = *f.seed;
  }
  if (!f.sigmas.empty()) cfg.data.sigmas = f.sigmas;
  cfg.validate();
  return cfg;
}

std::string resolve_data_root(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("DSALGAN_DATA"); env && *env) return env;
  return {};
}

std::vector<fs::path> list_images(const fs::path& dir) {
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) throw dsal::IoError(dsal::cat("'", dir.string(), "' is not a directory"));
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    auto ext = e.path().extension().string();
    for (auto& ch : ext) ch = char(std::tolower(ch));
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::string format_sigma(double sigma) {
  std::string s = dsal::cat(sigma);
  for (auto& ch : s)
    if (ch == '.') ch = 'p';
  return s;
}

int cmd_corpus(const CommonFlags& flags, const std::string& out_dir, int n, int size) {
  dsal::RunConfig cfg = resolve_config(flags);
  if (n > 0) cfg.data.n_train = n;
  if (size > 0) cfg.data.size = size;
  cfg.validate();
  auto corpus = dsal::make_shapes_corpus<Scalar>(cfg.data.n_train, cfg.data.size,
                                                 cfg.data.sigmas, cfg.data.seed);
  fs::create_directories(out_dir);
  dsal::write_corpus(out_dir, corpus);
  dsal::save_config((fs::path(out_dir) / "config.json").string(), cfg);
  std::cout << "wrote " << corpus.size() << " triplets to " << out_dir << '\n';
  return 0;
}

int cmd_corrupt(const CommonFlags& flags, const std::string& input_dir,
                const std::string& masks_dir, const std::string& out_dir) {
  dsal::RunConfig cfg = resolve_config(flags);
  const auto images = list_images(input_dir);
  if (images.empty()) throw dsal::IoError(dsal::cat("no images found in '", input_dir, "'"));

  fs::path masks = masks_dir.empty() ? fs::path(input_dir).parent_path() / "masks" : fs::path(masks_dir);
  for (const char* sub : {"clean", "noisy", "masks"}) fs::create_directories(fs::path(out_dir) / sub);

  std::vector<dsal::ManifestRow> rows;
  for (const auto& img_path : images) {
    const std::string stem = img_path.stem().string();
    const auto clean = dsal::to_rgb(dsal::load_image<Scalar>(img_path.string()));
    const auto clean_out = (fs::path(out_dir) / "clean" / (stem + ".png")).string();
    dsal::save_png(clean_out, clean);

    std::string mask_out;
    const fs::path mask_path = masks / (stem + ".png");
    if (fs::exists(mask_path)) {
      mask_out = (fs::path(out_dir) / "masks" / (stem + ".png")).string();
      dsal::save_png(mask_out, dsal::binarize(dsal::to_gray(dsal::load_image<Scalar>(mask_path.string())),
                                              Scalar(dsal::kMaskThreshold)));
    }
    for (double sigma : cfg.data.sigmas) {
      std::uint64_t sigma_bits = 0;
      std::memcpy(&sigma_bits, &sigma, sizeof(sigma));
      const dsal::NoiseModel noise{sigma, dsal::mix64(cfg.data.seed, dsal::fnv1a64(stem), sigma_bits)};
      const auto noisy_out =
          (fs::path(out_dir) / "noisy" / (stem + "_s" + format_sigma(sigma) + ".png")).string();
      dsal::save_png(noisy_out, dsal::corrupt_gaussian(clean, noise));
      rows.push_back({clean_out, noisy_out, mask_out, sigma});
    }
  }
  dsal::write_manifest((fs::path(out_dir) / "manifest.csv").string(), rows);
  dsal::save_config((fs::path(out_dir) / "config.json").string(), cfg);
  std::cout << "corrupted " << images.size() << " images at " << cfg.data.sigmas.size()
            << " noise levels -> " << rows.size() << " manifest rows\n";
  return 0;
}

std::vector<dsal::SampleTriplet<Scalar>> training_data(const dsal::RunConfig& cfg,
                                                       const std::string& data_flag) {
  const std::string root = resolve_data_root(data_flag.empty() ? cfg.data.root : data_flag);
  if (!root.empty())
    return dsal::load_corpus<Scalar>(root, cfg.data.size);
  if (cfg.data.source == "manifest")
    throw dsal::ValidationError(
        "config asks for manifest data but no root is set (--data, data.root or DSALGAN_DATA)");
  return dsal::make_shapes_corpus<Scalar>(cfg.data.n_train, cfg.data.size, cfg.data.sigmas,
                                          cfg.data.seed);
}

void print_report(const dsal::LossRow& row) {
  const auto& r = row.report;
  std::cout << to_string(row.phase) << " step " << row.step << ": total_denoise="
            << r.total_denoise << " (content=" << r.content << ", adv=" << r.adv_denoise
            << ", d1=" << r.d1 << ") total_sod=" << r.total_sod << " (bce=" << r.bce
            << ", adv=" << r.adv_sod << ", cyclic=" << r.cyclic << ", d2=" << r.d2 << ")\n";
}

int cmd_train(const CommonFlags& flags, const std::string& phase_name, const std::string& out_dir,
              const std::string& resume_path, const std::string& data_flag) {
  dsal::RunConfig cfg = resolve_config(flags);
  const auto data = training_data(cfg, data_flag);
  fs::create_directories(out_dir);
  dsal::save_config((fs::path(out_dir) / "config.json").string(), cfg);

  auto steps_for = [&](dsal::Phase p) {
    if (flags.steps) return std::int64_t(*flags.steps);
    switch (p) {
      case dsal::Phase::PretrainDenoise: return std::int64_t(cfg.train.steps_pretrain_denoise);
      case dsal::Phase::PretrainSod: return std::int64_t(cfg.train.steps_pretrain_sod);
      case dsal::Phase::Joint: return std::int64_t(cfg.train.steps_joint);
    }
    return std::int64_t(0);
  };

  dsal::Trainer<Scalar> trainer(cfg);
  std::vector<dsal::LossRow> log;
  std::ofstream csv;

  auto open_log = [&](dsal::Phase p) {
    csv.open((fs::path(out_dir) / dsal::cat("train_log_", to_string(p), ".csv")).string());
    dsal::write_loss_log_header(csv);
  };

  if (!resume_path.empty()) {
    const auto ckpt = dsal::load_checkpoint<Scalar>(resume_path);
    if (ckpt.config_hash != dsal::config_hash(cfg))
      std::cerr << "warning: resuming with a config that differs from the checkpoint's\n";
    // Prerequisites may be needed again when the resumed phase finishes.
    for (dsal::Phase p : {dsal::Phase::PretrainDenoise, dsal::Phase::PretrainSod}) {
      const auto path = dsal::Trainer<Scalar>::final_path(out_dir, p);
      if (fs::exists(path)) trainer.provide_checkpoint(dsal::load_checkpoint<Scalar>(path));
    }
    trainer.restore_checkpoint(ckpt);
    open_log(ckpt.phase);
    trainer.run_phase(data, steps_for(ckpt.phase), out_dir, &log, &csv);
  } else if (phase_name == "all") {
    std::vector<dsal::Phase> phases{dsal::Phase::PretrainDenoise, dsal::Phase::PretrainSod,
                                    dsal::Phase::Joint};
    csv.open((fs::path(out_dir) / "train_log.csv").string());
    dsal::write_loss_log_header(csv);
    for (dsal::Phase p : phases) {
      trainer.begin_phase(p);
      trainer.run_phase(data, steps_for(p), out_dir, &log, &csv);
    }
  } else {
    const dsal::Phase p = dsal::phase_from_string(phase_name);
    for (dsal::Phase pre : {dsal::Phase::PretrainDenoise, dsal::Phase::PretrainSod}) {
      const auto path = dsal::Trainer<Scalar>::final_path(out_dir, pre);
      if (fs::exists(path)) trainer.provide_checkpoint(dsal::load_checkpoint<Scalar>(path));
    }
    trainer.begin_phase(p);
    open_log(p);
    trainer.run_phase(data, steps_for(p), out_dir, &log, &csv);
  }

  if (!log.empty()) print_report(log.back());
  std::cout << "checkpoint: " << dsal::Trainer<Scalar>::final_path(out_dir, trainer.phase())
            << '\n';
  return 0;
}

int cmd_eval(const CommonFlags& flags, const std::string& checkpoint_path,
             const std::vector<std::string>& data_dirs, const std::string& out_dir, bool panels) {
  dsal::RunConfig cfg = resolve_config(flags);
  const auto ckpt = dsal::load_checkpoint<Scalar>(checkpoint_path);
  const auto sigmas = flags.sigmas.empty() ? cfg.data.sigmas : flags.sigmas;

  struct NamedSet {
    std::string name;
    std::vector<dsal::SampleTriplet<Scalar>> samples;
  };
  std::vector<NamedSet> sets;
  std::vector<std::string> roots = data_dirs;
  if (roots.empty()) {
    const std::string root = resolve_data_root(cfg.data.root);
    if (!root.empty())
      roots.push_back(root);
  }
  if (roots.empty()) {
    dsal::require(cfg.data.source == "shapes",
                  "no dataset directory given (--data, data.root or DSALGAN_DATA)");
    sets.push_back({"shapes-test",
                    dsal::make_shapes_corpus<Scalar>(cfg.data.n_test, cfg.data.size, {0.0},
                                                     dsal::mix64(cfg.data.seed, dsal::fnv1a64("test")))});
  } else {
    for (const auto& r : roots) {
      std::string name = fs::path(r).filename().string();
      if (name.empty()) name = r;
      sets.push_back({name, dsal::load_corpus<Scalar>(r, cfg.data.size)});
    }
  }

  fs::create_directories(out_dir);
  dsal::save_config((fs::path(out_dir) / "config.json").string(), cfg);
  if (panels) fs::create_directories(fs::path(out_dir) / "panels");

  dsal::EvalObserver<Scalar> observer;
  if (panels)
    observer = [&](const std::string& dataset, double sigma, int index,
                   const dsal::SampleTriplet<Scalar>& sample, const dsal::Tensor<Scalar>& denoised,
                   const dsal::Tensor<Scalar>& predicted) {
      // Reproduce the exact corruption evaluate_model used for this image.
      std::uint64_t sigma_bits = 0;
      std::memcpy(&sigma_bits, &sigma, sizeof(sigma));
      const dsal::Tensor<Scalar> eval_noisy = dsal::corrupt_gaussian(
          sample.clean, {sigma, dsal::mix64(cfg.eval.seed, std::uint64_t(index), sigma_bits)});
      const auto panel = dsal::make_panel(eval_noisy, denoised, predicted, sample.mask);
      dsal::save_png((fs::path(out_dir) / "panels" /
                      dsal::cat(dataset, "_s", format_sigma(sigma), "_", sample.id, ".png"))
                         .string(),
                     panel);
    };

  std::vector<dsal::MetricsReport> reports;
  for (const auto& set : sets) {
    auto rs = dsal::evaluate_model(ckpt.g1.spec, ckpt.g1.params, ckpt.g2.spec, ckpt.g2.params,
                                   set.name, set.samples, sigmas, cfg.eval.seed, observer);
    reports.insert(reports.end(), rs.begin(), rs.end());
  }
  const auto files = dsal::emit_report(reports, out_dir, "markdown");
  for (const auto& f : files) std::cout << "wrote " << f << '\n';
  for (const auto& r : reports)
    std::cout << r.dataset << " sigma=" << r.sigma << ": aveF=" << r.ave_f << " maxF=" << r.max_f
              << " auc=" << r.auc << " mae=" << r.mae << " (n=" << r.n_images << ", skipped="
              << r.n_skipped << ")\n";
  return 0;
}

int cmd_demo(const std::string& image_path, const std::string& checkpoint_path,
             const std::string& out_path, double sigma, std::uint64_t seed,
             const std::string& mask_path) {
  const auto ckpt = dsal::load_checkpoint<Scalar>(checkpoint_path);
  auto img = dsal::to_rgb(dsal::load_image<Scalar>(image_path));
  const int h16 = std::max(16, (img.height() / 16) * 16);
  const int w16 = std::max(16, (img.width() / 16) * 16);
  if (h16 != img.height() || w16 != img.width()) {
    std::cerr << "warning: resizing " << img.height() << "x" << img.width() << " to " << h16
              << "x" << w16 << " (sides must be divisible by 16)\n";
    img = dsal::resize_bilinear(img, h16, w16);
  }
  dsal::Tensor<Scalar> noisy = sigma > 0 ? dsal::corrupt_gaussian(img, {sigma, seed}) : img;

  dsal::Workspace<Scalar> ws1, ws2;
  const auto& denoised = dsal::forward(ckpt.g1.spec, ckpt.g1.params, noisy, ws1);
  const auto& predicted = dsal::forward(ckpt.g2.spec, ckpt.g2.params, denoised, ws2);

  dsal::Tensor<Scalar> gt(img.height(), img.width(), 1);
  if (!mask_path.empty()) {
    gt = dsal::binarize(
        dsal::to_gray(dsal::resize_bilinear(dsal::load_image<Scalar>(mask_path), h16, w16)),
        Scalar(dsal::kMaskThreshold));
  } else {
    std::cerr << "warning: no --mask given; ground-truth panel left blank\n";
  }
  if (const auto dir = fs::path(out_path).parent_path(); !dir.empty()) fs::create_directories(dir);
  dsal::save_png(out_path, dsal::make_panel(noisy, denoised, predicted, gt));
  std::cout << "wrote " << out_path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DSAL-GAN training and evaluation toolkit"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::uint64_t seed_value = 0;
  int steps_value = 0;

  auto add_common = [&](CLI::App* cmd, bool with_steps = false) {
    cmd->add_option("--config", flags.config_path, "config file (JSON)");
    cmd->add_option("--seed", seed_value, "seed override")->each([&](const std::string&) {
      flags.seed = seed_value;
    });
    cmd->add_option("--sigma,--sigmas", flags.sigmas, "noise sigma grid (0-255 scale)")
        ->delimiter(',');
    if (with_steps)
      cmd->add_option("--steps", steps_value, "step count override")->each([&](const std::string&) {
        flags.steps = steps_value;
      });
  };

  // corpus
  auto* corpus = app.add_subcommand("corpus", "generate a procedural shapes corpus");
  std::string corpus_out;
  int corpus_n = 0;
  corpus->add_option("--out", corpus_out, "output directory")->required();
  corpus->add_option("--n", corpus_n, "number of samples (default from config)");
  int corpus_size = 0;
  corpus->add_option("--size", corpus_size, "image size (multiple of 16)");
  add_common(corpus);

  // corrupt
  auto* corrupt = app.add_subcommand("corrupt", "write Gaussian-corrupted copies of a directory");
  std::string corrupt_in, corrupt_masks, corrupt_out;
  corrupt->add_option("--input", corrupt_in, "directory of clean images")->required();
  corrupt->add_option("--masks", corrupt_masks, "directory of ground-truth masks (optional)");
  corrupt->add_option("--out", corrupt_out, "output directory")->required();
  add_common(corrupt);

  // train
  auto* train = app.add_subcommand("train", "run a training phase");
  std::string train_phase = "all", train_out = "out", train_resume, train_data;
  train->add_option("--phase", train_phase,
                    "pretrain_denoise | pretrain_sod | joint | all");
  train->add_option("--out", train_out, "run directory (checkpoints, logs, config)");
  train->add_option("--resume", train_resume, "checkpoint to resume from");
  train->add_option("--data", train_data, "manifest directory (overrides config)");
  add_common(train, true);

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint across noise levels");
  std::string eval_ckpt, eval_out = "eval";
  std::vector<std::string> eval_data;
  bool eval_panels = false;
  eval->add_option("--checkpoint", eval_ckpt, "trained checkpoint")->required();
  eval->add_option("--data", eval_data, "dataset manifest directory (repeatable)");
  eval->add_option("--out", eval_out, "report directory");
  eval->add_flag("--panels", eval_panels, "write per-image 4-up panels");
  add_common(eval);

  // demo
  auto* demo = app.add_subcommand("demo", "run the pipeline on one image and write a panel");
  std::string demo_image, demo_ckpt, demo_out = "panel.png", demo_mask;
  double demo_sigma = 0.0;
  std::uint64_t demo_seed = 0;
  demo->add_option("--image", demo_image, "input image")->required();
  demo->add_option("--checkpoint", demo_ckpt, "trained checkpoint")->required();
  demo->add_option("--out", demo_out, "output panel PNG");
  demo->add_option("--sigma", demo_sigma, "corrupt with this sigma before inference");
  demo->add_option("--seed", demo_seed, "noise seed");
  demo->add_option("--mask", demo_mask, "ground-truth mask for the last panel");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    if (corpus->parsed()) return cmd_corpus(flags, corpus_out, corpus_n, corpus_size);
    if (corrupt->parsed()) return cmd_corrupt(flags, corrupt_in, corrupt_masks, corrupt_out);
    if (train->parsed()) return cmd_train(flags, train_phase, train_out, train_resume, train_data);
    if (eval->parsed()) return cmd_eval(flags, eval_ckpt, eval_data, eval_out, eval_panels);
    if (demo->parsed()) return cmd_demo(demo_image, demo_ckpt, demo_out, demo_sigma, demo_seed, demo_mask);
  } catch (const dsal::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const dsal::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const dsal::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
