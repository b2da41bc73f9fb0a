#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dsal/common.hpp"
#include "dsal/losses.hpp"

namespace dsal {

// Fully resolved run configuration. One structured file plus flag overrides
// determines a run; the resolved copy is written next to every checkpoint
// and report.
struct RunConfig {
  struct Data {
    std::string source = "shapes";  // "shapes" or "manifest"
    std::string root;               // manifest directory (env DSALGAN_DATA fallback)
    int size = 96;
    int n_train = 200;
    int n_test = 50;
    std::vector<double> sigmas = {10, 30, 50, 80};
    std::uint64_t seed = 7;
  } data;

  struct Net {
    int g1_depth_pairs = 5;
    int g1_base_channels = 16;
    double g2_width_scale = 0.25;
    double d_width_scale = 0.25;
  } net;

  struct Loss {
    LossWeights weights;
    bool l2_squared = false;
  } loss;

  struct Train {
    int batch_size = 8;
    double gen_lr = 1e-4;
    double disc_lr = 1e-4;
    int d_steps_per_g = 1;
    std::uint64_t seed = 1;
    int checkpoint_every = 200;
    int steps_pretrain_denoise = 500;
    int steps_pretrain_sod = 1000;
    int steps_joint = 500;
    double grad_clip = 5.0;
  } train;

  struct Joint {
    bool freeze_g1 = false;
  } joint;

  struct Eval {
    std::uint64_t seed = 99;
  } eval;

  void validate() const {
    require(data.source == "shapes" || data.source == "manifest",
            cat("config: data.source must be 'shapes' or 'manifest', got '", data.source, "'"));
    require(data.size > 0 && data.size % 16 == 0,
            cat("config: data.size ", data.size, " must be a positive multiple of 16"));
    require(data.n_train >= 1 && data.n_test >= 1, "config: corpus counts must be >= 1");
    for (double s : data.sigmas) require(s >= 0, cat("config: negative sigma ", s));
    require(net.g1_depth_pairs >= 1 && net.g1_base_channels >= 1, "config: bad G1 shape");
    require(net.g2_width_scale > 0 && net.g2_width_scale <= 1, "config: g2_width_scale not in (0,1]");
    require(net.d_width_scale > 0 && net.d_width_scale <= 1, "config: d_width_scale not in (0,1]");
    loss.weights.validate();
    require(train.batch_size >= 1, "config: batch_size must be >= 1");
    require(train.gen_lr > 0 && train.disc_lr > 0, "config: learning rates must be positive");
    require(train.d_steps_per_g >= 1, "config: d_steps_per_g must be >= 1");
    require(train.steps_pretrain_denoise >= 0 && train.steps_pretrain_sod >= 0 &&
                train.steps_joint >= 0,
            "config: negative step counts");
  }
};

inline nlohmann::json to_json(const RunConfig& c) {
  return nlohmann::json{
      {"data",
       {{"source", c.data.source},
        {"root", c.data.root},
        {"size", c.data.size},
        {"n_train", c.data.n_train},
        {"n_test", c.data.n_test},
        {"sigmas", c.data.sigmas},
        {"seed", c.data.seed}}},
      {"net",
       {{"g1_depth_pairs", c.net.g1_depth_pairs},
        {"g1_base_channels", c.net.g1_base_channels},
        {"g2_width_scale", c.net.g2_width_scale},
        {"d_width_scale", c.net.d_width_scale}}},
      {"loss",
       {{"w1", c.loss.weights.w1},
        {"w2", c.loss.weights.w2},
        {"w3", c.loss.weights.w3},
        {"eps", c.loss.weights.eps},
        {"l2_squared", c.loss.l2_squared}}},
      {"train",
       {{"batch_size", c.train.batch_size},
        {"gen_lr", c.train.gen_lr},
        {"disc_lr", c.train.disc_lr},
        {"d_steps_per_g", c.train.d_steps_per_g},
        {"seed", c.train.seed},
        {"checkpoint_every", c.train.checkpoint_every},
        {"steps_pretrain_denoise", c.train.steps_pretrain_denoise},
        {"steps_pretrain_sod", c.train.steps_pretrain_sod},
        {"steps_joint", c.train.steps_joint},
        {"grad_clip", c.train.grad_clip}}},
      {"joint", {{"freeze_g1", c.joint.freeze_g1}}},
      {"eval", {{"seed", c.eval.seed}}}};
}

inline RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  if (j.contains("data")) {
    const auto& d = j["data"];
    c.data.source = d.value("source", c.data.source);
    c.data.root = d.value("root", c.data.root);
    c.data.size = d.value("size", c.data.size);
    c.data.n_train = d.value("n_train", c.data.n_train);
    c.data.n_test = d.value("n_test", c.data.n_test);
    if (d.contains("sigmas")) c.data.sigmas = d["sigmas"].get<std::vector<double>>();
    c.data.seed = d.value("seed", c.data.seed);
  }
  if (j.contains("net")) {
    const auto& n = j["net"];
    c.net.g1_depth_pairs = n.value("g1_depth_pairs", c.net.g1_depth_pairs);
    c.net.g1_base_channels = n.value("g1_base_channels", c.net.g1_base_channels);
    c.net.g2_width_scale = n.value("g2_width_scale", c.net.g2_width_scale);
    c.net.d_width_scale = n.value("d_width_scale", c.net.d_width_scale);
  }
  if (j.contains("loss")) {
    const auto& l = j["loss"];
    c.loss.weights.w1 = l.value("w1", c.loss.weights.w1);
    c.loss.weights.w2 = l.value("w2", c.loss.weights.w2);
    c.loss.weights.w3 = l.value("w3", c.loss.weights.w3);
    c.loss.weights.eps = l.value("eps", c.loss.weights.eps);
    c.loss.l2_squared = l.value("l2_squared", c.loss.l2_squared);
  }
  if (j.contains("train")) {
    const auto& t = j["train"];
    c.train.batch_size = t.value("batch_size", c.train.batch_size);
    c.train.gen_lr = t.value("gen_lr", c.train.gen_lr);
    c.train.disc_lr = t.value("disc_lr", c.train.disc_lr);
    c.train.d_steps_per_g = t.value("d_steps_per_g", c.train.d_steps_per_g);
    c.train.seed = t.value("seed", c.train.seed);
    c.train.checkpoint_every = t.value("checkpoint_every", c.train.checkpoint_every);
    c.train.steps_pretrain_denoise = t.value("steps_pretrain_denoise", c.train.steps_pretrain_denoise);
    c.train.steps_pretrain_sod = t.value("steps_pretrain_sod", c.train.steps_pretrain_sod);
    c.train.steps_joint = t.value("steps_joint", c.train.steps_joint);
    c.train.grad_clip = t.value("grad_clip", c.train.grad_clip);
  }
  if (j.contains("joint")) c.joint.freeze_g1 = j["joint"].value("freeze_g1", c.joint.freeze_g1);
  if (j.contains("eval")) c.eval.seed = j["eval"].value("seed", c.eval.seed);
  c.validate();
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError(cat("cannot read config '", path, "'"));
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(cat("malformed config '", path, "': ", e.what()));
  }
  return config_from_json(j);
}

inline void save_config(const std::string& path, const RunConfig& c) {
  std::ofstream os(path);
  if (!os) throw IoError(cat("cannot write config '", path, "'"));
  os << to_json(c).dump(2) << '\n';
}

inline std::uint64_t config_hash(const RunConfig& c) { return fnv1a64(to_json(c).dump()); }

}  // namespace dsal
