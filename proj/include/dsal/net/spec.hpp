#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dsal/common.hpp"

namespace dsal {

enum class LayerKind { Conv, Pool, Upsample, FullyConnected, Activation, SkipAdd };
enum class Act { None, Relu, Tanh, Sigmoid };

inline const char* to_string(LayerKind k) {
  switch (k) {
    case LayerKind::Conv: return "conv";
    case LayerKind::Pool: return "pool";
    case LayerKind::Upsample: return "upsample";
    case LayerKind::FullyConnected: return "fully_connected";
    case LayerKind::Activation: return "activation";
    case LayerKind::SkipAdd: return "skip_add";
  }
  return "?";
}

inline const char* to_string(Act a) {
  switch (a) {
    case Act::None: return "none";
    case Act::Relu: return "relu";
    case Act::Tanh: return "tanh";
    case Act::Sigmoid: return "sigmoid";
  }
  return "?";
}

struct LayerSpec {
  LayerKind kind = LayerKind::Conv;
  std::string name;
  int kh = 0, kw = 0;        // kernel (conv, pool, upsample)
  int out_channels = 0;      // conv filters / fc units
  int stride = 1;
  int padding = 0;
  Act activation = Act::None;
  int skip_from = -1;        // source layer index (skip_add only)

  bool has_params() const {
    return kind == LayerKind::Conv || kind == LayerKind::FullyConnected;
  }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct TensorShape {
  int h = 0, w = 0, c = 0;
  friend bool operator==(const TensorShape&, const TensorShape&) = default;
};

// Declarative network description. Every parameter shape is derivable from
// the spec alone; input_height/input_width pin the flatten size ahead of
// fully connected layers.
struct NetworkSpec {
  std::string name;
  std::vector<LayerSpec> layers;
  int input_channels = 3;
  int output_channels = 3;
  int input_height = 0;
  int input_width = 0;
  double width_scale = 1.0;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

namespace detail {
inline LayerSpec conv(std::string name, int k, int c, int pad, Act act) {
  LayerSpec l;
  l.kind = LayerKind::Conv;
  l.name = std::move(name);
  l.kh = l.kw = k;
  l.out_channels = c;
  l.stride = 1;
  l.padding = pad;
  l.activation = act;
  return l;
}

inline LayerSpec pool(std::string name) {
  LayerSpec l;
  l.kind = LayerKind::Pool;
  l.name = std::move(name);
  l.kh = l.kw = 2;
  l.stride = 2;
  return l;
}

inline LayerSpec upsample(std::string name) {
  LayerSpec l;
  l.kind = LayerKind::Upsample;
  l.name = std::move(name);
  l.kh = l.kw = 2;
  l.stride = 2;
  return l;
}

inline LayerSpec fc(std::string name, int units, Act act) {
  LayerSpec l;
  l.kind = LayerKind::FullyConnected;
  l.name = std::move(name);
  l.out_channels = units;
  l.activation = act;
  return l;
}

inline LayerSpec activation(std::string name, Act act) {
  LayerSpec l;
  l.kind = LayerKind::Activation;
  l.name = std::move(name);
  l.activation = act;
  return l;
}

inline LayerSpec skip_add(std::string name, int from) {
  LayerSpec l;
  l.kind = LayerKind::SkipAdd;
  l.name = std::move(name);
  l.skip_from = from;
  return l;
}

inline int scaled(int channels, double width_scale) {
  return std::max(4, int(std::ceil(channels * width_scale)));
}
}  // namespace detail

// G1: symmetric stride-1 encoder-decoder with skip additions joining every
// second mirrored layer pair, sigmoid output. depth_pairs encoder convs plus
// the same number of decoder convs, all 3x3.
inline NetworkSpec build_denoiser_spec(int depth_pairs = 5, int base_channels = 32,
                                       int input_channels = 3, int output_channels = 3,
                                       const std::string& name = "G1") {
  require(depth_pairs >= 1, cat("build_denoiser_spec: depth_pairs must be >= 1, got ", depth_pairs));
  require(base_channels >= 1, "build_denoiser_spec: base_channels must be >= 1");
  using namespace detail;
  NetworkSpec spec;
  spec.name = name;
  spec.input_channels = input_channels;
  spec.output_channels = output_channels;
  const int d = depth_pairs, c = base_channels;

  std::vector<int> enc_out_index(d + 1, -1);  // output layer index of enc_k
  for (int k = 1; k <= d; ++k) {
    spec.layers.push_back(conv(cat("enc", k), 3, c, 1, Act::Relu));
    enc_out_index[k] = int(spec.layers.size()) - 1;
  }
  for (int j = 1; j <= d; ++j) {
    const bool last = j == d;
    const bool skip = !last && j % 2 == 0;
    spec.layers.push_back(conv(cat("dec", j), 3, last ? output_channels : c, 1,
                               skip ? Act::None : (last ? Act::Sigmoid : Act::Relu)));
    if (skip) {
      // Mirror of dec_j around the bottleneck is enc_{d-j+1}.
      spec.layers.push_back(skip_add(cat("skip", j), enc_out_index[d - j + 1]));
      spec.layers.push_back(activation(cat("dec", j, "_relu"), Act::Relu));
    }
  }
  return spec;
}

// G3 mirrors G1 but maps a 1-channel saliency map back to a 3-channel image.
inline NetworkSpec build_reverse_generator_spec(int depth_pairs = 5, int base_channels = 32) {
  return build_denoiser_spec(depth_pairs, base_channels, 1, 3, "G3");
}

// G2: the 10-block saliency encoder-decoder. At width_scale=1 the channel
// ladder is 64,128,256,512,512,512,512,256,128,64 with four 2x2 pools, four
// 2x2 upsamples and a final 1x1 sigmoid conv to one channel. Scaled channel
// counts round up with a floor of 4. conv1_a is a 1x1 conv; its padding is 0
// (see README for the divergence note on the printed padding).
inline NetworkSpec build_saliency_generator_spec(double width_scale = 1.0) {
  require(width_scale > 0.0 && width_scale <= 1.0,
          cat("build_saliency_generator_spec: width_scale must be in (0,1], got ", width_scale));
  using namespace detail;
  NetworkSpec spec;
  spec.name = "G2";
  spec.input_channels = 3;
  spec.output_channels = 1;
  spec.width_scale = width_scale;
  auto ch = [&](int c) { return scaled(c, width_scale); };

  spec.layers.push_back(conv("conv1_a", 1, ch(64), 0, Act::Relu));
  spec.layers.push_back(conv("conv1_b", 3, ch(64), 1, Act::Relu));
  spec.layers.push_back(pool("pool1"));
  spec.layers.push_back(conv("conv2_a", 3, ch(128), 1, Act::Relu));
  spec.layers.push_back(conv("conv2_b", 3, ch(128), 1, Act::Relu));
  spec.layers.push_back(pool("pool2"));
  for (char s : {'a', 'b', 'c'}) spec.layers.push_back(conv(cat("conv3_", s), 3, ch(256), 1, Act::Relu));
  spec.layers.push_back(pool("pool3"));
  for (char s : {'a', 'b', 'c'}) spec.layers.push_back(conv(cat("conv4_", s), 3, ch(512), 1, Act::Relu));
  spec.layers.push_back(pool("pool4"));
  for (char s : {'a', 'b', 'c'}) spec.layers.push_back(conv(cat("conv5_", s), 3, ch(512), 1, Act::Relu));
  for (char s : {'a', 'b', 'c'}) spec.layers.push_back(conv(cat("conv6_", s), 3, ch(512), 1, Act::Relu));
  spec.layers.push_back(upsample("upsample6"));
  for (char s : {'a', 'b', 'c'}) spec.layers.push_back(conv(cat("conv7_", s), 3, ch(512), 1, Act::Relu));
  spec.layers.push_back(upsample("upsample7"));
  for (char s : {'a', 'b', 'c'}) spec.layers.push_back(conv(cat("conv8_", s), 3, ch(256), 1, Act::Relu));
  spec.layers.push_back(upsample("upsample8"));
  for (char s : {'a', 'b'}) spec.layers.push_back(conv(cat("conv9_", s), 3, ch(128), 1, Act::Relu));
  spec.layers.push_back(upsample("upsample9"));
  for (char s : {'a', 'b'}) spec.layers.push_back(conv(cat("conv10_", s), 3, ch(64), 1, Act::Relu));
  spec.layers.push_back(conv("output", 1, 1, 0, Act::Sigmoid));
  return spec;
}

inline constexpr int kDefaultDiscInput = 96;

// D1/D2: three conv blocks with 2x2 pools, then fc(100) tanh, fc(2) tanh,
// fc(1) sigmoid. input_size fixes the flatten width of fc4; the input must be
// divisible by 8 (three pools). The 32/64-channel convs scale with
// width_scale; the literal 3-channel conv1_a does not.
inline NetworkSpec build_discriminator_spec(int input_channels, int input_size = kDefaultDiscInput,
                                            double width_scale = 1.0,
                                            const std::string& name = "D") {
  require(input_channels == 1 || input_channels == 3 || input_channels == 4,
          cat("build_discriminator_spec: input_channels must be 1, 3 or 4, got ", input_channels));
  require(input_size > 0 && input_size % 8 == 0,
          cat("build_discriminator_spec: input_size ", input_size, " must be divisible by 8"));
  require(width_scale > 0.0 && width_scale <= 1.0,
          "build_discriminator_spec: width_scale must be in (0,1]");
  using namespace detail;
  NetworkSpec spec;
  spec.name = name;
  spec.input_channels = input_channels;
  spec.output_channels = 1;
  spec.input_height = spec.input_width = input_size;
  spec.width_scale = width_scale;
  auto ch = [&](int c) { return scaled(c, width_scale); };

  spec.layers.push_back(conv("conv1_a", 1, 3, 0, Act::Relu));
  spec.layers.push_back(conv("conv1_b", 3, ch(32), 1, Act::Relu));
  spec.layers.push_back(pool("pool1"));
  spec.layers.push_back(conv("conv2_a", 3, ch(64), 1, Act::Relu));
  spec.layers.push_back(conv("conv2_b", 3, ch(64), 1, Act::Relu));
  spec.layers.push_back(pool("pool2"));
  spec.layers.push_back(conv("conv3_a", 3, ch(64), 1, Act::Relu));
  spec.layers.push_back(conv("conv3_b", 3, ch(64), 1, Act::Relu));
  spec.layers.push_back(pool("pool3"));
  spec.layers.push_back(fc("fc4", 100, Act::Tanh));
  spec.layers.push_back(fc("fc5", 2, Act::Tanh));
  spec.layers.push_back(fc("fc6", 1, Act::Sigmoid));
  return spec;
}

// Walks the spec and returns the shape after every layer. Throws
// ValidationError naming the first offending layer.
inline std::vector<TensorShape> propagate_shapes(const NetworkSpec& spec, int h, int w) {
  std::vector<TensorShape> shapes;
  shapes.reserve(spec.layers.size());
  TensorShape cur{h, w, spec.input_channels};
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    switch (l.kind) {
      case LayerKind::Conv: {
        const int oh = (cur.h + 2 * l.padding - l.kh) / l.stride + 1;
        const int ow = (cur.w + 2 * l.padding - l.kw) / l.stride + 1;
        require(oh > 0 && ow > 0 && (cur.h + 2 * l.padding - l.kh) % l.stride == 0 &&
                    (cur.w + 2 * l.padding - l.kw) % l.stride == 0,
                cat(spec.name, "/", l.name, ": conv cannot consume ", cur.h, "x", cur.w));
        cur = {oh, ow, l.out_channels};
        break;
      }
      case LayerKind::Pool:
        require(cur.h % 2 == 0 && cur.w % 2 == 0,
                cat(spec.name, "/", l.name, ": pool needs even spatial dims, got ", cur.h, "x", cur.w));
        cur = {cur.h / 2, cur.w / 2, cur.c};
        break;
      case LayerKind::Upsample:
        cur = {cur.h * 2, cur.w * 2, cur.c};
        break;
      case LayerKind::FullyConnected:
        cur = {1, 1, l.out_channels};
        break;
      case LayerKind::Activation:
        break;
      case LayerKind::SkipAdd: {
        require(l.skip_from >= 0 && l.skip_from < int(i),
                cat(spec.name, "/", l.name, ": skip_from ", l.skip_from, " out of range"));
        const TensorShape& src = shapes[std::size_t(l.skip_from)];
        require(src == cur, cat(spec.name, "/", l.name, ": skip source shape ", src.h, "x", src.w,
                                "x", src.c, " != ", cur.h, "x", cur.w, "x", cur.c));
        break;
      }
    }
    shapes.push_back(cur);
  }
  return shapes;
}

// (rows, cols) of the weight matrix of each parametric layer, walking shapes
// from the spec's nominal input size. Conv weights are out_channels x
// (in_channels*kh*kw); fc weights are units x flattened input size.
struct ParamShape {
  int layer_index = 0;
  long rows = 0;
  long cols = 0;
  long fan_in = 0;
  Act activation = Act::None;
};

inline std::vector<ParamShape> param_shapes(const NetworkSpec& spec) {
  const int h = spec.input_height > 0 ? spec.input_height : 16;
  const int w = spec.input_width > 0 ? spec.input_width : 16;
  std::vector<TensorShape> shapes = propagate_shapes(spec, h, w);
  std::vector<ParamShape> out;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    const TensorShape in = i == 0 ? TensorShape{h, w, spec.input_channels} : shapes[i - 1];
    if (l.kind == LayerKind::Conv) {
      const long k = long(in.c) * l.kh * l.kw;
      out.push_back({int(i), l.out_channels, k, k, l.activation});
    } else if (l.kind == LayerKind::FullyConnected) {
      const long k = long(in.h) * in.w * in.c;
      out.push_back({int(i), l.out_channels, k, k, l.activation});
    }
  }
  return out;
}

inline long param_count(const NetworkSpec& spec) {
  long n = 0;
  for (const auto& p : param_shapes(spec)) n += p.rows * p.cols + p.rows;  // weights + biases
  return n;
}

// ---- serialization (human-readable JSON) ----

inline nlohmann::json to_json(const LayerSpec& l) {
  nlohmann::json j{{"kind", to_string(l.kind)}, {"name", l.name}};
  if (l.kh > 0) j["kernel"] = {l.kh, l.kw};
  if (l.out_channels > 0) j["out_channels"] = l.out_channels;
  if (l.kind != LayerKind::Activation && l.kind != LayerKind::SkipAdd) {
    j["stride"] = l.stride;
    j["padding"] = l.padding;
  }
  if (l.activation != Act::None || l.kind == LayerKind::Activation)
    j["activation"] = to_string(l.activation);
  if (l.kind == LayerKind::SkipAdd) j["skip_from"] = l.skip_from;
  return j;
}

inline nlohmann::json to_json(const NetworkSpec& spec) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : spec.layers) layers.push_back(to_json(l));
  return nlohmann::json{{"name", spec.name},
                        {"input_channels", spec.input_channels},
                        {"output_channels", spec.output_channels},
                        {"input_height", spec.input_height},
                        {"input_width", spec.input_width},
                        {"width_scale", spec.width_scale},
                        {"layers", layers}};
}

inline LayerKind layer_kind_from_string(const std::string& s) {
  for (LayerKind k : {LayerKind::Conv, LayerKind::Pool, LayerKind::Upsample,
                      LayerKind::FullyConnected, LayerKind::Activation, LayerKind::SkipAdd})
    if (s == to_string(k)) return k;
  throw ValidationError(cat("unknown layer kind '", s, "'"));
}

inline Act act_from_string(const std::string& s) {
  for (Act a : {Act::None, Act::Relu, Act::Tanh, Act::Sigmoid})
    if (s == to_string(a)) return a;
  throw ValidationError(cat("unknown activation '", s, "'"));
}

inline NetworkSpec network_spec_from_json(const nlohmann::json& j) {
  NetworkSpec spec;
  spec.name = j.at("name").get<std::string>();
  spec.input_channels = j.at("input_channels").get<int>();
  spec.output_channels = j.at("output_channels").get<int>();
  spec.input_height = j.value("input_height", 0);
  spec.input_width = j.value("input_width", 0);
  spec.width_scale = j.value("width_scale", 1.0);
  for (const auto& lj : j.at("layers")) {
    LayerSpec l;
    l.kind = layer_kind_from_string(lj.at("kind").get<std::string>());
    l.name = lj.value("name", "");
    if (lj.contains("kernel")) {
      l.kh = lj["kernel"][0].get<int>();
      l.kw = lj["kernel"][1].get<int>();
    }
    l.out_channels = lj.value("out_channels", 0);
    l.stride = lj.value("stride", 1);
    l.padding = lj.value("padding", 0);
    if (lj.contains("activation")) l.activation = act_from_string(lj["activation"].get<std::string>());
    l.skip_from = lj.value("skip_from", -1);
    spec.layers.push_back(std::move(l));
  }
  return spec;
}

inline std::string spec_to_text(const NetworkSpec& spec) { return to_json(spec).dump(2); }

inline NetworkSpec spec_from_text(const std::string& text) {
  return network_spec_from_json(nlohmann::json::parse(text));
}

inline std::uint64_t spec_hash(const NetworkSpec& spec) { return fnv1a64(to_json(spec).dump()); }

}  // namespace dsal
