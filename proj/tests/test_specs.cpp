#include <doctest.h>

#include "dsal/net/spec.hpp"

using namespace dsal;

namespace {

struct Row {
  LayerKind kind;
  const char* name;
  int k, c, s, p;
  Act act;
};

void check_roster(const NetworkSpec& spec, const std::vector<Row>& rows) {
  REQUIRE(spec.layers.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    INFO("row ", i, " (", rows[i].name, ")");
    const LayerSpec& l = spec.layers[i];
    CHECK(l.kind == rows[i].kind);
    CHECK(l.name == rows[i].name);
    if (rows[i].k > 0) {
      CHECK(l.kh == rows[i].k);
      CHECK(l.kw == rows[i].k);
    }
    if (rows[i].c > 0) CHECK(l.out_channels == rows[i].c);
    CHECK(l.stride == rows[i].s);
    CHECK(l.padding == rows[i].p);
    CHECK(l.activation == rows[i].act);
  }
}

std::vector<int> conv_channel_ladder(const NetworkSpec& spec) {
  std::vector<int> ladder;
  for (const auto& l : spec.layers)
    if (l.kind == LayerKind::Conv) ladder.push_back(l.out_channels);
  return ladder;
}

}  // namespace

TEST_CASE("saliency generator matches the published roster at width_scale 1") {
  const auto g2 = build_saliency_generator_spec(1.0);
  const auto P = LayerKind::Pool;
  const auto U = LayerKind::Upsample;
  const auto C = LayerKind::Conv;
  const auto R = Act::Relu;
  check_roster(
      g2,
      {
          {C, "conv1_a", 1, 64, 1, 0, R},   {C, "conv1_b", 3, 64, 1, 1, R},
          {P, "pool1", 2, 0, 2, 0, Act::None},
          {C, "conv2_a", 3, 128, 1, 1, R},  {C, "conv2_b", 3, 128, 1, 1, R},
          {P, "pool2", 2, 0, 2, 0, Act::None},
          {C, "conv3_a", 3, 256, 1, 1, R},  {C, "conv3_b", 3, 256, 1, 1, R},
          {C, "conv3_c", 3, 256, 1, 1, R},
          {P, "pool3", 2, 0, 2, 0, Act::None},
          {C, "conv4_a", 3, 512, 1, 1, R},  {C, "conv4_b", 3, 512, 1, 1, R},
          {C, "conv4_c", 3, 512, 1, 1, R},
          {P, "pool4", 2, 0, 2, 0, Act::None},
          {C, "conv5_a", 3, 512, 1, 1, R},  {C, "conv5_b", 3, 512, 1, 1, R},
          {C, "conv5_c", 3, 512, 1, 1, R},
          {C, "conv6_a", 3, 512, 1, 1, R},  {C, "conv6_b", 3, 512, 1, 1, R},
          {C, "conv6_c", 3, 512, 1, 1, R},
          {U, "upsample6", 2, 0, 2, 0, Act::None},
          {C, "conv7_a", 3, 512, 1, 1, R},  {C, "conv7_b", 3, 512, 1, 1, R},
          {C, "conv7_c", 3, 512, 1, 1, R},
          {U, "upsample7", 2, 0, 2, 0, Act::None},
          {C, "conv8_a", 3, 256, 1, 1, R},  {C, "conv8_b", 3, 256, 1, 1, R},
          {C, "conv8_c", 3, 256, 1, 1, R},
          {U, "upsample8", 2, 0, 2, 0, Act::None},
          {C, "conv9_a", 3, 128, 1, 1, R},  {C, "conv9_b", 3, 128, 1, 1, R},
          {U, "upsample9", 2, 0, 2, 0, Act::None},
          {C, "conv10_a", 3, 64, 1, 1, R},  {C, "conv10_b", 3, 64, 1, 1, R},
          {C, "output", 1, 1, 1, 0, Act::Sigmoid},
      });

  // channel ladder 64,128,256,512,512,512,512,256,128,64 -> 1
  CHECK(conv_channel_ladder(g2) ==
        std::vector<int>{64,  64,  128, 128, 256, 256, 256, 512, 512, 512, 512, 512, 512, 512,
                         512, 512, 512, 512, 512, 256, 256, 256, 128, 128, 64, 64, 1});
}

TEST_CASE("saliency generator width scaling") {
  const auto g2 = build_saliency_generator_spec(1.0 / 16.0);
  CHECK(conv_channel_ladder(g2) ==
        std::vector<int>{4,  4,  8,  8,  16, 16, 16, 32, 32, 32, 32, 32, 32, 32,
                         32, 32, 32, 32, 32, 16, 16, 16, 8,  8,  4,  4,  1});
  CHECK_THROWS_AS(build_saliency_generator_spec(0.0), ValidationError);
  CHECK_THROWS_AS(build_saliency_generator_spec(1.5), ValidationError);
}

TEST_CASE("saliency generator shape walk at 96x96") {
  const auto g2 = build_saliency_generator_spec(1.0);
  const auto shapes = propagate_shapes(g2, 96, 96);
  // bottleneck after pool4 is 6x6
  for (std::size_t i = 0; i < g2.layers.size(); ++i)
    if (g2.layers[i].name == "pool4") CHECK(shapes[i] == TensorShape{6, 6, 512});
  CHECK(shapes.back() == TensorShape{96, 96, 1});
}

TEST_CASE("discriminator matches the published roster") {
  const auto d = build_discriminator_spec(3, 96, 1.0, "D1");
  const auto P = LayerKind::Pool;
  const auto C = LayerKind::Conv;
  const auto F = LayerKind::FullyConnected;
  check_roster(d, {
                      {C, "conv1_a", 1, 3, 1, 0, Act::Relu},
                      {C, "conv1_b", 3, 32, 1, 1, Act::Relu},
                      {P, "pool1", 2, 0, 2, 0, Act::None},
                      {C, "conv2_a", 3, 64, 1, 1, Act::Relu},
                      {C, "conv2_b", 3, 64, 1, 1, Act::Relu},
                      {P, "pool2", 2, 0, 2, 0, Act::None},
                      {C, "conv3_a", 3, 64, 1, 1, Act::Relu},
                      {C, "conv3_b", 3, 64, 1, 1, Act::Relu},
                      {P, "pool3", 2, 0, 2, 0, Act::None},
                      {F, "fc4", 0, 100, 1, 0, Act::Tanh},
                      {F, "fc5", 0, 2, 1, 0, Act::Tanh},
                      {F, "fc6", 0, 1, 1, 0, Act::Sigmoid},
                  });

  // shape-propagation oracle: fc4 consumes 12*12*64 = 9216 features at 96x96
  const auto shapes = param_shapes(d);
  bool found = false;
  for (const auto& ps : shapes)
    if (d.layers[std::size_t(ps.layer_index)].name == "fc4") {
      CHECK(ps.cols == 9216);
      found = true;
    }
  CHECK(found);

  CHECK_THROWS_AS(build_discriminator_spec(2), ValidationError);
  CHECK_THROWS_AS(build_discriminator_spec(3, 100), ValidationError);  // not divisible by 8
}

TEST_CASE("denoiser spec structure") {
  SUBCASE("depth 1 is a two-conv bottleneck") {
    const auto g1 = build_denoiser_spec(1, 8);
    int convs = 0, skips = 0;
    for (const auto& l : g1.layers) {
      convs += l.kind == LayerKind::Conv;
      skips += l.kind == LayerKind::SkipAdd;
    }
    CHECK(convs == 2);
    CHECK(skips == 0);
    const auto shapes = propagate_shapes(g1, 48, 40);
    CHECK(shapes.back() == TensorShape{48, 40, 3});
  }
  SUBCASE("depth 5 spec-walk enumeration") {
    const auto g1 = build_denoiser_spec(5, 32);
    int convs = 0, skips = 0, acts = 0;
    for (const auto& l : g1.layers) {
      convs += l.kind == LayerKind::Conv;
      skips += l.kind == LayerKind::SkipAdd;
      acts += l.kind == LayerKind::Activation;
    }
    CHECK(convs == 10);      // 10 learnable conv layers
    CHECK(skips == 2);       // a skip addition every second mirrored pair
    CHECK(acts == skips);    // relu re-applied after each addition
    CHECK(g1.layers.back().activation == Act::Sigmoid);
    for (const auto& l : g1.layers)
      if (l.kind == LayerKind::Conv) CHECK(l.stride == 1);
    // skip sources reference the mirrored encoder layer outputs
    for (const auto& l : g1.layers)
      if (l.kind == LayerKind::SkipAdd) {
        CHECK(l.skip_from >= 0);
        CHECK(g1.layers[std::size_t(l.skip_from)].name.substr(0, 3) == "enc");
      }
  }
  SUBCASE("validation") {
    CHECK_THROWS_AS(build_denoiser_spec(0, 8), ValidationError);
  }
}

TEST_CASE("reverse generator mirrors the denoiser") {
  const auto g1 = build_denoiser_spec(5, 32);
  const auto g3 = build_reverse_generator_spec(5, 32);
  CHECK(g3.input_channels == 1);
  CHECK(g3.output_channels == 3);
  CHECK(g3.layers.size() == g1.layers.size());
  // parameter-count oracle: only the first conv differs, by (3-1)*3*3*base
  CHECK(param_count(g1) - param_count(g3) == 2 * 9 * 32);
}

TEST_CASE("param_count is a pure function of the spec") {
  const auto a = build_saliency_generator_spec(0.25);
  const auto b = build_saliency_generator_spec(0.25);
  CHECK(param_count(a) == param_count(b));
  CHECK(spec_hash(a) == spec_hash(b));
  const auto c = build_saliency_generator_spec(0.5);
  CHECK(spec_hash(a) != spec_hash(c));
}

TEST_CASE("spec serialization round-trip") {
  for (const auto& spec : {build_denoiser_spec(3, 8), build_saliency_generator_spec(0.125),
                           build_discriminator_spec(4, 64, 0.25, "D2")}) {
    const auto text = spec_to_text(spec);
    const auto back = spec_from_text(text);
    CHECK(back == spec);
    CHECK(spec_hash(back) == spec_hash(spec));
  }
}
