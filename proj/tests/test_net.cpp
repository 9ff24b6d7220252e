#include <doctest.h>

#include <cmath>
#include <limits>

#include "chc/fileio.hpp"
#include "chc/net.hpp"
#include "test_util.hpp"

using namespace chc;
using chc::testing::error_of;

namespace {

NetworkConfig small_config(int k = 3) {
  NetworkConfig c;
  c.k_branches = k;
  c.trunk_channels = 4;
  c.trunk_depth = 2;
  c.branch_hidden = 3;
  c.predictor_hidden = 5;
  c.seed = 11;
  return c;
}

void zero_all(ModelWeights& w) {
  w.for_each_layer([](ConvLayer& l, unsigned) {
    l.kernel.setZero();
    l.bias.setZero();
  });
}

}  // namespace

TEST_CASE("config validation") {
  NetworkConfig c;
  c.k_branches = 0;
  CHECK(error_of([&] { init_model(c); }) == "InvalidConfig");
  c.k_branches = 17;
  CHECK(error_of([&] { init_model(c); }) == "InvalidConfig");
  c.k_branches = 2;
  c.kernel_size = 4;
  CHECK(error_of([&] { init_model(c); }) == "InvalidConfig");
  c.kernel_size = 3;
  c.trunk_channels = 0;
  CHECK(error_of([&] { init_model(c); }) == "InvalidConfig");
}

TEST_CASE("initialization is seeded MSRA") {
  NetworkConfig c;
  const ModelWeights a = init_model(c), b = init_model(c);
  CHECK(bit_identical(a, b));
  c.seed = 1;
  CHECK_FALSE(bit_identical(a, init_model(c)));

  // Second trunk layer: 16 inputs x 3x3, so std = sqrt(2/144).
  const ConvLayer& layer = a.trunk.at(1);
  REQUIRE(layer.fan_in() == 144);
  const double mean = layer.kernel.mean();
  const double std = std::sqrt((layer.kernel.array() - mean).square().sum() / double(layer.kernel.size() - 1));
  CHECK(std == doctest::Approx(0.11785).epsilon(0.05));
  CHECK(std::abs(mean) < 0.01);
  a.for_each_layer([](const ConvLayer& l, unsigned) { CHECK(l.bias.isZero(0.0)); });
}

TEST_CASE("layer shapes follow the config") {
  const NetworkConfig c = small_config(3);
  const ModelWeights w = init_model(c);
  REQUIRE(w.trunk.size() == 2);
  CHECK(w.trunk[0].in == 1);
  CHECK(w.trunk[0].out == 4);
  REQUIRE(w.branches.size() == 3);
  CHECK(w.branches[0][0].out == 3);
  CHECK(w.branches[0][1].out == 2);
  CHECK(w.predictor[0].in == 9);
  CHECK(w.predictor[1].out == 3);
  std::size_t total = 0;
  w.for_each_layer([&](const ConvLayer& l, unsigned) { total += l.kernel.size() + l.bias.size(); });
  CHECK(w.parameter_count() == total);
}

TEST_CASE("forward pass shapes and linearity") {
  ModelWeights w = init_model(small_config(3));
  for (int h : {3, 5, 8})
    for (int wd : {3, 7}) {
      const HypothesisSet hyp = forward_hypotheses(w, chc::testing::random_plane(h, wd, h * 10 + wd));
      REQUIRE(hyp.k == 3);
      for (const Tensor& t : hyp.chroma) {
        CHECK(t.channels() == 2);
        CHECK(t.height() == h);
        CHECK(t.width() == wd);
      }
      for (const Tensor& t : hyp.features) CHECK(t.channels() == 3);
    }
  zero_all(w);
  const HypothesisSet hyp = forward_hypotheses(w, chc::testing::random_plane(6, 6, 1));
  for (const Tensor& t : hyp.chroma) CHECK(t.data().isZero(0.0));
}

TEST_CASE("a pixel perturbation stays within the receptive field") {
  for (int depth : {1, 2, 3}) {
    NetworkConfig c = small_config(2);
    c.trunk_depth = depth;
    const ModelWeights w = init_model(c);
    const Plane base = chc::testing::random_plane(21, 21, 5);
    Plane bumped = base;
    bumped(10, 10) += 0.5;
    const HypothesisSet a = forward_hypotheses(w, base), b = forward_hypotheses(w, bumped);
    const int radius = depth + 2;
    bool inside_changed = false;
    for (int j = 0; j < 2; ++j)
      for (int ch = 0; ch < 2; ++ch)
        for (int y = 0; y < 21; ++y)
          for (int x = 0; x < 21; ++x) {
            const bool changed = a.chroma[j](ch, y, x) != b.chroma[j](ch, y, x);
            const bool outside = std::max(std::abs(y - 10), std::abs(x - 10)) > radius;
            if (outside) CHECK_FALSE(changed);
            inside_changed |= changed;
          }
    CHECK(inside_changed);
  }
}

TEST_CASE("forward is deterministic") {
  const ModelWeights w = init_model(small_config(2));
  const Plane g = chc::testing::random_plane(9, 9, 3);
  const HypothesisSet a = forward_hypotheses(w, g), b = forward_hypotheses(w, g);
  for (int j = 0; j < 2; ++j) CHECK(a.chroma[j].data() == b.chroma[j].data());
}

TEST_CASE("predictor softmax") {
  SUBCASE("rows sum to one") {
    const ModelWeights w = init_model(small_config(4));
    const Tensor p = forward_predictor(w, forward_hypotheses(w, chc::testing::random_plane(7, 9, 2)));
    for (int y = 0; y < 7; ++y)
      for (int x = 0; x < 9; ++x) {
        double s = 0;
        for (int j = 0; j < 4; ++j) s += p(j, y, x);
        CHECK(std::abs(s - 1.0) < 1e-6);
      }
  }
  SUBCASE("K = 1 gives probability one") {
    const ModelWeights w = init_model(small_config(1));
    const Tensor p = forward_predictor(w, forward_hypotheses(w, chc::testing::random_plane(5, 5, 2)));
    for (Eigen::Index i = 0; i < p.data().size(); ++i) CHECK(p.data()[i] == 1.0);
  }
  SUBCASE("zero predictor weights give 1/K") {
    ModelWeights w = init_model(small_config(5));
    for (auto& l : w.predictor) {
      l.kernel.setZero();
      l.bias.setZero();
    }
    const Tensor p = forward_predictor(w, forward_hypotheses(w, chc::testing::random_plane(5, 5, 2)));
    for (Eigen::Index i = 0; i < p.data().size(); ++i) CHECK(p.data()[i] == doctest::Approx(0.2).epsilon(1e-15));
  }
  SUBCASE("huge logits stay finite") {
    Tensor logits(2, 1, 1);
    logits(0, 0, 0) = 1000;
    logits(1, 0, 0) = -1000;
    const Tensor p = softmax_channels(logits);
    CHECK(p(0, 0, 0) == 1.0);
    CHECK(p(1, 0, 0) == 0.0);
  }
}

TEST_CASE("adam step") {
  ModelWeights w = init_model(small_config(2));
  const ModelWeights before = w;
  ModelWeights g = w.zeros_like();
  AdamState state = make_adam_state(w);

  SUBCASE("first step with unit gradient moves by about lr") {
    g.trunk[0].kernel[0] = 1.0;
    adam_step(w, g, state, 1, 1e-3);
    const double delta = w.trunk[0].kernel[0] - before.trunk[0].kernel[0];
    CHECK(delta == doctest::Approx(-0.000999999).epsilon(1e-6));
    CHECK(delta == doctest::Approx(-1e-3 / (1.0 + 1e-8)).epsilon(1e-12));
    CHECK(w.trunk[0].kernel[1] == before.trunk[0].kernel[1]);
  }
  SUBCASE("zero gradient from zero state changes nothing") {
    adam_step(w, g, state, 1, 1e-3);
    CHECK(bit_identical(w, before));
  }
  SUBCASE("non-finite gradient is rejected before any update") {
    g.trunk[0].kernel[0] = 1.0;
    g.branches[1][1].bias[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK(error_of([&] { adam_step(w, g, state, 1, 1e-3); }) == "NonFiniteGradient");
    CHECK(bit_identical(w, before));
  }
  SUBCASE("group mask limits the update") {
    w.for_each_layer([&](ConvLayer&, unsigned) {});
    g.for_each_layer([](ConvLayer& l, unsigned) { l.kernel.setConstant(0.5); });
    adam_step(w, g, state, 1, 1e-3, kPredictor);
    CHECK(bit_identical(w, before, kColorizer));
    CHECK_FALSE(bit_identical(w, before, kPredictor));
  }
  SUBCASE("step counter starts at one") {
    CHECK(error_of([&] { adam_step(w, g, state, 0, 1e-3); }) == "InvalidConfig");
  }
}

TEST_CASE("weights persistence") {
  chc::testing::TempDir dir("net");
  const ModelWeights w = init_model(small_config(3));
  const auto path = dir / "w.chw";
  save_weights(w, path);
  const ModelWeights back = load_weights(path);
  CHECK(bit_identical(w, back));
  CHECK(back.config == w.config);
  CHECK(model_hash(back) == model_hash(w));

  std::vector<std::uint8_t> bytes = read_file(path);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "CHW1");
  CHECK(bytes[4] == kWeightsFormatVersion);

  SUBCASE("every flipped payload byte is caught") {
    for (std::size_t i = 5; i < bytes.size(); i += 7) {
      auto bad = bytes;
      bad[i] ^= 0x40;
      CHECK(error_of([&] { deserialize_weights(bad); }) == "CorruptWeights");
    }
  }
  SUBCASE("newer version is reported as such") {
    auto bad = bytes;
    bad[4] = kWeightsFormatVersion + 1;
    CHECK(error_of([&] { deserialize_weights(bad); }) == "FormatVersionMismatch");
  }
  SUBCASE("bad magic and truncation") {
    auto bad = bytes;
    bad[0] = 'X';
    CHECK(error_of([&] { deserialize_weights(bad); }) == "CorruptWeights");
    bad = bytes;
    bad.resize(bytes.size() / 2);
    CHECK(error_of([&] { deserialize_weights(bad); }) == "CorruptWeights");
  }
  SUBCASE("missing file") { CHECK(error_of([&] { load_weights(dir / "nope.chw"); }) == "FileNotFound"); }
}
