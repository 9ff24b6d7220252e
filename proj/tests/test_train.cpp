#include <doctest.h>

#include <cmath>

#include "chc/train.hpp"
#include "gradcheck.hpp"
#include "test_util.hpp"

using namespace chc;
using chc::testing::error_of;

namespace {

HypothesisSet pixel_hypotheses(std::initializer_list<std::pair<double, double>> branches) {
  HypothesisSet hyp;
  hyp.k = static_cast<int>(branches.size());
  for (auto [cb, cr] : branches) {
    Tensor t(2, 1, 1);
    t(0, 0, 0) = cb;
    t(1, 0, 0) = cr;
    hyp.chroma.push_back(t);
  }
  return hyp;
}

Chroma pixel_truth(double cb, double cr) { return Chroma{Plane::Constant(1, 1, cb), Plane::Constant(1, 1, cr)}; }

NetworkConfig tiny(int k, std::uint64_t seed = 3) {
  NetworkConfig c;
  c.k_branches = k;
  c.trunk_channels = 4;
  c.trunk_depth = 2;
  c.branch_hidden = 3;
  c.predictor_hidden = 4;
  c.seed = seed;
  return c;
}

CorpusSpec small_two_mode(int n) {
  CorpusSpec s = two_mode_spec(n, 5);
  s.width = s.height = 24;
  s.shapes_per_image = 2;
  s.min_shape = 6;
  s.max_shape = 10;
  return s;
}

}  // namespace

TEST_CASE("hypothesis loss on single pixels") {
  SUBCASE("exact hit") {
    const auto r = hypothesis_loss_and_grad(pixel_hypotheses({{0.5, 0.5}, {0.1, 0.1}}), pixel_truth(0.1, 0.1));
    CHECK(r.loss == 0.0);
    CHECK(r.winner(0, 0) == 1);
    for (const Tensor& g : r.grads) CHECK(g.data().isZero(0.0));
  }
  SUBCASE("tie goes to the lowest index") {
    const auto r = hypothesis_loss_and_grad(pixel_hypotheses({{0.3, 0.0}, {0.3, 0.0}}), pixel_truth(0, 0));
    CHECK(r.winner(0, 0) == 0);
    CHECK(r.loss == doctest::Approx(0.09).epsilon(1e-12));
    CHECK(r.grads[1].data().isZero(0.0));
    CHECK(r.grads[0](0, 0, 0) == doctest::Approx(0.6));
  }
  SUBCASE("three branches") {
    const auto r = hypothesis_loss_and_grad(pixel_hypotheses({{0.1, 0.1}, {0.12, 0.14}, {0.09, 0.2}}),
                                            pixel_truth(0.118, 0.138));
    CHECK(r.winner(0, 0) == 1);
    // Both channels miss by 0.002.
    CHECK(r.loss == doctest::Approx(8e-6).epsilon(1e-9));
    CHECK(r.grads[0].data().isZero(0.0));
    CHECK(r.grads[2].data().isZero(0.0));
  }
  SUBCASE("shape mismatch") {
    CHECK(error_of([] {
            hypothesis_loss_and_grad(pixel_hypotheses({{0, 0}}), Chroma{Plane::Zero(2, 2), Plane::Zero(2, 2)});
          }) == "ShapeMismatch");
  }
}

TEST_CASE("single-branch loss") {
  const auto r = single_branch_loss(pixel_truth(0.2, 0.0), pixel_truth(0.0, 0.0));
  CHECK(r.loss == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(r.grad.cb(0, 0) == doctest::Approx(0.4));

  // With one branch the routed loss is the plain loss, bit for bit.
  const Chroma truth = chc::testing::random_chroma(6, 5, 9);
  const Chroma pred = chc::testing::random_chroma(6, 5, 19);
  HypothesisSet hyp;
  hyp.k = 1;
  Tensor t(2, 6, 5);
  t.channel(0) = pred.cb;
  t.channel(1) = pred.cr;
  hyp.chroma.push_back(t);
  const auto routed = hypothesis_loss_and_grad(hyp, truth);
  const auto plain = single_branch_loss(pred, truth);
  CHECK(routed.loss == plain.loss);
  CHECK(Plane(routed.grads[0].channel(0)) == plain.grad.cb);
}

TEST_CASE("routed loss is bounded by every single branch") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    HypothesisSet hyp;
    hyp.k = 3;
    for (int j = 0; j < 3; ++j) {
      const Chroma c = chc::testing::random_chroma(4, 4, seed * 10 + j);
      Tensor t(2, 4, 4);
      t.channel(0) = c.cb;
      t.channel(1) = c.cr;
      hyp.chroma.push_back(t);
    }
    const Chroma truth = chc::testing::random_chroma(4, 4, seed + 1000);
    const double routed = hypothesis_loss_and_grad(hyp, truth).loss;
    for (int j = 0; j < 3; ++j) CHECK(routed <= single_branch_loss(hyp.branch_chroma(j), truth).loss);

    // A strictly losing branch can move without changing the loss.
    const auto r = hypothesis_loss_and_grad(hyp, truth);
    HypothesisSet moved = hyp;
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) {
        const int loser = (r.winner(y, x) + 1) % 3;
        const double e_w = joint_sq_error(hyp.chroma[r.winner(y, x)](0, y, x), hyp.chroma[r.winner(y, x)](1, y, x),
                                          truth.cb(y, x), truth.cr(y, x));
        const double e_l = joint_sq_error(hyp.chroma[loser](0, y, x), hyp.chroma[loser](1, y, x), truth.cb(y, x),
                                          truth.cr(y, x));
        // A 1e-3 shift changes the error by under 3e-3, so the margin keeps it losing.
        if (e_l > e_w + 1e-2) moved.chroma[loser](0, y, x) += 1e-3;
      }
    CHECK(hypothesis_loss_and_grad(moved, truth).loss == r.loss);
  }
}

TEST_CASE("predictor cross-entropy") {
  Tensor uniform(5, 1, 1);
  uniform.data().setConstant(0.2);
  BranchMap target = BranchMap::Constant(1, 1, 3);
  const auto a = predictor_loss_and_grad(uniform, target);
  CHECK(a.loss == doctest::Approx(std::log(5.0)).epsilon(1e-12));
  CHECK(a.grad_logits(3, 0, 0) == doctest::Approx(-0.8));
  CHECK(a.grad_logits(0, 0, 0) == doctest::Approx(0.2));

  Tensor p(2, 1, 1);
  p(0, 0, 0) = 0.75;
  p(1, 0, 0) = 0.25;
  target(0, 0) = 1;
  CHECK(predictor_loss_and_grad(p, target).loss == doctest::Approx(-std::log(0.25)).epsilon(1e-12));
  CHECK(predictor_loss_and_grad(p, target).loss == doctest::Approx(1.3863).epsilon(1e-4));

  target(0, 0) = 2;
  CHECK(error_of([&] { predictor_loss_and_grad(p, target); }) == "IndexOutOfRange");
}

TEST_CASE("analytic gradients match central differences") {
  const Plane gray = chc::testing::random_plane(8, 8, 77);
  const Chroma truth = chc::testing::random_chroma(8, 8, 78);
  SUBCASE("single branch") { CHECK(chc::testing::check_single_branch(init_model(tiny(1)), gray, truth).worst < 1e-4); }
  SUBCASE("routed branches") { CHECK(chc::testing::check_hypothesis(init_model(tiny(3)), gray, truth).worst < 1e-4); }
  SUBCASE("predictor") {
    const ModelWeights w = init_model(tiny(3));
    const BranchMap target = pixel_oracle(forward_hypotheses(w, gray), truth);
    const auto r = chc::testing::check_predictor(w, gray, target);
    CHECK(r.checked == w.predictor[0].kernel.size() + w.predictor[0].bias.size() + w.predictor[1].kernel.size() +
                           w.predictor[1].bias.size());
    CHECK(r.worst < 1e-4);
  }
}

TEST_CASE("training config validation and schedule") {
  TrainConfig tc;
  tc.epochs = 8;
  CHECK(tc.rate_at(0) == 1e-3);
  CHECK(tc.rate_at(3) == 1e-3);
  CHECK(tc.rate_at(4) == doctest::Approx(1e-4));
  CHECK(tc.rate_at(6) == doctest::Approx(1e-5));
  tc.lr_drop_epochs = std::vector<int>{};
  CHECK(tc.rate_at(7) == 1e-3);

  TrainConfig bad;
  bad.batch_size = 0;
  CHECK(error_of([&] { bad.validate(); }) == "InvalidConfig");
  bad = {};
  bad.learning_rate = 0;
  CHECK(error_of([&] { bad.validate(); }) == "InvalidConfig");
  bad = {};
  bad.lr_drop_factor = 1.5;
  CHECK(error_of([&] { bad.validate(); }) == "InvalidConfig");
  CHECK(error_of([] { train_colorizer(Corpus{}, tiny(1), TrainConfig{}); }) == "EmptyCorpus");
}

TEST_CASE("constant chroma is learned by one branch") {
  CorpusSpec s = small_two_mode(4);
  s.palette = {{{0.2, -0.1, 1.0}}};
  s.noise_std = 0.0;
  s.shapes_per_image = 1;
  s.min_shape = s.max_shape = s.width;
  const Corpus corpus = generate_corpus(s);
  TrainConfig tc;
  tc.epochs = 60;
  tc.batch_size = 2;
  tc.learning_rate = 1e-2;
  const TrainResult r = train_colorizer(corpus, tiny(1), tc);
  REQUIRE(r.log.size() == 60);
  CHECK(r.log.back().loss < 1e-4);
  CHECK(evaluate_colorizer_loss(r.weights, corpus) < 1e-4);
  CHECK(r.log.back().learning_rate == doctest::Approx(1e-4));
}

TEST_CASE("training is deterministic and branches reduce the loss") {
  const Corpus corpus = generate_corpus(small_two_mode(6));
  TrainConfig tc;
  tc.epochs = 4;
  tc.batch_size = 3;
  tc.learning_rate = 3e-3;
  const TrainResult a = train_colorizer(corpus, tiny(2), tc);
  const TrainResult b = train_colorizer(corpus, tiny(2), tc);
  CHECK(bit_identical(a.weights, b.weights));
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) CHECK(a.log[i].loss == b.log[i].loss);
  CHECK(std::isfinite(a.log.back().loss));
  CHECK(a.log.back().loss < a.log.front().loss);
  // The model is only ever better with K=2 than with either branch alone.
  double best_single = 1e9;
  const double routed = evaluate_colorizer_loss(a.weights, corpus);
  for (int j = 0; j < 2; ++j) {
    double total = 0;
    for (const auto& img : corpus)
      total += single_branch_loss(forward_hypotheses(a.weights, img.planes.y).branch_chroma(j), img.planes.chroma).loss;
    best_single = std::min(best_single, total / corpus.size());
  }
  CHECK(routed <= best_single);
}

TEST_CASE("predictor training leaves the colorizer untouched") {
  const Corpus corpus = generate_corpus(small_two_mode(4));
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 2;
  const ModelWeights base = train_colorizer(corpus, tiny(2), tc).weights;
  const TrainResult r = train_predictor(corpus, base, tc);
  CHECK(bit_identical(r.weights, base, kColorizer));
  CHECK_FALSE(bit_identical(r.weights, base, kPredictor));
  REQUIRE(r.log.back().accuracy.has_value());
  CHECK(*r.log.back().accuracy >= 0.0);
  CHECK(*r.log.back().accuracy <= 1.0);
  const std::string csv = loss_log_csv(r.log);
  CHECK(csv.rfind("epoch,loss,learning_rate,accuracy\n", 0) == 0);
}

TEST_CASE("corpus generation") {
  const CorpusSpec spec = two_mode_spec(8, 42);
  const Corpus a = generate_corpus(spec), b = generate_corpus(spec);
  REQUIRE(a.size() == 8);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].rgb == b[i].rgb);
    CHECK(a[i].seed == image_seed(42, i));
  }
  CHECK_FALSE(a[0].rgb == a[1].rgb);

  SUBCASE("shapes respect the gap and paint their mode") {
    for (const auto& img : a)
      for (std::size_t i = 0; i < img.shapes.size(); ++i) {
        const auto& s = img.shapes[i];
        const double cb = spec.palette[0][s.mode].cb;
        CHECK(std::abs(img.planes.chroma.cb(s.y + s.h / 2, s.x + s.w / 2) - cb) < 0.1);
        for (std::size_t j = 0; j < i; ++j) {
          const auto& o = img.shapes[j];
          const bool apart = s.x >= o.x + o.w + spec.min_gap || o.x >= s.x + s.w + spec.min_gap ||
                             s.y >= o.y + o.h + spec.min_gap || o.y >= s.y + s.h + spec.min_gap;
          CHECK(apart);
        }
      }
  }
  SUBCASE("two-mode variance") {
    CorpusSpec full = spec;
    full.noise_std = 0.0;
    full.shapes_per_image = 1;
    full.min_shape = full.max_shape = full.width;
    CHECK(single_branch_floor(full, generate_corpus(full)) == doctest::Approx(0.0625).epsilon(1e-12));
    const double floor = single_branch_floor(spec, a);
    CHECK(floor > 2 * 0.01 * 0.01);
    CHECK(floor < 0.0625);
  }
  SUBCASE("persistence roundtrip") {
    chc::testing::TempDir dir("corpus");
    save_corpus(a, dir.path());
    const Corpus back = load_corpus(dir.path());
    REQUIRE(back.size() == a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(back[i].rgb == a[i].rgb);
      CHECK(back[i].shapes.size() == a[i].shapes.size());
    }
    CHECK(error_of([&] { load_corpus(dir / "absent"); }) == "FileNotFound");
  }
  SUBCASE("shipped configs match the built-in corpora") {
    const CorpusSpec two = load_corpus_spec(std::filesystem::path(CHC_SOURCE_DIR) / "configs/two_mode.json");
    const CorpusSpec det = load_corpus_spec(std::filesystem::path(CHC_SOURCE_DIR) / "configs/deterministic.json");
    CHECK(generate_corpus(two).back().rgb == generate_corpus(two_mode_spec(200, 1)).back().rgb);
    CHECK(generate_corpus(det)[5].rgb == generate_corpus(deterministic_mode_spec(100, 7))[5].rgb);
  }
  SUBCASE("corpus description validation") {
    CHECK(error_of([] { corpus_spec_from_json("{"); }) == "InvalidSpec");
    CHECK(error_of([] { corpus_spec_from_json(R"({"palette": [[{"cb": 0.9, "cr": 0, "p": 1}]]})"); }) == "InvalidSpec");
    CHECK(error_of([] { corpus_spec_from_json(R"({"palette": [[{"cb": 0.1, "cr": 0, "p": 0.5}]]})"); }) ==
          "InvalidSpec");
    const CorpusSpec ok = corpus_spec_from_json(
        R"({"image_count": 3, "seed": 9, "palette": [[{"cb": 0.25, "cr": 0, "p": 0.5}, {"cb": -0.25, "cr": 0, "p": 0.5}]]})");
    CHECK(ok.image_count == 3);
    CHECK(ok.seed == 9);
    CHECK(ok.shape_classes == 1);
  }
}
