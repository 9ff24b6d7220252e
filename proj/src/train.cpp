#include "chc/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "chc/error.hpp"

namespace chc {

HypothesisLoss hypothesis_loss_and_grad(const HypothesisSet& hyp, const Chroma& truth) {
  if (hyp.k < 1 || hyp.height() != truth.height() || hyp.width() != truth.width() ||
      truth.cr.rows() != truth.height() || truth.cr.cols() != truth.width())
    fail(ErrorCode::ShapeMismatch, "hypotheses and truth differ in shape");
  const int h = hyp.height(), w = hyp.width();
  const double inv_n = 1.0 / (static_cast<double>(h) * w);
  HypothesisLoss out;
  out.grads.assign(hyp.k, Tensor(2, h, w));
  out.winner.resize(h, w);
  double total = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double tcb = truth.cb(y, x), tcr = truth.cr(y, x);
      double best = std::numeric_limits<double>::infinity();
      int arg = 0;
      for (int j = 0; j < hyp.k; ++j) {
        const double e = joint_sq_error(hyp.chroma[j](0, y, x), hyp.chroma[j](1, y, x), tcb, tcr);
        if (e < best) {
          best = e;
          arg = j;
        }
      }
      total += best;
      out.winner(y, x) = static_cast<std::uint8_t>(arg);
      out.grads[arg](0, y, x) = 2.0 * (hyp.chroma[arg](0, y, x) - tcb) * inv_n;
      out.grads[arg](1, y, x) = 2.0 * (hyp.chroma[arg](1, y, x) - tcr) * inv_n;
    }
  }
  out.loss = total * inv_n;
  return out;
}

SingleBranchLoss single_branch_loss(const Chroma& pred, const Chroma& truth) {
  if (!pred.same_shape(truth)) fail(ErrorCode::ShapeMismatch, "prediction and truth differ in shape");
  const int h = static_cast<int>(pred.height()), w = static_cast<int>(pred.width());
  const double inv_n = 1.0 / (static_cast<double>(h) * w);
  SingleBranchLoss out;
  out.grad = Chroma{Plane(h, w), Plane(h, w)};
  double total = 0.0;
  // Same per-pixel expression and order as the K-branch loss, so K=1 agrees bitwise.
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      total += joint_sq_error(pred.cb(y, x), pred.cr(y, x), truth.cb(y, x), truth.cr(y, x));
      out.grad.cb(y, x) = 2.0 * (pred.cb(y, x) - truth.cb(y, x)) * inv_n;
      out.grad.cr(y, x) = 2.0 * (pred.cr(y, x) - truth.cr(y, x)) * inv_n;
    }
  }
  out.loss = total * inv_n;
  return out;
}

PredictorLoss predictor_loss_and_grad(const Tensor& probs, const BranchMap& oracle) {
  const int k = probs.channels(), h = probs.height(), w = probs.width();
  if (oracle.rows() != h || oracle.cols() != w) fail(ErrorCode::ShapeMismatch, "oracle map differs in shape");
  const double inv_n = 1.0 / (static_cast<double>(h) * w);
  PredictorLoss out;
  out.grad_logits = Tensor(k, h, w);
  out.grad_logits.data() = probs.data() * inv_n;
  double total = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int t = oracle(y, x);
      if (t >= k) fail(ErrorCode::IndexOutOfRange, "oracle index " + std::to_string(t) + " >= K");
      total -= std::log(std::max(probs(t, y, x), std::numeric_limits<double>::min()));
      out.grad_logits(t, y, x) -= inv_n;
    }
  }
  out.loss = total * inv_n;
  return out;
}

BranchMap argmax_branches(const Tensor& probs) {
  BranchMap map(probs.height(), probs.width());
  for (int y = 0; y < probs.height(); ++y) {
    for (int x = 0; x < probs.width(); ++x) {
      int arg = 0;
      for (int j = 1; j < probs.channels(); ++j)
        if (probs(j, y, x) > probs(arg, y, x)) arg = j;
      map(y, x) = static_cast<std::uint8_t>(arg);
    }
  }
  return map;
}

void TrainConfig::validate() const {
  if (epochs < 1) fail(ErrorCode::InvalidConfig, "epochs must be >= 1");
  if (batch_size < 1) fail(ErrorCode::InvalidConfig, "batch_size must be >= 1");
  if (!(learning_rate > 0.0)) fail(ErrorCode::InvalidConfig, "learning rate must be > 0");
  if (!(lr_drop_factor > 0.0 && lr_drop_factor <= 1.0)) fail(ErrorCode::InvalidConfig, "drop factor must be in (0,1]");
}

double TrainConfig::rate_at(int epoch) const {
  const std::vector<int> drops = lr_drop_epochs.value_or(std::vector<int>{epochs / 2, (3 * epochs) / 4});
  double lr = learning_rate;
  for (int d : drops)
    if (d > 0 && epoch >= d) lr *= lr_drop_factor;
  return lr;
}

namespace {

void check_corpus(const Corpus& corpus) {
  if (corpus.empty()) fail(ErrorCode::EmptyCorpus, "corpus has no images");
  const int w = corpus.front().planes.width(), h = corpus.front().planes.height();
  for (const auto& img : corpus)
    if (img.planes.width() != w || img.planes.height() != h)
      fail(ErrorCode::ShapeMismatch, "corpus images differ in size");
}

void scale_grads(ModelWeights& g, double s) {
  g.for_each_layer([s](ConvLayer& l, unsigned) {
    l.kernel *= s;
    l.bias *= s;
  });
}

void zero_grads(ModelWeights& g) {
  g.for_each_layer([](ConvLayer& l, unsigned) {
    l.kernel.setZero();
    l.bias.setZero();
  });
}

/// Shuffled image order per epoch, mini-batches in that order; `step` runs
/// forward/backward for one image, accumulates into grads and returns its loss.
template <typename Step, typename EpochEnd>
std::vector<EpochLog> run_epochs(ModelWeights& weights, std::size_t image_count, const TrainConfig& tc,
                                 unsigned groups, Step&& step, EpochEnd&& epoch_end) {
  tc.validate();
  std::mt19937_64 rng(tc.seed);
  std::vector<std::size_t> order(image_count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  AdamState adam = make_adam_state(weights);
  ModelWeights grads = weights.zeros_like();
  std::vector<EpochLog> log;
  long t = 0;
  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = tc.rate_at(epoch);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(tc.batch_size));
      zero_grads(grads);
      for (std::size_t i = start; i < end; ++i) {
        const double loss = step(order[i], grads);
        if (!std::isfinite(loss)) fail(ErrorCode::DivergedTraining, "loss became non-finite");
        epoch_loss += loss;
      }
      scale_grads(grads, 1.0 / static_cast<double>(end - start));
      adam_step(weights, grads, adam, ++t, lr, groups);
    }
    EpochLog entry{epoch, epoch_loss / static_cast<double>(image_count), lr, std::nullopt};
    epoch_end(entry);
    log.push_back(entry);
  }
  return log;
}

}  // namespace

TrainResult train_colorizer(const Corpus& corpus, ModelWeights weights, const TrainConfig& tc) {
  check_corpus(corpus);
  tc.validate();
  auto step = [&](std::size_t idx, ModelWeights& grads) {
    const auto& img = corpus[idx];
    const ForwardTrace trace = forward_trace(weights, img.planes.y);
    const HypothesisLoss hl = hypothesis_loss_and_grad(trace.hyp, img.planes.chroma);
    backward_hypotheses(weights, trace, hl.grads, grads);
    return hl.loss;
  };
  auto log = run_epochs(weights, corpus.size(), tc, kColorizer, step, [](EpochLog&) {});
  return {std::move(weights), std::move(log)};
}

TrainResult train_colorizer(const Corpus& corpus, const NetworkConfig& config, const TrainConfig& tc) {
  check_corpus(corpus);
  tc.validate();
  return train_colorizer(corpus, init_model(config), tc);
}

TrainResult train_predictor(const Corpus& corpus, const ModelWeights& start, const TrainConfig& tc) {
  check_corpus(corpus);
  tc.validate();
  ModelWeights weights = start;
  // The colorizer is frozen, so branch features and oracle maps are fixed.
  std::vector<HypothesisSet> features;
  std::vector<BranchMap> oracles;
  features.reserve(corpus.size());
  for (const auto& img : corpus) {
    HypothesisSet hyp = forward_hypotheses(weights, img.planes.y);
    oracles.push_back(pixel_oracle(hyp, img.planes.chroma));
    hyp.chroma.clear();
    features.push_back(std::move(hyp));
  }
  long correct = 0, total = 0;
  auto step = [&](std::size_t idx, ModelWeights& grads) {
    const PredictorTrace trace = forward_predictor_trace(weights, features[idx]);
    const PredictorLoss pl = predictor_loss_and_grad(trace.probs, oracles[idx]);
    backward_predictor(weights, trace, pl.grad_logits, grads);
    correct += (argmax_branches(trace.probs).array() == oracles[idx].array()).count();
    total += oracles[idx].size();
    return pl.loss;
  };
  auto epoch_end = [&](EpochLog& e) {
    e.accuracy = static_cast<double>(correct) / static_cast<double>(total);
    correct = total = 0;
  };
  auto log = run_epochs(weights, corpus.size(), tc, kPredictor, step, epoch_end);
  return {std::move(weights), std::move(log)};
}

double evaluate_colorizer_loss(const ModelWeights& weights, const Corpus& corpus) {
  check_corpus(corpus);
  double total = 0.0;
  for (const auto& img : corpus)
    total += hypothesis_loss_and_grad(forward_hypotheses(weights, img.planes.y), img.planes.chroma).loss;
  return total / static_cast<double>(corpus.size());
}

double predictor_accuracy(const ModelWeights& weights, const Corpus& corpus) {
  check_corpus(corpus);
  long correct = 0, total = 0;
  for (const auto& img : corpus) {
    const HypothesisSet hyp = forward_hypotheses(weights, img.planes.y);
    const BranchMap oracle = pixel_oracle(hyp, img.planes.chroma);
    const BranchMap guess = argmax_branches(forward_predictor(weights, hyp));
    correct += (guess.array() == oracle.array()).count();
    total += oracle.size();
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

std::string loss_log_csv(const std::vector<EpochLog>& log) {
  std::ostringstream out;
  out.precision(10);
  out << "epoch,loss,learning_rate,accuracy\n";
  for (const auto& e : log) {
    out << e.epoch << ',' << e.loss << ',' << e.learning_rate << ',';
    if (e.accuracy) out << *e.accuracy;
    out << '\n';
  }
  return out.str();
}

}  // namespace chc
