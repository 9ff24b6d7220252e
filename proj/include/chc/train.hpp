#pragma once

#include <optional>
#include <string>
#include <vector>

#include "chc/corpus.hpp"
#include "chc/net.hpp"
#include "chc/oracle.hpp"

namespace chc {

// Losses are per-pixel means, so gradients carry a 1/N factor relative to the
// summed form; the learning rate is then independent of image size.

struct HypothesisLoss {
  double loss = 0.0;
  std::vector<Tensor> grads;  // per branch, (2, H, W); zero wherever the branch lost
  BranchMap winner;
};

/// Min-over-branches squared error with winner-only gradient routing.
HypothesisLoss hypothesis_loss_and_grad(const HypothesisSet& hyp, const Chroma& truth);

struct SingleBranchLoss {
  double loss = 0.0;
  Chroma grad;
};

/// Plain squared error of one prediction.
SingleBranchLoss single_branch_loss(const Chroma& pred, const Chroma& truth);

struct PredictorLoss {
  double loss = 0.0;
  Tensor grad_logits;  // (p - onehot) / N
};

/// Mean per-pixel cross-entropy of the branch predictor against the oracle.
PredictorLoss predictor_loss_and_grad(const Tensor& probs, const BranchMap& oracle);

struct TrainConfig {
  int epochs = 20;
  int batch_size = 8;
  double learning_rate = 1e-3;
  /// Epochs (0-based) at whose start the rate is multiplied by the drop
  /// factor; unset means drops at 50% and 75% of training.
  std::optional<std::vector<int>> lr_drop_epochs;
  double lr_drop_factor = 0.1;
  std::uint64_t seed = 0;

  /// Throws InvalidConfig.
  void validate() const;
  double rate_at(int epoch) const;
};

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  double learning_rate = 0.0;
  std::optional<double> accuracy;
};

struct TrainResult {
  ModelWeights weights;
  std::vector<EpochLog> log;
};

/// Mini-batch ADAM on the min-over-branches loss. Deterministic given seeds.
TrainResult train_colorizer(const Corpus& corpus, const NetworkConfig& config, const TrainConfig& tc);

/// Same loop starting from existing weights (used to continue training).
TrainResult train_colorizer(const Corpus& corpus, ModelWeights weights, const TrainConfig& tc);

/// Trains only the predictor group against per-pixel oracle maps; trunk and
/// branch parameters are left bit-identical.
TrainResult train_predictor(const Corpus& corpus, const ModelWeights& weights, const TrainConfig& tc);

/// Mean per-image min-over-branches loss of a model on a corpus.
double evaluate_colorizer_loss(const ModelWeights& weights, const Corpus& corpus);

/// Fraction of pixels where the predictor's argmax equals the pixel oracle.
double predictor_accuracy(const ModelWeights& weights, const Corpus& corpus);

/// Per-pixel argmax over K (ties to the lowest index).
BranchMap argmax_branches(const Tensor& probs);

/// CSV: epoch,loss,learning_rate,accuracy
std::string loss_log_csv(const std::vector<EpochLog>& log);

}  // namespace chc
