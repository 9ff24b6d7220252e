#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "chc/tensor.hpp"
#include "chc/types.hpp"

namespace chc {

struct NetworkConfig {
  int k_branches = 2;
  int trunk_channels = 16;
  int trunk_depth = 2;
  int branch_hidden = 8;
  int predictor_hidden = 16;
  int kernel_size = 3;
  std::uint64_t seed = 0;

  /// Throws InvalidConfig.
  void validate() const;
  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

/// Parameter groups, usable as a bit mask.
enum ParamGroup : unsigned {
  kTrunk = 1u,
  kBranches = 2u,
  kPredictor = 4u,
  kColorizer = kTrunk | kBranches,
  kAllGroups = kTrunk | kBranches | kPredictor,
};

/// A shared trunk of same-padded convs feeding K two-layer branches, plus a
/// two-layer predictor over the concatenated first-layer branch features.
struct ModelWeights {
  NetworkConfig config;
  std::vector<ConvLayer> trunk;
  std::vector<std::array<ConvLayer, 2>> branches;  // {hidden, chroma}
  std::array<ConvLayer, 2> predictor;              // {hidden, logits}

  /// Visits every layer in serialization order together with its group.
  template <typename F>
  void for_each_layer(F&& fn) {
    for (auto& l : trunk) fn(l, kTrunk);
    for (auto& b : branches)
      for (auto& l : b) fn(l, kBranches);
    for (auto& l : predictor) fn(l, kPredictor);
  }
  template <typename F>
  void for_each_layer(F&& fn) const {
    for (const auto& l : trunk) fn(l, kTrunk);
    for (const auto& b : branches)
      for (const auto& l : b) fn(l, kBranches);
    for (const auto& l : predictor) fn(l, kPredictor);
  }

  /// Same shapes, every value zero (gradient and moment buffers).
  ModelWeights zeros_like() const;
  std::size_t parameter_count() const;
  bool all_finite() const;
};

/// Exact bitwise equality of every parameter of the selected groups.
bool bit_identical(const ModelWeights& a, const ModelWeights& b, unsigned groups = kAllGroups);

/// MSRA (He) initialization: N(0, 2/fan_in) kernels, zero biases.
ModelWeights init_model(const NetworkConfig& config);

/// K chroma hypotheses per pixel plus each branch's first-layer activations.
struct HypothesisSet {
  int k = 0;
  std::vector<Tensor> chroma;    // k x (2, H, W)
  std::vector<Tensor> features;  // k x (branch_hidden, H, W)

  int height() const { return !chroma.empty() ? chroma.front().height() : features.empty() ? 0 : features.front().height(); }
  int width() const { return !chroma.empty() ? chroma.front().width() : features.empty() ? 0 : features.front().width(); }
  Chroma branch_chroma(int j) const;
};

/// Activations retained for backpropagation through the colorizer.
struct ForwardTrace {
  Tensor input;
  std::vector<Tensor> trunk;  // post-rectifier output of each trunk layer
  HypothesisSet hyp;
};

ForwardTrace forward_trace(const ModelWeights& weights, const Plane& gray);
HypothesisSet forward_hypotheses(const ModelWeights& weights, const Plane& gray);

/// Backpropagates dL/d(chroma_j) through branches and trunk, accumulating
/// into `grads` (same layout as the weights).
void backward_hypotheses(const ModelWeights& weights, const ForwardTrace& trace,
                         const std::vector<Tensor>& grad_chroma, ModelWeights& grads);

struct PredictorTrace {
  Tensor input;   // concatenated branch features
  Tensor hidden;  // post-rectifier
  Tensor logits;
  Tensor probs;
};

PredictorTrace forward_predictor_trace(const ModelWeights& weights, const HypothesisSet& hyp);

/// Per-pixel softmax over K branches, shape (K, H, W).
Tensor forward_predictor(const ModelWeights& weights, const HypothesisSet& hyp);

/// Backpropagates dL/d(logits) into the predictor group only.
void backward_predictor(const ModelWeights& weights, const PredictorTrace& trace, const Tensor& grad_logits,
                        ModelWeights& grads);

/// Numerically stable per-pixel softmax over the channel axis.
Tensor softmax_channels(const Tensor& logits);

struct AdamState {
  ModelWeights m;
  ModelWeights v;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

AdamState make_adam_state(const ModelWeights& weights);

/// Bias-corrected ADAM update of the parameters in `groups`; t counts from 1.
/// Throws NonFiniteGradient before touching anything if a gradient is NaN/inf.
void adam_step(ModelWeights& weights, const ModelWeights& grads, AdamState& state, long t, double lr,
               unsigned groups = kAllGroups);

inline constexpr std::uint8_t kWeightsFormatVersion = 1;

std::vector<std::uint8_t> serialize_weights(const ModelWeights& weights);
ModelWeights deserialize_weights(std::span<const std::uint8_t> bytes);

/// FNV-1a hash of the serialized weights; identical to the file trailer.
std::uint64_t model_hash(const ModelWeights& weights);

void save_weights(const ModelWeights& weights, const std::filesystem::path& path);
ModelWeights load_weights(const std::filesystem::path& path);

}  // namespace chc
