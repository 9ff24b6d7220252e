#include "chc/net.hpp"

#include <cmath>
#include <cstring>
#include <random>
#include <string>

#include "chc/bytes.hpp"
#include "chc/error.hpp"
#include "chc/fileio.hpp"

namespace chc {

void NetworkConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorCode::InvalidConfig, what); };
  if (k_branches < 1 || k_branches > 16) bad("k_branches must be in [1,16]");
  if (trunk_channels < 1 || trunk_depth < 1 || branch_hidden < 1 || predictor_hidden < 1)
    bad("channel counts and depth must be >= 1");
  if (kernel_size < 1 || kernel_size % 2 == 0) bad("kernel_size must be odd");
}

ModelWeights ModelWeights::zeros_like() const {
  ModelWeights z;
  z.config = config;
  for (const auto& l : trunk) z.trunk.push_back(l.zeros_like());
  for (const auto& b : branches) z.branches.push_back({b[0].zeros_like(), b[1].zeros_like()});
  z.predictor = {predictor[0].zeros_like(), predictor[1].zeros_like()};
  return z;
}

std::size_t ModelWeights::parameter_count() const {
  std::size_t n = 0;
  for_each_layer([&](const ConvLayer& l, unsigned) { n += l.kernel.size() + l.bias.size(); });
  return n;
}

bool ModelWeights::all_finite() const {
  bool ok = true;
  for_each_layer([&](const ConvLayer& l, unsigned) { ok = ok && l.kernel.allFinite() && l.bias.allFinite(); });
  return ok;
}

bool bit_identical(const ModelWeights& a, const ModelWeights& b, unsigned groups) {
  std::vector<const ConvLayer*> la, lb;
  a.for_each_layer([&](const ConvLayer& l, unsigned g) {
    if (g & groups) la.push_back(&l);
  });
  b.for_each_layer([&](const ConvLayer& l, unsigned g) {
    if (g & groups) lb.push_back(&l);
  });
  if (la.size() != lb.size()) return false;
  for (std::size_t i = 0; i < la.size(); ++i) {
    const auto &x = *la[i], &y = *lb[i];
    if (x.kernel.size() != y.kernel.size() || x.bias.size() != y.bias.size()) return false;
    if (std::memcmp(x.kernel.data(), y.kernel.data(), sizeof(double) * x.kernel.size()) != 0) return false;
    if (std::memcmp(x.bias.data(), y.bias.data(), sizeof(double) * x.bias.size()) != 0) return false;
  }
  return true;
}

namespace {

ModelWeights allocate(const NetworkConfig& c) {
  ModelWeights w;
  w.config = c;
  int in = 1;
  for (int d = 0; d < c.trunk_depth; ++d) {
    w.trunk.emplace_back(c.trunk_channels, in, c.kernel_size);
    in = c.trunk_channels;
  }
  for (int j = 0; j < c.k_branches; ++j)
    w.branches.push_back({ConvLayer(c.branch_hidden, c.trunk_channels, c.kernel_size),
                          ConvLayer(2, c.branch_hidden, c.kernel_size)});
  w.predictor = {ConvLayer(c.predictor_hidden, c.k_branches * c.branch_hidden, c.kernel_size),
                 ConvLayer(c.k_branches, c.predictor_hidden, c.kernel_size)};
  return w;
}

void check_gray(const ModelWeights& w, const Plane& gray) {
  if (gray.rows() < w.config.kernel_size || gray.cols() < w.config.kernel_size)
    fail(ErrorCode::ShapeMismatch, "input smaller than the kernel");
}

}  // namespace

ModelWeights init_model(const NetworkConfig& config) {
  config.validate();
  ModelWeights w = allocate(config);
  std::mt19937_64 rng(config.seed);
  w.for_each_layer([&](ConvLayer& l, unsigned) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / l.fan_in()));
    for (Eigen::Index i = 0; i < l.kernel.size(); ++i) l.kernel[i] = dist(rng);
    l.bias.setZero();
  });
  return w;
}

Chroma HypothesisSet::branch_chroma(int j) const {
  return Chroma{chroma[j].channel(0), chroma[j].channel(1)};
}

ForwardTrace forward_trace(const ModelWeights& weights, const Plane& gray) {
  check_gray(weights, gray);
  ForwardTrace tr;
  tr.input = Tensor(1, static_cast<int>(gray.rows()), static_cast<int>(gray.cols()));
  tr.input.channel(0) = gray;

  const Tensor* x = &tr.input;
  for (const auto& layer : weights.trunk) {
    Tensor a = conv_forward(layer, *x);
    relu_inplace(a);
    tr.trunk.push_back(std::move(a));
    x = &tr.trunk.back();
  }
  tr.hyp.k = weights.config.k_branches;
  for (const auto& br : weights.branches) {
    Tensor feat = conv_forward(br[0], *x);
    relu_inplace(feat);
    tr.hyp.chroma.push_back(conv_forward(br[1], feat));
    tr.hyp.features.push_back(std::move(feat));
  }
  return tr;
}

HypothesisSet forward_hypotheses(const ModelWeights& weights, const Plane& gray) {
  return std::move(forward_trace(weights, gray).hyp);
}

void backward_hypotheses(const ModelWeights& weights, const ForwardTrace& trace,
                         const std::vector<Tensor>& grad_chroma, ModelWeights& grads) {
  if (static_cast<int>(grad_chroma.size()) != trace.hyp.k) fail(ErrorCode::ShapeMismatch, "gradient count != K");
  const Tensor& top = trace.trunk.back();
  Tensor grad_top(top.channels(), top.height(), top.width());
  for (int j = 0; j < trace.hyp.k; ++j) {
    const auto& br = weights.branches[j];
    auto& gbr = grads.branches[j];
    Tensor g_feat = conv_backward(br[1], trace.hyp.features[j], grad_chroma[j], gbr[1]);
    relu_backward_inplace(trace.hyp.features[j], g_feat);
    grad_top.data() += conv_backward(br[0], top, g_feat, gbr[0]).data();
  }
  Tensor g = std::move(grad_top);
  for (int d = static_cast<int>(weights.trunk.size()) - 1; d >= 0; --d) {
    relu_backward_inplace(trace.trunk[d], g);
    const Tensor& in = d == 0 ? trace.input : trace.trunk[d - 1];
    g = conv_backward(weights.trunk[d], in, g, grads.trunk[d], d > 0);
  }
}

Tensor softmax_channels(const Tensor& logits) {
  const int k = logits.channels();
  Tensor probs(k, logits.height(), logits.width());
  const Eigen::Index n = logits.plane_size();
  for (Eigen::Index p = 0; p < n; ++p) {
    double mx = logits.data()[p];
    for (int j = 1; j < k; ++j) mx = std::max(mx, logits.data()[j * n + p]);
    double sum = 0.0;
    for (int j = 0; j < k; ++j) {
      const double e = std::exp(logits.data()[j * n + p] - mx);
      probs.data()[j * n + p] = e;
      sum += e;
    }
    for (int j = 0; j < k; ++j) probs.data()[j * n + p] /= sum;
  }
  return probs;
}

PredictorTrace forward_predictor_trace(const ModelWeights& weights, const HypothesisSet& hyp) {
  const auto& c = weights.config;
  if (hyp.k != c.k_branches || static_cast<int>(hyp.features.size()) != hyp.k)
    fail(ErrorCode::ShapeMismatch, "hypothesis set does not match the model");
  PredictorTrace tr;
  const int h = hyp.height(), w = hyp.width();
  tr.input = Tensor(c.k_branches * c.branch_hidden, h, w);
  const Eigen::Index block = Eigen::Index(c.branch_hidden) * h * w;
  for (int j = 0; j < hyp.k; ++j) {
    if (hyp.features[j].channels() != c.branch_hidden || hyp.features[j].height() != h ||
        hyp.features[j].width() != w)
      fail(ErrorCode::ShapeMismatch, "branch feature shape");
    tr.input.data().segment(j * block, block) = hyp.features[j].data();
  }
  tr.hidden = conv_forward(weights.predictor[0], tr.input);
  relu_inplace(tr.hidden);
  tr.logits = conv_forward(weights.predictor[1], tr.hidden);
  tr.probs = softmax_channels(tr.logits);
  return tr;
}

Tensor forward_predictor(const ModelWeights& weights, const HypothesisSet& hyp) {
  return std::move(forward_predictor_trace(weights, hyp).probs);
}

void backward_predictor(const ModelWeights& weights, const PredictorTrace& trace, const Tensor& grad_logits,
                        ModelWeights& grads) {
  if (!grad_logits.same_shape(trace.logits)) fail(ErrorCode::ShapeMismatch, "logit gradient shape");
  Tensor g = conv_backward(weights.predictor[1], trace.hidden, grad_logits, grads.predictor[1]);
  relu_backward_inplace(trace.hidden, g);
  conv_backward(weights.predictor[0], trace.input, g, grads.predictor[0], false);
}

AdamState make_adam_state(const ModelWeights& weights) { return {weights.zeros_like(), weights.zeros_like()}; }

void adam_step(ModelWeights& weights, const ModelWeights& grads, AdamState& state, long t, double lr,
               unsigned groups) {
  if (t < 1) fail(ErrorCode::InvalidConfig, "ADAM step counter starts at 1");
  bool finite = true;
  grads.for_each_layer([&](const ConvLayer& l, unsigned g) {
    if (g & groups) finite = finite && l.kernel.allFinite() && l.bias.allFinite();
  });
  if (!finite) fail(ErrorCode::NonFiniteGradient, "gradient contains NaN or infinity");

  std::vector<ConvLayer*> w, m, v;
  std::vector<const ConvLayer*> gr;
  std::vector<unsigned> grp;
  weights.for_each_layer([&](ConvLayer& l, unsigned g) {
    w.push_back(&l);
    grp.push_back(g);
  });
  state.m.for_each_layer([&](ConvLayer& l, unsigned) { m.push_back(&l); });
  state.v.for_each_layer([&](ConvLayer& l, unsigned) { v.push_back(&l); });
  grads.for_each_layer([&](const ConvLayer& l, unsigned) { gr.push_back(&l); });
  if (m.size() != w.size() || v.size() != w.size() || gr.size() != w.size())
    fail(ErrorCode::ShapeMismatch, "optimizer state does not match the weights");

  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(t));
  auto update = [&](Eigen::VectorXd& p, Eigen::VectorXd& mm, Eigen::VectorXd& vv, const Eigen::VectorXd& g) {
    mm = kAdamBeta1 * mm + (1.0 - kAdamBeta1) * g;
    vv = kAdamBeta2 * vv + (1.0 - kAdamBeta2) * g.cwiseProduct(g);
    p.array() -= lr * (mm.array() / c1) / ((vv.array() / c2).sqrt() + kAdamEpsilon);
  };
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!(grp[i] & groups)) continue;
    update(w[i]->kernel, m[i]->kernel, v[i]->kernel, gr[i]->kernel);
    update(w[i]->bias, m[i]->bias, v[i]->bias, gr[i]->bias);
  }
}

// ---------------------------------------------------------------- persistence

namespace {
constexpr char kWeightsMagic[4] = {'C', 'H', 'W', '1'};
}

std::vector<std::uint8_t> serialize_weights(const ModelWeights& weights) {
  ByteWriter out;
  out.raw(kWeightsMagic, 4);
  out.u8(kWeightsFormatVersion);
  const auto& c = weights.config;
  out.u32(static_cast<std::uint32_t>(c.k_branches));
  out.u32(static_cast<std::uint32_t>(c.trunk_channels));
  out.u32(static_cast<std::uint32_t>(c.trunk_depth));
  out.u32(static_cast<std::uint32_t>(c.branch_hidden));
  out.u32(static_cast<std::uint32_t>(c.predictor_hidden));
  out.u32(static_cast<std::uint32_t>(c.kernel_size));
  out.u64(c.seed);
  std::uint32_t layers = 0;
  weights.for_each_layer([&](const ConvLayer&, unsigned) { ++layers; });
  out.u32(layers);
  weights.for_each_layer([&](const ConvLayer& l, unsigned) {
    out.u32(static_cast<std::uint32_t>(l.out));
    out.u32(static_cast<std::uint32_t>(l.in));
    out.u32(static_cast<std::uint32_t>(l.k));
    out.u32(static_cast<std::uint32_t>(l.k));
    for (Eigen::Index i = 0; i < l.kernel.size(); ++i) out.f64(l.kernel[i]);
    out.u32(static_cast<std::uint32_t>(l.bias.size()));
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) out.f64(l.bias[i]);
  });
  out.u64(fnv1a64(out.data()));
  return out.take();
}

ModelWeights deserialize_weights(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 + 1 + 8 || std::memcmp(bytes.data(), kWeightsMagic, 4) != 0)
    fail(ErrorCode::CorruptWeights, "missing CHW1 magic");
  if (bytes[4] != kWeightsFormatVersion)
    fail(ErrorCode::FormatVersionMismatch,
         "weights format version " + std::to_string(bytes[4]) + ", expected " +
             std::to_string(kWeightsFormatVersion));
  const auto body = bytes.first(bytes.size() - 8);
  ByteReader tail(bytes.last(8), ErrorCode::CorruptWeights);
  if (fnv1a64(body) != tail.u64()) fail(ErrorCode::CorruptWeights, "content hash mismatch");

  ByteReader in(body.subspan(5), ErrorCode::CorruptWeights);
  NetworkConfig c;
  c.k_branches = static_cast<int>(in.u32());
  c.trunk_channels = static_cast<int>(in.u32());
  c.trunk_depth = static_cast<int>(in.u32());
  c.branch_hidden = static_cast<int>(in.u32());
  c.predictor_hidden = static_cast<int>(in.u32());
  c.kernel_size = static_cast<int>(in.u32());
  c.seed = in.u64();
  try {
    c.validate();
  } catch (const Error& e) {
    fail(ErrorCode::CorruptWeights, e.what());
  }
  if (c.trunk_depth > 1024) fail(ErrorCode::CorruptWeights, "implausible depth");
  ModelWeights w = allocate(c);
  std::uint32_t layers = 0;
  w.for_each_layer([&](const ConvLayer&, unsigned) { ++layers; });
  if (in.u32() != layers) fail(ErrorCode::CorruptWeights, "layer count does not match config");
  w.for_each_layer([&](ConvLayer& l, unsigned) {
    const auto out_ch = in.u32(), in_ch = in.u32(), kh = in.u32(), kw = in.u32();
    if (out_ch != static_cast<std::uint32_t>(l.out) || in_ch != static_cast<std::uint32_t>(l.in) ||
        kh != static_cast<std::uint32_t>(l.k) || kw != static_cast<std::uint32_t>(l.k))
      fail(ErrorCode::CorruptWeights, "layer shape does not match config");
    for (Eigen::Index i = 0; i < l.kernel.size(); ++i) l.kernel[i] = in.f64();
    if (in.u32() != static_cast<std::uint32_t>(l.bias.size())) fail(ErrorCode::CorruptWeights, "bias length");
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = in.f64();
  });
  if (in.remaining() != 0) fail(ErrorCode::CorruptWeights, "trailing bytes");
  if (!w.all_finite()) fail(ErrorCode::CorruptWeights, "non-finite parameter");
  return w;
}

std::uint64_t model_hash(const ModelWeights& weights) {
  const auto bytes = serialize_weights(weights);
  ByteReader tail(std::span<const std::uint8_t>(bytes).last(8), ErrorCode::CorruptWeights);
  return tail.u64();
}

void save_weights(const ModelWeights& weights, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_weights(weights));
}

ModelWeights load_weights(const std::filesystem::path& path) { return deserialize_weights(read_file(path)); }

}  // namespace chc
