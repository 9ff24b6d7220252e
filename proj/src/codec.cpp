#include "chc/codec.hpp"

#include <algorithm>

#include "chc/error.hpp"
#include "chc/metrics.hpp"
#include "chc/oracle.hpp"
#include "chc/train.hpp"

namespace chc {

CodecInput codec_input(const RgbImage& color) {
  PlanarImage p = rgb_to_ycbcr(color);
  return {quantize_luma(p.y), std::move(p.chroma), color};
}

std::vector<MethodDescriptor> default_candidates() {
  std::vector<MethodDescriptor> out;
  out.push_back({});
  for (int cell : {4, 8, 16, 32}) {
    MethodDescriptor m;
    m.method = Method::Grid;
    m.grid.cell_size = cell;
    out.push_back(m);
  }
  for (int s : {8, 16, 32})
    for (double compactness : {1.0, 10.0}) {
      MethodDescriptor m;
      m.method = Method::Slic;
      m.slic = {s, compactness};
      out.push_back(m);
    }
  for (const QuickShiftParams& q : {QuickShiftParams{0.5, 2, 4}, QuickShiftParams{0.5, 4, 8}, QuickShiftParams{1.0, 4, 16}}) {
    MethodDescriptor m;
    m.method = Method::QuickShift;
    m.quickshift = q;
    out.push_back(m);
  }
  return out;
}

bool candidate_applicable(const MethodDescriptor& m, int width, int height) {
  switch (m.method) {
    case Method::PerPixel: return true;
    case Method::Grid: return m.grid.cell_size >= 1 && m.grid.cell_size <= std::max(width, height);
    case Method::Slic:
      return m.slic.region_size >= 2 && m.slic.compactness > 0 && m.slic.region_size <= std::min(width, height);
    case Method::QuickShift:
      return m.quickshift.ratio >= 0 && m.quickshift.kernel_size > 0 && m.quickshift.max_dist > 0;
  }
  return false;
}

RegionMap derive_regions(const MethodDescriptor& m, const Plane& gray) {
  const int w = static_cast<int>(gray.cols()), h = static_cast<int>(gray.rows());
  switch (m.method) {
    case Method::Grid: return grid_partition(w, h, m.grid);
    case Method::Slic: return slic_segment(gray, m.slic);
    case Method::QuickShift: return quickshift_segment(gray, m.quickshift);
    case Method::PerPixel: break;
  }
  fail(ErrorCode::InvalidParams, "per-pixel method has no region map");
}

namespace {

void check_input(const CodecInput& in) {
  if (in.truth.cb.rows() != in.truth.cr.rows() || in.truth.cb.cols() != in.truth.cr.cols() ||
      in.truth.height() != in.gray.rows() || in.truth.width() != in.gray.cols())
    fail(ErrorCode::ShapeMismatch, "gray and chroma planes differ in shape");
  if (in.reference.width != in.gray.cols() || in.reference.height != in.gray.rows())
    fail(ErrorCode::ShapeMismatch, "reference image differs in shape");
  if (in.gray.size() == 0) fail(ErrorCode::ShapeMismatch, "empty image");
}

void check_model(const ModelWeights& weights) {
  if (weights.config.k_branches > 255) fail(ErrorCode::ModelMismatch, "K does not fit the container");
}

}  // namespace

std::vector<CandidateResult> encode_candidates(const CodecInput& in, const ModelWeights& weights,
                                               const std::vector<MethodDescriptor>& candidates) {
  check_input(in);
  check_model(weights);
  const int w = static_cast<int>(in.gray.cols()), h = static_cast<int>(in.gray.rows());
  const HypothesisSet hyp = forward_hypotheses(weights, in.gray);
  const std::uint64_t hash = model_hash(weights);
  const BranchMap pixel_map = pixel_oracle(hyp, in.truth);

  std::vector<CandidateResult> results;
  for (const MethodDescriptor& requested : candidates) {
    if (!candidate_applicable(requested, w, h)) continue;
    CandidateResult r;
    r.method = quantize_method(requested);
    r.method.k = hyp.k;
    r.method.model_hash = hash;

    std::vector<std::uint8_t> indices;
    BranchMap map;
    if (r.method.method == Method::PerPixel) {
      map = pixel_map;
      indices.assign(map.data(), map.data() + map.size());
      r.region_count = static_cast<int>(map.size());
    } else {
      const RegionMap regions = derive_regions(r.method, in.gray);
      RegionChoice choice = region_oracle(hyp, in.truth, regions);
      indices = std::move(choice.indices);
      map = std::move(choice.map);
      r.region_count = regions.region_count;
    }

    const Chroma assembled = assemble_chroma(hyp, map);
    const CorrectionParams fitted = fit_correction(assembled, in.truth);
    r.psnr_uncorrected = rgb_psnr(ycbcr_to_rgb(in.gray, assembled), in.reference);
    r.psnr_unquantized = rgb_psnr(ycbcr_to_rgb(in.gray, apply_correction(assembled, fitted)), in.reference);

    r.container.width = static_cast<std::uint32_t>(w);
    r.container.height = static_cast<std::uint32_t>(h);
    r.container.method = r.method;
    r.container.correction = QuantizedCorrection::quantize(fitted);
    pack_indices(r.container, indices);
    r.bytes = serialize_container(r.container);

    const Chroma corrected = apply_correction(assembled, r.container.correction.dequantize());
    r.reconstruction = ycbcr_to_rgb(in.gray, corrected);
    r.psnr = rgb_psnr(r.reconstruction, in.reference);
    r.chroma_mse = chroma_mse(corrected, in.truth);
    results.push_back(std::move(r));
  }
  return results;
}

std::size_t select_candidate(const std::vector<CandidateResult>& results, const EncodeTarget& target) {
  std::size_t best = results.size();
  for (std::size_t i = 0; i < results.size(); ++i) {
    const CandidateResult& r = results[i];
    if (target.kind == EncodeTarget::Kind::Budget) {
      if (static_cast<double>(r.size()) > target.value) continue;
      if (best == results.size() || r.psnr > results[best].psnr) best = i;
    } else {
      if (r.psnr < target.value) continue;
      if (best == results.size() || r.size() < results[best].size()) best = i;
    }
  }
  if (best == results.size()) fail(ErrorCode::NoFeasibleCandidate, "no candidate meets the target");
  return best;
}

CandidateResult encode_color(const CodecInput& in, const ModelWeights& weights, const EncodeTarget& target,
                             const std::vector<MethodDescriptor>& candidates) {
  std::vector<CandidateResult> results = encode_candidates(in, weights, candidates);
  return std::move(results[select_candidate(results, target)]);
}

RgbImage decode_color(const ChcContainer& c, const Plane& gray, const ModelWeights& weights) {
  if (c.method.k != weights.config.k_branches || c.method.model_hash != model_hash(weights))
    fail(ErrorCode::ModelMismatch, "container was encoded with different weights");
  if (c.width != static_cast<std::uint64_t>(gray.cols()) || c.height != static_cast<std::uint64_t>(gray.rows()))
    fail(ErrorCode::DimensionMismatch, "gray plane does not match the container dimensions");

  const HypothesisSet hyp = forward_hypotheses(weights, gray);
  const std::vector<std::uint8_t> indices = unpack_indices(c);
  BranchMap map;
  if (c.method.method == Method::PerPixel) {
    if (indices.size() != static_cast<std::size_t>(gray.size()))
      fail(ErrorCode::MalformedBitstream, "symbol count differs from pixel count");
    map = BranchMap(gray.rows(), gray.cols());
    std::copy(indices.begin(), indices.end(), map.data());
  } else {
    if (!candidate_applicable(c.method, static_cast<int>(c.width), static_cast<int>(c.height)))
      fail(ErrorCode::MalformedBitstream, "region parameters not applicable to the image");
    const RegionMap regions = derive_regions(c.method, gray);
    if (indices.size() != static_cast<std::size_t>(regions.region_count))
      fail(ErrorCode::MalformedBitstream, "symbol count differs from region count");
    map = materialize(regions, indices);
  }
  const Chroma chroma = apply_correction(assemble_chroma(hyp, map), c.correction.dequantize());
  return ycbcr_to_rgb(gray, chroma);
}

RgbImage decode_color(std::span<const std::uint8_t> bytes, const Plane& gray, const ModelWeights& weights) {
  return decode_color(parse_container(bytes), gray, weights);
}

Chroma zero_cost_chroma(const Plane& gray, const ModelWeights& weights) {
  const HypothesisSet hyp = forward_hypotheses(weights, gray);
  return assemble_chroma(hyp, argmax_branches(forward_predictor(weights, hyp)));
}

RgbImage zero_cost_colorize(const Plane& gray, const ModelWeights& weights) {
  return ycbcr_to_rgb(gray, zero_cost_chroma(gray, weights));
}

}  // namespace chc
