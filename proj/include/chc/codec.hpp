#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "chc/container.hpp"
#include "chc/net.hpp"
#include "chc/pixelio.hpp"

namespace chc {

/// What the encoder sees: the grayscale plane shared with the decoder, the
/// true chroma, and the color image reconstructions are scored against.
struct CodecInput {
  Plane gray;
  Chroma truth;
  RgbImage reference;
};

/// Splits a color image: luma rounded to 8 bits (as a grayscale PNG would
/// store it), the exact chroma, and the image itself as reference.
CodecInput codec_input(const RgbImage& color);

/// PerPixel, then Grid {4,8,16,32}, SLIC {8,16,32} x {1,10}, and QuickShift
/// {(0.5,2,4), (0.5,4,8), (1,4,16)}, in that order.
std::vector<MethodDescriptor> default_candidates();

/// False when the method's parameters cannot partition a width x height image.
bool candidate_applicable(const MethodDescriptor& m, int width, int height);

/// Region map a (quantized) descriptor induces on the gray plane.
RegionMap derive_regions(const MethodDescriptor& m, const Plane& gray);

struct CandidateResult {
  MethodDescriptor method;  // quantized
  ChcContainer container;
  std::vector<std::uint8_t> bytes;
  RgbImage reconstruction;
  double psnr = 0.0;
  double chroma_mse = 0.0;
  double psnr_uncorrected = 0.0;   // region oracle alone
  double psnr_unquantized = 0.0;   // with the correction before fixed-point rounding
  int region_count = 0;

  std::size_t size() const { return bytes.size(); }
};

/// Runs the network once and scores every applicable candidate, keeping
/// enumeration order. Inapplicable candidates are skipped.
std::vector<CandidateResult> encode_candidates(const CodecInput& in, const ModelWeights& weights,
                                               const std::vector<MethodDescriptor>& candidates);

struct EncodeTarget {
  enum class Kind { Budget, Quality } kind = Kind::Budget;
  double value = std::numeric_limits<double>::infinity();  // bytes, or PSNR dB

  static EncodeTarget budget(double bytes) { return {Kind::Budget, bytes}; }
  static EncodeTarget quality(double psnr_db) { return {Kind::Quality, psnr_db}; }
};

/// Budget: highest PSNR with container size <= budget. Quality: smallest
/// container reaching the PSNR. Ties keep the earlier candidate. Throws
/// NoFeasibleCandidate.
std::size_t select_candidate(const std::vector<CandidateResult>& results, const EncodeTarget& target);

CandidateResult encode_color(const CodecInput& in, const ModelWeights& weights, const EncodeTarget& target,
                             const std::vector<MethodDescriptor>& candidates = default_candidates());

/// Throws ModelMismatch, DimensionMismatch, MalformedBitstream.
RgbImage decode_color(const ChcContainer& container, const Plane& gray, const ModelWeights& weights);

/// Parses first, so checksum failures surface as ChecksumMismatch.
RgbImage decode_color(std::span<const std::uint8_t> bytes, const Plane& gray, const ModelWeights& weights);

/// Colorization with no side information: per-pixel argmax of the predictor.
RgbImage zero_cost_colorize(const Plane& gray, const ModelWeights& weights);

/// Chroma planes behind zero_cost_colorize.
Chroma zero_cost_chroma(const Plane& gray, const ModelWeights& weights);

}  // namespace chc
