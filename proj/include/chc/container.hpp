#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "chc/entropy.hpp"
#include "chc/oracle.hpp"
#include "chc/regions.hpp"

namespace chc {

enum class Method : std::uint8_t { PerPixel = 0, Grid = 1, Slic = 2, QuickShift = 3 };

/// How the branch map was approximated, plus the model it refers to. Only
/// the parameters of `method` are meaningful.
struct MethodDescriptor {
  Method method = Method::PerPixel;
  GridParams grid;
  SlicParams slic;
  QuickShiftParams quickshift;
  int k = 1;
  std::uint64_t model_hash = 0;

  /// e.g. "slic(S=16,m=10)"
  std::string summary() const;
  friend bool operator==(const MethodDescriptor&, const MethodDescriptor&) = default;
};

/// Snaps the region parameters onto their stored fixed-point grids, so the
/// encoder segments with exactly the values the decoder will read back.
MethodDescriptor quantize_method(MethodDescriptor m);

/// Correction stored as four i16: scales Q4.12, offsets Q1.14.
struct QuantizedCorrection {
  std::int16_t scale_cb = 1 << 12;
  std::int16_t offset_cb = 0;
  std::int16_t scale_cr = 1 << 12;
  std::int16_t offset_cr = 0;

  static QuantizedCorrection quantize(const CorrectionParams& p);
  CorrectionParams dequantize() const;
  friend bool operator==(const QuantizedCorrection&, const QuantizedCorrection&) = default;
};

enum class Packing : std::uint8_t { Raw = 0, Huffman = 1 };

inline constexpr std::uint8_t kContainerVersion = 1;

struct ChcContainer {
  std::uint8_t version = kContainerVersion;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  MethodDescriptor method;
  QuantizedCorrection correction;
  Packing packing = Packing::Raw;
  std::uint32_t symbol_count = 0;
  HuffmanTable table;  // Huffman packing only
  Bitstream payload;

  friend bool operator==(const ChcContainer&, const ChcContainer&) = default;
};

std::vector<std::uint8_t> serialize_container(const ChcContainer& c);

/// Verifies the trailing checksum first (ChecksumMismatch), then the layout
/// (MalformedBitstream).
ChcContainer parse_container(std::span<const std::uint8_t> bytes);

/// Branch indices to payload: DPCM + canonical Huffman or fixed-width raw
/// packing, whichever serializes smaller (raw on ties).
void pack_indices(ChcContainer& c, std::span<const std::uint8_t> indices);

/// Inverse of pack_indices; every index is checked against K.
std::vector<std::uint8_t> unpack_indices(const ChcContainer& c);

/// Bytes taken by the payload itself.
inline std::size_t payload_bytes(const ChcContainer& c) { return c.payload.bytes.size(); }

}  // namespace chc
