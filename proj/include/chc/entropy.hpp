#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace chc {

enum class Direction { Forward, Inverse };

/// Forward: d[0] = s[0], d[i] = s[i] - s[i-1]. Inverse undoes it exactly.
std::vector<std::int32_t> dpcm_transform(std::span<const std::int32_t> values, Direction direction);

/// Signed to unsigned interleave: 0, -1, 1, -2, 2 -> 0, 1, 2, 3, 4.
inline std::uint32_t zigzag(std::int32_t v) {
  return (static_cast<std::uint32_t>(v) << 1) ^ static_cast<std::uint32_t>(v >> 31);
}
inline std::int32_t unzigzag(std::uint32_t v) {
  return static_cast<std::int32_t>(v >> 1) ^ -static_cast<std::int32_t>(v & 1);
}

inline constexpr int kMaxCodeLength = 32;

/// Canonical Huffman code described by one length per symbol. Symbols with
/// length 0 do not occur. When every length is 0 the stream holds a single
/// repeated symbol, alphabet_size - 1, and costs zero bits.
struct HuffmanTable {
  std::vector<std::uint8_t> lengths;

  int alphabet_size() const { return static_cast<int>(lengths.size()); }
  bool single_symbol() const;
  /// Kraft equality over the used symbols, all lengths <= 32.
  bool valid() const;
  friend bool operator==(const HuffmanTable&, const HuffmanTable&) = default;
};

/// Optimal code lengths by repeatedly merging the two lightest nodes (ties:
/// lower total first, then lower smallest-symbol). Throws EmptyAlphabet when
/// all counts are zero and InvalidParams if a length would exceed 32.
HuffmanTable build_huffman(std::span<const std::uint64_t> freqs);

/// Codes assigned shortest first, then by symbol.
std::vector<std::uint32_t> canonical_codes(const HuffmanTable& table);

struct Bitstream {
  std::vector<std::uint8_t> bytes;
  std::uint64_t bit_length = 0;
  friend bool operator==(const Bitstream&, const Bitstream&) = default;
};

/// MSB-first bit packing.
class BitWriter {
 public:
  void put(std::uint32_t code, int length);
  Bitstream finish() &&;

 private:
  Bitstream out_;
};

class BitReader {
 public:
  explicit BitReader(const Bitstream& bits) : bits_(bits) {}
  /// Throws MalformedBitstream past the declared bit length.
  std::uint32_t bit();
  std::uint32_t get(int length);
  std::uint64_t position() const { return pos_; }

 private:
  const Bitstream& bits_;
  std::uint64_t pos_ = 0;
};

/// Throws SymbolOutOfAlphabet for symbols without a code.
Bitstream huffman_encode(const HuffmanTable& table, std::span<const std::uint32_t> symbols);

/// Decodes exactly `count` symbols and requires the stream to end there.
std::vector<std::uint32_t> huffman_decode(const HuffmanTable& table, const Bitstream& bits, std::size_t count);

/// Fixed-width packing, ceil(log2 k) bits per symbol (zero bits when k = 1).
int raw_bits_per_symbol(int k);
Bitstream raw_encode(std::span<const std::uint32_t> symbols, int k);
std::vector<std::uint32_t> raw_decode(const Bitstream& bits, std::size_t count, int k);

}  // namespace chc
