#include "chc/entropy.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <queue>
#include <string>
#include <tuple>

#include "chc/error.hpp"

namespace chc {

std::vector<std::int32_t> dpcm_transform(std::span<const std::int32_t> values, Direction direction) {
  std::vector<std::int32_t> out(values.size());
  if (values.empty()) return out;
  out[0] = values[0];
  if (direction == Direction::Forward) {
    for (std::size_t i = 1; i < values.size(); ++i) out[i] = values[i] - values[i - 1];
  } else {
    for (std::size_t i = 1; i < values.size(); ++i) out[i] = out[i - 1] + values[i];
  }
  return out;
}

bool HuffmanTable::single_symbol() const {
  return !lengths.empty() && std::all_of(lengths.begin(), lengths.end(), [](std::uint8_t l) { return l == 0; });
}

bool HuffmanTable::valid() const {
  if (lengths.empty()) return false;
  if (single_symbol()) return true;
  std::uint64_t kraft = 0;
  for (std::uint8_t l : lengths) {
    if (l > kMaxCodeLength) return false;
    if (l > 0) kraft += std::uint64_t{1} << (kMaxCodeLength - l);
  }
  return kraft == (std::uint64_t{1} << kMaxCodeLength);
}

HuffmanTable build_huffman(std::span<const std::uint64_t> freqs) {
  struct Node {
    std::uint64_t weight;
    std::uint32_t min_symbol;
    int index;
  };
  auto heavier = [](const Node& a, const Node& b) {
    return std::tie(a.weight, a.min_symbol) > std::tie(b.weight, b.min_symbol);
  };
  std::priority_queue<Node, std::vector<Node>, decltype(heavier)> heap(heavier);
  std::vector<int> parent;
  std::vector<int> leaf_of_symbol(freqs.size(), -1);
  for (std::size_t s = 0; s < freqs.size(); ++s) {
    if (freqs[s] == 0) continue;
    leaf_of_symbol[s] = static_cast<int>(parent.size());
    heap.push({freqs[s], static_cast<std::uint32_t>(s), static_cast<int>(parent.size())});
    parent.push_back(-1);
  }
  if (heap.empty()) fail(ErrorCode::EmptyAlphabet, "no symbol has a nonzero count");

  HuffmanTable table;
  if (heap.size() == 1) {
    // Single symbol: all lengths zero, and the symbol is the last one.
    table.lengths.assign(heap.top().min_symbol + 1, 0);
    return table;
  }
  while (heap.size() > 1) {
    const Node a = heap.top();
    heap.pop();
    const Node b = heap.top();
    heap.pop();
    const int id = static_cast<int>(parent.size());
    parent.push_back(-1);
    parent[a.index] = id;
    parent[b.index] = id;
    heap.push({a.weight + b.weight, std::min(a.min_symbol, b.min_symbol), id});
  }
  std::size_t last_used = 0;
  table.lengths.assign(freqs.size(), 0);
  for (std::size_t s = 0; s < freqs.size(); ++s) {
    if (leaf_of_symbol[s] < 0) continue;
    int depth = 0;
    for (int n = leaf_of_symbol[s]; parent[n] >= 0; n = parent[n]) ++depth;
    if (depth > kMaxCodeLength) fail(ErrorCode::InvalidParams, "Huffman code longer than 32 bits");
    table.lengths[s] = static_cast<std::uint8_t>(depth);
    last_used = s;
  }
  table.lengths.resize(last_used + 1);
  return table;
}

std::vector<std::uint32_t> canonical_codes(const HuffmanTable& table) {
  std::vector<std::uint32_t> order(table.lengths.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return table.lengths[a] < table.lengths[b]; });
  std::vector<std::uint32_t> codes(table.lengths.size(), 0);
  std::uint64_t code = 0;
  int prev_len = 0;
  for (std::uint32_t s : order) {
    const int len = table.lengths[s];
    if (len == 0) continue;
    if (prev_len != 0) ++code;
    code <<= (len - prev_len);
    prev_len = len;
    codes[s] = static_cast<std::uint32_t>(code);
  }
  return codes;
}

void BitWriter::put(std::uint32_t code, int length) {
  for (int i = length - 1; i >= 0; --i) {
    if (out_.bit_length % 8 == 0) out_.bytes.push_back(0);
    if ((code >> i) & 1u) out_.bytes.back() |= static_cast<std::uint8_t>(0x80u >> (out_.bit_length % 8));
    ++out_.bit_length;
  }
}

Bitstream BitWriter::finish() && { return std::move(out_); }

std::uint32_t BitReader::bit() {
  if (pos_ >= bits_.bit_length || pos_ / 8 >= bits_.bytes.size())
    fail(ErrorCode::MalformedBitstream, "read past the end of the payload");
  const std::uint32_t b = (bits_.bytes[pos_ / 8] >> (7 - pos_ % 8)) & 1u;
  ++pos_;
  return b;
}

std::uint32_t BitReader::get(int length) {
  std::uint32_t v = 0;
  for (int i = 0; i < length; ++i) v = (v << 1) | bit();
  return v;
}

Bitstream huffman_encode(const HuffmanTable& table, std::span<const std::uint32_t> symbols) {
  if (!table.valid()) fail(ErrorCode::MalformedBitstream, "invalid Huffman table");
  if (table.single_symbol()) {
    const auto only = static_cast<std::uint32_t>(table.alphabet_size() - 1);
    for (auto s : symbols)
      if (s != only) fail(ErrorCode::SymbolOutOfAlphabet, "symbol " + std::to_string(s) + " not in table");
    return {};
  }
  const auto codes = canonical_codes(table);
  BitWriter w;
  for (auto s : symbols) {
    if (s >= table.lengths.size() || table.lengths[s] == 0)
      fail(ErrorCode::SymbolOutOfAlphabet, "symbol " + std::to_string(s) + " not in table");
    w.put(codes[s], table.lengths[s]);
  }
  return std::move(w).finish();
}

std::vector<std::uint32_t> huffman_decode(const HuffmanTable& table, const Bitstream& bits, std::size_t count) {
  if (!table.valid()) fail(ErrorCode::MalformedBitstream, "invalid Huffman table");
  if ((bits.bit_length + 7) / 8 != bits.bytes.size()) fail(ErrorCode::MalformedBitstream, "payload length mismatch");
  if (table.single_symbol()) {
    if (bits.bit_length != 0) fail(ErrorCode::MalformedBitstream, "single-symbol stream carries bits");
    return std::vector<std::uint32_t>(count, static_cast<std::uint32_t>(table.alphabet_size() - 1));
  }
  // Canonical decoding: first code and symbol offset per length.
  std::vector<std::uint32_t> sorted;
  std::array<std::uint32_t, kMaxCodeLength + 1> per_len{};
  for (int len = 1; len <= kMaxCodeLength; ++len)
    for (std::size_t s = 0; s < table.lengths.size(); ++s)
      if (table.lengths[s] == len) {
        sorted.push_back(static_cast<std::uint32_t>(s));
        ++per_len[len];
      }

  std::vector<std::uint32_t> out;
  out.reserve(count);
  BitReader reader(bits);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t code = 0, first = 0;
    std::uint32_t offset = 0;
    bool found = false;
    for (int len = 1; len <= kMaxCodeLength; ++len) {
      code = (code << 1) | reader.bit();
      if (code - first < per_len[len]) {
        out.push_back(sorted[offset + static_cast<std::uint32_t>(code - first)]);
        found = true;
        break;
      }
      offset += per_len[len];
      first = (first + per_len[len]) << 1;
    }
    if (!found) fail(ErrorCode::MalformedBitstream, "no code matches");
  }
  if (reader.position() != bits.bit_length) fail(ErrorCode::MalformedBitstream, "trailing bits after last symbol");
  return out;
}

int raw_bits_per_symbol(int k) {
  int bits = 0;
  while ((1 << bits) < k) ++bits;
  return bits;
}

Bitstream raw_encode(std::span<const std::uint32_t> symbols, int k) {
  const int bits = raw_bits_per_symbol(k);
  BitWriter w;
  for (auto s : symbols) {
    if (s >= static_cast<std::uint32_t>(k)) fail(ErrorCode::SymbolOutOfAlphabet, "index >= K");
    w.put(s, bits);
  }
  return std::move(w).finish();
}

std::vector<std::uint32_t> raw_decode(const Bitstream& bits, std::size_t count, int k) {
  const int width = raw_bits_per_symbol(k);
  if (bits.bit_length != static_cast<std::uint64_t>(width) * count || (bits.bit_length + 7) / 8 != bits.bytes.size())
    fail(ErrorCode::MalformedBitstream, "raw payload length mismatch");
  BitReader reader(bits);
  std::vector<std::uint32_t> out(count);
  for (auto& s : out) s = reader.get(width);
  return out;
}

}  // namespace chc
