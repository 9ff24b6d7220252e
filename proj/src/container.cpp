#include "chc/container.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

#include "chc/bytes.hpp"
#include "chc/error.hpp"

namespace chc {
namespace {

constexpr char kMagic[4] = {'C', 'H', 'C', '1'};

template <typename Int>
Int fixed_point(double v, int frac_bits) {
  const double scaled = std::round(v * static_cast<double>(1 << frac_bits));
  const double lo = static_cast<double>(std::numeric_limits<Int>::min());
  const double hi = static_cast<double>(std::numeric_limits<Int>::max());
  return static_cast<Int>(std::clamp(scaled, lo, hi));
}

double from_fixed(double v, int frac_bits) { return v / static_cast<double>(1 << frac_bits); }

}  // namespace

std::string MethodDescriptor::summary() const {
  std::ostringstream s;
  switch (method) {
    case Method::PerPixel: s << "pixel"; break;
    case Method::Grid: s << "grid(" << grid.cell_size << ")"; break;
    case Method::Slic: s << "slic(S=" << slic.region_size << ",m=" << slic.compactness << ")"; break;
    case Method::QuickShift:
      s << "quickshift(r=" << quickshift.ratio << ",k=" << quickshift.kernel_size << ",d=" << quickshift.max_dist
        << ")";
      break;
  }
  return s.str();
}

MethodDescriptor quantize_method(MethodDescriptor m) {
  m.grid.cell_size = std::clamp(m.grid.cell_size, 0, 0xFFFF);
  m.slic.region_size = std::clamp(m.slic.region_size, 0, 0xFFFF);
  m.slic.compactness = from_fixed(fixed_point<std::uint16_t>(m.slic.compactness, 8), 8);
  m.quickshift.ratio = from_fixed(fixed_point<std::uint16_t>(m.quickshift.ratio, 16), 16);
  m.quickshift.kernel_size = from_fixed(fixed_point<std::uint16_t>(m.quickshift.kernel_size, 8), 8);
  m.quickshift.max_dist = from_fixed(fixed_point<std::uint16_t>(m.quickshift.max_dist, 8), 8);
  return m;
}

QuantizedCorrection QuantizedCorrection::quantize(const CorrectionParams& p) {
  return {fixed_point<std::int16_t>(p.scale_cb, 12), fixed_point<std::int16_t>(p.offset_cb, 14),
          fixed_point<std::int16_t>(p.scale_cr, 12), fixed_point<std::int16_t>(p.offset_cr, 14)};
}

CorrectionParams QuantizedCorrection::dequantize() const {
  return {from_fixed(scale_cb, 12), from_fixed(offset_cb, 14), from_fixed(scale_cr, 12), from_fixed(offset_cr, 14)};
}

std::vector<std::uint8_t> serialize_container(const ChcContainer& c) {
  ByteWriter out;
  out.raw(kMagic, 4);
  out.u8(c.version);
  out.u32(c.width);
  out.u32(c.height);
  out.u8(static_cast<std::uint8_t>(c.method.k));
  out.u64(c.method.model_hash);
  out.u8(static_cast<std::uint8_t>(c.method.method));
  switch (c.method.method) {
    case Method::PerPixel: break;
    case Method::Grid: out.u16(static_cast<std::uint16_t>(c.method.grid.cell_size)); break;
    case Method::Slic:
      out.u16(static_cast<std::uint16_t>(c.method.slic.region_size));
      out.u16(fixed_point<std::uint16_t>(c.method.slic.compactness, 8));
      break;
    case Method::QuickShift:
      out.u16(fixed_point<std::uint16_t>(c.method.quickshift.ratio, 16));
      out.u16(fixed_point<std::uint16_t>(c.method.quickshift.kernel_size, 8));
      out.u16(fixed_point<std::uint16_t>(c.method.quickshift.max_dist, 8));
      break;
  }
  out.i16(c.correction.scale_cb);
  out.i16(c.correction.offset_cb);
  out.i16(c.correction.scale_cr);
  out.i16(c.correction.offset_cr);
  out.u8(static_cast<std::uint8_t>(c.packing));
  out.u32(c.symbol_count);
  if (c.packing == Packing::Huffman) {
    out.u8(static_cast<std::uint8_t>(c.table.alphabet_size()));
    out.bytes(c.table.lengths);
  }
  out.u32(static_cast<std::uint32_t>(c.payload.bit_length));
  out.bytes(c.payload.bytes);
  out.u64(fnv1a64(out.data()));
  return out.take();
}

ChcContainer parse_container(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 + 4) fail(ErrorCode::MalformedBitstream, "container too short");
  const auto body = bytes.first(bytes.size() - 8);
  ByteReader tail(bytes.last(8), ErrorCode::MalformedBitstream);
  if (fnv1a64(body) != tail.u64()) fail(ErrorCode::ChecksumMismatch, "container checksum mismatch");

  ByteReader in(body, ErrorCode::MalformedBitstream);
  const auto magic = in.bytes(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) fail(ErrorCode::MalformedBitstream, "missing CHC1 magic");
  ChcContainer c;
  c.version = in.u8();
  if (c.version != kContainerVersion) fail(ErrorCode::MalformedBitstream, "unsupported container version");
  c.width = in.u32();
  c.height = in.u32();
  c.method.k = in.u8();
  c.method.model_hash = in.u64();
  const std::uint8_t method = in.u8();
  if (method > 3) fail(ErrorCode::MalformedBitstream, "unknown region method");
  c.method.method = static_cast<Method>(method);
  switch (c.method.method) {
    case Method::PerPixel: break;
    case Method::Grid: c.method.grid.cell_size = in.u16(); break;
    case Method::Slic:
      c.method.slic.region_size = in.u16();
      c.method.slic.compactness = from_fixed(in.u16(), 8);
      break;
    case Method::QuickShift:
      c.method.quickshift.ratio = from_fixed(in.u16(), 16);
      c.method.quickshift.kernel_size = from_fixed(in.u16(), 8);
      c.method.quickshift.max_dist = from_fixed(in.u16(), 8);
      break;
  }
  c.correction.scale_cb = in.i16();
  c.correction.offset_cb = in.i16();
  c.correction.scale_cr = in.i16();
  c.correction.offset_cr = in.i16();
  const std::uint8_t packing = in.u8();
  if (packing > 1) fail(ErrorCode::MalformedBitstream, "unknown packing mode");
  c.packing = static_cast<Packing>(packing);
  c.symbol_count = in.u32();
  if (c.packing == Packing::Huffman) {
    const std::uint8_t alphabet = in.u8();
    const auto lengths = in.bytes(alphabet);
    c.table.lengths.assign(lengths.begin(), lengths.end());
    if (!c.table.valid()) fail(ErrorCode::MalformedBitstream, "invalid Huffman table");
  }
  c.payload.bit_length = in.u32();
  const std::uint64_t payload_len = (c.payload.bit_length + 7) / 8;
  if (payload_len != in.remaining()) fail(ErrorCode::MalformedBitstream, "payload length mismatch");
  const auto payload = in.bytes(static_cast<std::size_t>(payload_len));
  c.payload.bytes.assign(payload.begin(), payload.end());
  if (c.method.k < 1 || c.width < 1 || c.height < 1) fail(ErrorCode::MalformedBitstream, "empty image or K = 0");
  return c;
}

void pack_indices(ChcContainer& c, std::span<const std::uint8_t> indices) {
  const int k = c.method.k;
  std::vector<std::uint32_t> raw(indices.begin(), indices.end());
  c.symbol_count = static_cast<std::uint32_t>(raw.size());

  ChcContainer raw_variant = c;
  raw_variant.packing = Packing::Raw;
  raw_variant.table = {};
  raw_variant.payload = raw_encode(raw, k);

  if (raw.empty()) {
    c = std::move(raw_variant);
    return;
  }
  std::vector<std::int32_t> values(raw.begin(), raw.end());
  const auto deltas = dpcm_transform(values, Direction::Forward);
  std::vector<std::uint32_t> symbols(deltas.size());
  std::transform(deltas.begin(), deltas.end(), symbols.begin(), zigzag);
  std::vector<std::uint64_t> freqs(*std::max_element(symbols.begin(), symbols.end()) + 1, 0);
  for (auto s : symbols) ++freqs[s];

  ChcContainer huff_variant = c;
  huff_variant.packing = Packing::Huffman;
  try {
    huff_variant.table = build_huffman(freqs);
  } catch (const Error&) {
    c = std::move(raw_variant);  // code too long for the table format
    return;
  }
  huff_variant.payload = huffman_encode(huff_variant.table, symbols);

  const std::size_t raw_size = serialize_container(raw_variant).size();
  const std::size_t huff_size = serialize_container(huff_variant).size();
  c = huff_size < raw_size ? std::move(huff_variant) : std::move(raw_variant);
}

std::vector<std::uint8_t> unpack_indices(const ChcContainer& c) {
  std::vector<std::uint32_t> values;
  if (c.packing == Packing::Raw) {
    values = raw_decode(c.payload, c.symbol_count, c.method.k);
  } else {
    const auto symbols = huffman_decode(c.table, c.payload, c.symbol_count);
    std::vector<std::int32_t> deltas(symbols.size());
    std::transform(symbols.begin(), symbols.end(), deltas.begin(), unzigzag);
    const auto restored = dpcm_transform(deltas, Direction::Inverse);
    values.assign(restored.begin(), restored.end());
  }
  std::vector<std::uint8_t> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] >= static_cast<std::uint32_t>(c.method.k))
      fail(ErrorCode::MalformedBitstream, "decoded branch index >= K");
    out[i] = static_cast<std::uint8_t>(values[i]);
  }
  return out;
}

}  // namespace chc
