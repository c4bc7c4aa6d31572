#include "vdi/util/bytes.hpp"

namespace vdi::util {

void ByteWriter::u32(std::uint32_t v) {
  for (int i = 3; i >= 0; --i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(std::uint64_t v) {
  for (int i = 7; i >= 0; --i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  buf_.insert(buf_.end(), s.begin(), s.end());
}

void ByteWriter::field(const algebra::FieldElement& f) {
  std::size_t w = f.field().byte_width();
  buf_.resize(buf_.size() + w);
  f.write_bytes(std::span<std::uint8_t>(buf_).last(w));
}

void ByteWriter::fields(std::span<const algebra::FieldElement> fs) {
  u32(static_cast<std::uint32_t>(fs.size()));
  for (const auto& f : fs) field(f);
}

void ByteWriter::point(const algebra::GroupPoint& p) {
  std::size_t w = p.curve().point_width();
  buf_.resize(buf_.size() + w);
  p.encode(std::span<std::uint8_t>(buf_).last(w));
}

void ByteWriter::section(std::span<const std::uint8_t> b) {
  u32(static_cast<std::uint32_t>(b.size()));
  bytes(b);
}

std::span<const std::uint8_t> ByteReader::bytes(std::size_t n) {
  if (n > remaining()) throw Error(ErrorCode::MalformedProof, "truncated input");
  auto s = data_.subspan(pos_, n);
  pos_ += n;
  return s;
}

std::uint8_t ByteReader::u8() { return bytes(1)[0]; }

std::uint32_t ByteReader::u32() {
  auto b = bytes(4);
  std::uint32_t v = 0;
  for (auto x : b) v = (v << 8) | x;
  return v;
}

std::uint64_t ByteReader::u64() {
  auto b = bytes(8);
  std::uint64_t v = 0;
  for (auto x : b) v = (v << 8) | x;
  return v;
}

std::string ByteReader::str() {
  auto n = u32();
  auto b = bytes(n);
  return std::string(b.begin(), b.end());
}

algebra::FieldElement ByteReader::field(const algebra::PrimeField& f) {
  return algebra::FieldElement::from_bytes(f, bytes(f.byte_width()));
}

std::vector<algebra::FieldElement> ByteReader::fields(const algebra::PrimeField& f) {
  auto n = u32();
  if (static_cast<std::size_t>(n) * f.byte_width() > remaining()) throw Error(ErrorCode::MalformedProof, "truncated vector");
  std::vector<algebra::FieldElement> out;
  out.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) out.push_back(field(f));
  return out;
}

algebra::GroupPoint ByteReader::point(const algebra::CurveProfile& c) {
  return algebra::GroupPoint::decode(c, bytes(c.point_width()));
}

ByteReader ByteReader::section() {
  auto n = u32();
  return ByteReader(bytes(n));
}

void ByteReader::expect_done() const {
  if (!done()) throw Error(ErrorCode::MalformedProof, "trailing bytes");
}

}  // namespace vdi::util
