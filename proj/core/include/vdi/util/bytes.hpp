#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vdi/algebra/curve.hpp"

namespace vdi::util {

/// Append-only big-endian encoder used for transcripts and proof files.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
  void str(std::string_view s);
  void field(const algebra::FieldElement& f);
  void fields(std::span<const algebra::FieldElement> fs);
  void point(const algebra::GroupPoint& p);
  /// u32 length prefix followed by the section bytes.
  void section(std::span<const std::uint8_t> b);

  const std::vector<std::uint8_t>& data() const { return buf_; }
  std::vector<std::uint8_t> take() { return std::move(buf_); }
  std::size_t size() const { return buf_.size(); }

 private:
  std::vector<std::uint8_t> buf_;
};

/// Strict decoder; every failure throws MalformedProof.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  std::span<const std::uint8_t> bytes(std::size_t n);
  std::string str();
  algebra::FieldElement field(const algebra::PrimeField& f);
  std::vector<algebra::FieldElement> fields(const algebra::PrimeField& f);
  algebra::GroupPoint point(const algebra::CurveProfile& c);
  ByteReader section();

  bool done() const { return pos_ == data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }
  void expect_done() const;

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace vdi::util
