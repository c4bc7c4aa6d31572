#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>

namespace vdi::util {

using Digest = std::array<std::uint8_t, 32>;

/// Incremental SHA-256 (OpenSSL EVP underneath).
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256& other);
  Sha256& operator=(const Sha256& other);
  Sha256(Sha256&&) noexcept;
  Sha256& operator=(Sha256&&) noexcept;

  Sha256& update(std::span<const std::uint8_t> data);
  Sha256& update(std::string_view s);
  /// Appends a 64-bit big-endian length then the bytes.
  Sha256& update_framed(std::span<const std::uint8_t> data);
  Sha256& update_u64(std::uint64_t v);
  Digest finish();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

Digest sha256(std::span<const std::uint8_t> data);
Digest sha256(std::string_view s);

std::string to_hex(std::span<const std::uint8_t> bytes);

}  // namespace vdi::util
