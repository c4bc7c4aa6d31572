#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string_view>

#include "vdi/algebra/field.hpp"

namespace vdi::util {

/// ChaCha20 keystream generator. Seeded instances are reproducible; the
/// default-seeded one draws its key from the OS entropy pool.
///
/// Satisfies UniformRandomBitGenerator so it plugs into <random>.
class Csprng {
 public:
  using result_type = std::uint64_t;

  static Csprng from_entropy();
  explicit Csprng(std::uint64_t seed);
  /// Independent stream derived from a seed and a label.
  Csprng(std::uint64_t seed, std::string_view label);
  explicit Csprng(const std::array<std::uint8_t, 32>& key);

  ~Csprng();
  Csprng(Csprng&&) noexcept;
  Csprng& operator=(Csprng&&) noexcept;
  Csprng(const Csprng&) = delete;
  Csprng& operator=(const Csprng&) = delete;

  void fill(std::span<std::uint8_t> out);
  std::uint64_t next_u64();
  std::uint64_t operator()() { return next_u64(); }
  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return std::numeric_limits<std::uint64_t>::max(); }

  /// Uniform in [0, bound) without modulo bias.
  std::uint64_t uniform(std::uint64_t bound);
  /// Uniform in (0, 1).
  double uniform_open01();
  /// Uniform scalar via 512-bit wide reduction.
  algebra::FieldElement field_element(const algebra::PrimeField& f);
  /// Child generator keyed from this stream's output.
  Csprng fork(std::string_view label);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace vdi::util
