#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vdi/algebra/curve.hpp"
#include "vdi/util/csprng.hpp"
#include "vdi/util/sha256.hpp"

namespace vdi::transcript {

enum class Mode : std::uint8_t { FiatShamir = 0, Interactive = 1 };

struct LogEntry {
  enum Kind : std::uint8_t { Absorb, Challenge } kind;
  std::string label;
  std::vector<std::uint8_t> bytes;
};

/// Challenge channel between prover and verifier.
///
/// In Fiat-Shamir mode challenges are hashed from the running state. In
/// interactive mode they come from the verifier's random stream; both sides
/// hold the same seed so the simulation stays in one process. Either way the
/// drawn challenge is absorbed, so later messages depend on it.
class Transcript {
 public:
  static Transcript fiat_shamir(const algebra::PrimeField& field, std::string_view domain);
  static Transcript interactive(const algebra::PrimeField& field, std::string_view domain,
                                std::uint64_t verifier_seed);
  static Transcript make(Mode mode, const algebra::PrimeField& field, std::string_view domain,
                         std::uint64_t verifier_seed = 0);

  Transcript(Transcript&&) noexcept;
  Transcript& operator=(Transcript&&) noexcept;
  ~Transcript();

  void absorb(std::string_view label, std::span<const std::uint8_t> message);
  void absorb(std::string_view label, std::string_view message);
  void absorb_field(std::string_view label, const algebra::FieldElement& v);
  void absorb_fields(std::string_view label, std::span<const algebra::FieldElement> vs);
  void absorb_point(std::string_view label, const algebra::GroupPoint& p);
  void absorb_u64(std::string_view label, std::uint64_t v);

  algebra::FieldElement challenge(std::string_view label);
  std::vector<algebra::FieldElement> challenges(std::string_view label, std::size_t n);

  Mode mode() const { return mode_; }
  const algebra::PrimeField& field() const { return *field_; }
  const std::vector<LogEntry>& log() const { return log_; }
  /// Running hash state; equal logs give equal states.
  const util::Digest& state() const { return state_; }
  /// Keep absorbed payloads in the log (off by default; labels are always kept).
  void set_record_payloads(bool on) { record_payloads_ = on; }

 private:
  Transcript(Mode mode, const algebra::PrimeField& field, std::string_view domain, std::uint64_t seed);

  Mode mode_;
  const algebra::PrimeField* field_;
  util::Digest state_{};
  std::unique_ptr<util::Csprng> verifier_rng_;
  std::vector<LogEntry> log_;
  bool record_payloads_ = false;
};

}  // namespace vdi::transcript
