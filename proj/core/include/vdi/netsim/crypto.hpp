#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "vdi/algebra/curve.hpp"
#include "vdi/util/csprng.hpp"
#include "vdi/util/sha256.hpp"

namespace vdi::netsim {

using algebra::CurveProfile;
using algebra::FieldElement;
using algebra::GroupPoint;
using algebra::PrimeField;
using algebra::U256;

// ---------------------------------------------------------------------------
// Schnorr signatures over a curve profile

struct Keypair {
  FieldElement secret;
  GroupPoint pub;

  static Keypair generate(const CurveProfile& curve, util::Csprng& rng);
};

/// Base point used for identity and ephemeral keys.
const GroupPoint& key_generator(const CurveProfile& curve);

struct Signature {
  GroupPoint r;
  FieldElement s;

  std::vector<std::uint8_t> encode() const;
  static Signature decode(const CurveProfile& curve, std::span<const std::uint8_t> bytes);
};

/// Nonce is derived from the secret and message, so signing is deterministic.
Signature schnorr_sign(const Keypair& key, std::span<const std::uint8_t> msg);
bool schnorr_verify(const GroupPoint& pub, std::span<const std::uint8_t> msg, const Signature& sig);

// ---------------------------------------------------------------------------
// Attestation

enum class TeeType : std::uint8_t { Cpu = 0, Gpu = 1 };
std::string_view to_string(TeeType t);

/// Measurement = H(code || runtime version).
util::Digest measure(std::span<const std::uint8_t> code, std::string_view runtime_version);

struct Claims {
  std::uint32_t node = 0;
  TeeType tee = TeeType::Cpu;
  util::Digest measurement{};
  std::string runtime_version;
  std::uint64_t nonce = 0;  // orchestrator freshness challenge

  std::vector<std::uint8_t> encode() const;
};

struct AttestationEvidence {
  Claims claims;
  Signature signature;
};

AttestationEvidence attest(const Keypair& identity, std::uint32_t node, TeeType tee,
                           std::span<const std::uint8_t> code, std::string_view runtime_version,
                           std::uint64_t nonce);
/// Signature check only.
bool verify_evidence(const AttestationEvidence& ev, const GroupPoint& pub);
/// Signature plus expected measurement and nonce.
bool verify_evidence(const AttestationEvidence& ev, const GroupPoint& pub, const util::Digest& expected_measurement,
                     std::uint64_t nonce);

// ---------------------------------------------------------------------------
// Key agreement

/// Multiplicative group Z_p^* with a chosen generator.
class ModpGroup {
 public:
  ModpGroup(const U256& p, std::uint64_t g);

  const PrimeField& field() const { return *field_; }
  const FieldElement& generator() const { return g_; }
  FieldElement public_value(const U256& secret) const;
  FieldElement shared_secret(const FieldElement& peer_public, const U256& secret) const;

 private:
  std::unique_ptr<PrimeField> field_;
  FieldElement g_;
};

/// x-coordinate encoding of secret * peer.
std::vector<std::uint8_t> ecdh(const FieldElement& secret, const GroupPoint& peer);

/// HKDF-SHA256.
std::vector<std::uint8_t> hkdf_sha256(std::span<const std::uint8_t> ikm, std::span<const std::uint8_t> salt,
                                      std::span<const std::uint8_t> info, std::size_t length);

// ---------------------------------------------------------------------------
// AES-256-GCM channel

/// One side of an authenticated channel. Frames carry (sender, receiver,
/// counter) as associated data; the counter doubles as the GCM nonce.
class ChannelEnd {
 public:
  ChannelEnd(std::uint32_t self, std::uint32_t peer, std::span<const std::uint8_t> session_key);
  ~ChannelEnd();
  ChannelEnd(ChannelEnd&&) noexcept;
  ChannelEnd& operator=(ChannelEnd&&) noexcept;
  ChannelEnd(const ChannelEnd&) = delete;
  ChannelEnd& operator=(const ChannelEnd&) = delete;

  std::uint32_t self() const { return self_; }
  std::uint32_t peer() const { return peer_; }
  std::uint64_t sent() const { return send_ctr_; }
  std::uint64_t last_received() const { return recv_ctr_; }

  std::vector<std::uint8_t> seal(std::span<const std::uint8_t> payload);
  /// Throws ReplayDetected for a counter at or below the last accepted one,
  /// AuthFailure on any authentication failure, PoisonedRead once destroyed.
  std::vector<std::uint8_t> open(std::span<const std::uint8_t> frame);

  /// SHA-256 of the session key, for comparing endpoints without exposing it.
  util::Digest key_fingerprint() const;
  /// Zeroizes the key; every later use throws PoisonedRead.
  void destroy();
  bool destroyed() const { return destroyed_; }

 private:
  std::uint32_t self_;
  std::uint32_t peer_;
  std::array<std::uint8_t, 32> key_{};
  std::uint64_t send_ctr_ = 0;
  std::uint64_t recv_ctr_ = 0;
  bool destroyed_ = false;

  void check_alive() const;
};

/// Frame layout: u32 sender, u32 receiver, u64 counter, ciphertext, 16-byte tag.
inline constexpr std::size_t kFrameOverhead = 4 + 4 + 8 + 16;

/// Ephemeral ECDH, each half signed by the owner's identity key.
struct Handshake {
  std::uint32_t node = 0;
  GroupPoint ephemeral;
  Signature signature;
};

Handshake make_handshake(const Keypair& identity, std::uint32_t node, const Keypair& ephemeral);
bool check_handshake(const Handshake& h, const GroupPoint& identity_pub);
/// Both ends call this with their own ephemeral secret and the peer's half.
ChannelEnd finish_handshake(std::uint32_t self, const Keypair& ephemeral, const Handshake& peer);

}  // namespace vdi::netsim
