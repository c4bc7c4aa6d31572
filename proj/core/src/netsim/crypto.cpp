#include "vdi/netsim/crypto.hpp"

#include <openssl/core_names.h>
#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/kdf.h>

#include "vdi/algebra/generators.hpp"
#include "vdi/error.hpp"
#include "vdi/util/bytes.hpp"

namespace vdi::netsim {

namespace {

FieldElement hash_to_scalar(const PrimeField& f, std::string_view label, std::span<const std::uint8_t> a,
                            std::span<const std::uint8_t> b) {
  std::array<std::uint8_t, 64> wide{};
  for (std::uint64_t half = 0; half < 2; ++half) {
    util::Sha256 h;
    h.update(label).update_u64(half).update_framed(a).update_framed(b);
    auto d = h.finish();
    std::copy(d.begin(), d.end(), wide.begin() + static_cast<std::ptrdiff_t>(32 * half));
  }
  return FieldElement::from_wide_bytes(f, wide);
}

struct CipherCtx {
  EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
  ~CipherCtx() { EVP_CIPHER_CTX_free(ctx); }
};

void ossl_check(int ok, const char* what) {
  if (ok != 1) throw Error(ErrorCode::InvalidArgument, std::string("OpenSSL failure: ") + what);
}

std::array<std::uint8_t, 16> frame_header(std::uint32_t from, std::uint32_t to, std::uint64_t ctr) {
  util::ByteWriter w;
  w.u32(from);
  w.u32(to);
  w.u64(ctr);
  std::array<std::uint8_t, 16> h{};
  std::copy(w.data().begin(), w.data().end(), h.begin());
  return h;
}

}  // namespace

// ---------------------------------------------------------------------------

const GroupPoint& key_generator(const CurveProfile& curve) {
  return (*algebra::cached_generators(curve, 1, "vdi/netsim/keys"))[0];
}

Keypair Keypair::generate(const CurveProfile& curve, util::Csprng& rng) {
  FieldElement sk = rng.field_element(curve.scalar_field());
  while (sk.is_zero()) sk = rng.field_element(curve.scalar_field());
  return {sk, key_generator(curve) * sk};
}

std::vector<std::uint8_t> Signature::encode() const {
  util::ByteWriter w;
  w.point(r);
  w.field(s);
  return w.take();
}

Signature Signature::decode(const CurveProfile& curve, std::span<const std::uint8_t> bytes) {
  util::ByteReader r(bytes);
  Signature sig{r.point(curve), r.field(curve.scalar_field())};
  r.expect_done();
  return sig;
}

Signature schnorr_sign(const Keypair& key, std::span<const std::uint8_t> msg) {
  const CurveProfile& curve = key.pub.curve();
  const PrimeField& f = curve.scalar_field();
  auto sk = key.secret.to_bytes();
  FieldElement k = hash_to_scalar(f, "vdi/schnorr/nonce", sk, msg);
  if (k.is_zero()) k = FieldElement::one(f);
  OPENSSL_cleanse(sk.data(), sk.size());
  GroupPoint r = key_generator(curve) * k;
  util::ByteWriter w;
  w.point(r);
  w.point(key.pub);
  FieldElement e = hash_to_scalar(f, "vdi/schnorr/challenge", w.data(), msg);
  return {r, k + e * key.secret};
}

bool schnorr_verify(const GroupPoint& pub, std::span<const std::uint8_t> msg, const Signature& sig) {
  if (pub.is_infinity() || sig.r.is_infinity()) return false;
  const CurveProfile& curve = pub.curve();
  if (&sig.r.curve() != &curve || &sig.s.field() != &curve.scalar_field()) return false;
  util::ByteWriter w;
  w.point(sig.r);
  w.point(pub);
  FieldElement e = hash_to_scalar(curve.scalar_field(), "vdi/schnorr/challenge", w.data(), msg);
  return key_generator(curve) * sig.s == sig.r + pub * e;
}

// ---------------------------------------------------------------------------

std::string_view to_string(TeeType t) { return t == TeeType::Gpu ? "gpu" : "cpu"; }

util::Digest measure(std::span<const std::uint8_t> code, std::string_view runtime_version) {
  util::Sha256 h;
  h.update("vdi/measurement").update_framed(code);
  h.update_framed(std::span(reinterpret_cast<const std::uint8_t*>(runtime_version.data()), runtime_version.size()));
  return h.finish();
}

std::vector<std::uint8_t> Claims::encode() const {
  util::ByteWriter w;
  w.str("vdi/claims/v1");
  w.u32(node);
  w.u8(static_cast<std::uint8_t>(tee));
  w.bytes(measurement);
  w.str(runtime_version);
  w.u64(nonce);
  return w.take();
}

AttestationEvidence attest(const Keypair& identity, std::uint32_t node, TeeType tee,
                           std::span<const std::uint8_t> code, std::string_view runtime_version,
                           std::uint64_t nonce) {
  AttestationEvidence ev;
  ev.claims = {node, tee, measure(code, runtime_version), std::string(runtime_version), nonce};
  ev.signature = schnorr_sign(identity, ev.claims.encode());
  return ev;
}

bool verify_evidence(const AttestationEvidence& ev, const GroupPoint& pub) {
  return schnorr_verify(pub, ev.claims.encode(), ev.signature);
}

bool verify_evidence(const AttestationEvidence& ev, const GroupPoint& pub, const util::Digest& expected_measurement,
                     std::uint64_t nonce) {
  return ev.claims.measurement == expected_measurement && ev.claims.nonce == nonce && verify_evidence(ev, pub);
}

// ---------------------------------------------------------------------------

ModpGroup::ModpGroup(const U256& p, std::uint64_t g)
    : field_(std::make_unique<PrimeField>(p, "Z_p")), g_(FieldElement::from_u64(*field_, g)) {
  if (g_.is_zero() || g_.is_one()) throw Error(ErrorCode::InvalidArgument, "degenerate generator");
}

FieldElement ModpGroup::public_value(const U256& secret) const { return g_.pow(secret); }

FieldElement ModpGroup::shared_secret(const FieldElement& peer_public, const U256& secret) const {
  if (&peer_public.field() != field_.get() || peer_public.is_zero()) {
    throw Error(ErrorCode::InvalidArgument, "peer value outside the group");
  }
  return peer_public.pow(secret);
}

std::vector<std::uint8_t> ecdh(const FieldElement& secret, const GroupPoint& peer) {
  if (peer.is_infinity()) throw Error(ErrorCode::InvalidArgument, "peer key at infinity");
  GroupPoint s = peer * secret;
  if (s.is_infinity()) throw Error(ErrorCode::InvalidArgument, "degenerate shared point");
  return s.x().to_bytes();
}

std::vector<std::uint8_t> hkdf_sha256(std::span<const std::uint8_t> ikm, std::span<const std::uint8_t> salt,
                                      std::span<const std::uint8_t> info, std::size_t length) {
  EVP_KDF* kdf = EVP_KDF_fetch(nullptr, "HKDF", nullptr);
  if (!kdf) throw Error(ErrorCode::InvalidArgument, "HKDF unavailable");
  EVP_KDF_CTX* ctx = EVP_KDF_CTX_new(kdf);
  EVP_KDF_free(kdf);
  char digest[] = "SHA256";
  std::vector<std::uint8_t> k(ikm.begin(), ikm.end()), s(salt.begin(), salt.end()), i(info.begin(), info.end());
  OSSL_PARAM params[] = {
      OSSL_PARAM_construct_utf8_string(OSSL_KDF_PARAM_DIGEST, digest, 0),
      OSSL_PARAM_construct_octet_string(OSSL_KDF_PARAM_KEY, k.data(), k.size()),
      OSSL_PARAM_construct_octet_string(OSSL_KDF_PARAM_SALT, s.data(), s.size()),
      OSSL_PARAM_construct_octet_string(OSSL_KDF_PARAM_INFO, i.data(), i.size()),
      OSSL_PARAM_construct_end(),
  };
  std::vector<std::uint8_t> out(length);
  int ok = EVP_KDF_derive(ctx, out.data(), out.size(), params);
  EVP_KDF_CTX_free(ctx);
  OPENSSL_cleanse(k.data(), k.size());
  ossl_check(ok, "HKDF derive");
  return out;
}

// ---------------------------------------------------------------------------

ChannelEnd::ChannelEnd(std::uint32_t self, std::uint32_t peer, std::span<const std::uint8_t> session_key)
    : self_(self), peer_(peer) {
  if (session_key.size() != key_.size()) throw Error(ErrorCode::InvalidArgument, "session key must be 32 bytes");
  std::copy(session_key.begin(), session_key.end(), key_.begin());
}

ChannelEnd::~ChannelEnd() { OPENSSL_cleanse(key_.data(), key_.size()); }

ChannelEnd::ChannelEnd(ChannelEnd&& o) noexcept
    : self_(o.self_), peer_(o.peer_), key_(o.key_), send_ctr_(o.send_ctr_), recv_ctr_(o.recv_ctr_),
      destroyed_(o.destroyed_) {
  OPENSSL_cleanse(o.key_.data(), o.key_.size());
  o.destroyed_ = true;
}

ChannelEnd& ChannelEnd::operator=(ChannelEnd&& o) noexcept {
  if (this != &o) {
    self_ = o.self_;
    peer_ = o.peer_;
    key_ = o.key_;
    send_ctr_ = o.send_ctr_;
    recv_ctr_ = o.recv_ctr_;
    destroyed_ = o.destroyed_;
    OPENSSL_cleanse(o.key_.data(), o.key_.size());
    o.destroyed_ = true;
  }
  return *this;
}

void ChannelEnd::check_alive() const {
  if (destroyed_) throw Error(ErrorCode::PoisonedRead, "channel key was destroyed");
}

std::vector<std::uint8_t> ChannelEnd::seal(std::span<const std::uint8_t> payload) {
  check_alive();
  const std::uint64_t ctr = ++send_ctr_;
  auto header = frame_header(self_, peer_, ctr);
  std::array<std::uint8_t, 12> iv{};
  std::copy(header.begin(), header.begin() + 4, iv.begin());
  std::copy(header.begin() + 8, header.end(), iv.begin() + 4);

  std::vector<std::uint8_t> frame(header.begin(), header.end());
  frame.resize(header.size() + payload.size() + 16);
  CipherCtx c;
  int len = 0;
  ossl_check(EVP_EncryptInit_ex(c.ctx, EVP_aes_256_gcm(), nullptr, key_.data(), iv.data()), "encrypt init");
  ossl_check(EVP_EncryptUpdate(c.ctx, nullptr, &len, header.data(), static_cast<int>(header.size())), "aad");
  ossl_check(EVP_EncryptUpdate(c.ctx, frame.data() + header.size(), &len, payload.data(),
                               static_cast<int>(payload.size())),
             "encrypt");
  ossl_check(EVP_EncryptFinal_ex(c.ctx, frame.data() + header.size() + len, &len), "encrypt final");
  ossl_check(EVP_CIPHER_CTX_ctrl(c.ctx, EVP_CTRL_GCM_GET_TAG, 16, frame.data() + header.size() + payload.size()),
             "tag");
  return frame;
}

std::vector<std::uint8_t> ChannelEnd::open(std::span<const std::uint8_t> frame) {
  check_alive();
  if (frame.size() < kFrameOverhead) throw Error(ErrorCode::AuthFailure, "frame too short");
  util::ByteReader r(frame.first(16));
  std::uint32_t from = r.u32(), to = r.u32();
  std::uint64_t ctr = r.u64();
  if (from != peer_ || to != self_) throw Error(ErrorCode::AuthFailure, "frame addressed to another channel");
  if (ctr <= recv_ctr_) throw Error(ErrorCode::ReplayDetected, "counter " + std::to_string(ctr) + " already seen");

  std::array<std::uint8_t, 12> iv{};
  std::copy(frame.begin(), frame.begin() + 4, iv.begin());
  std::copy(frame.begin() + 8, frame.begin() + 16, iv.begin() + 4);
  const std::size_t body = frame.size() - kFrameOverhead;
  std::vector<std::uint8_t> out(body);
  std::array<std::uint8_t, 16> tag{};
  std::copy(frame.end() - 16, frame.end(), tag.begin());
  CipherCtx c;
  int len = 0;
  ossl_check(EVP_DecryptInit_ex(c.ctx, EVP_aes_256_gcm(), nullptr, key_.data(), iv.data()), "decrypt init");
  ossl_check(EVP_DecryptUpdate(c.ctx, nullptr, &len, frame.data(), 16), "aad");
  ossl_check(EVP_DecryptUpdate(c.ctx, out.data(), &len, frame.data() + 16, static_cast<int>(body)), "decrypt");
  ossl_check(EVP_CIPHER_CTX_ctrl(c.ctx, EVP_CTRL_GCM_SET_TAG, 16, tag.data()), "set tag");
  if (EVP_DecryptFinal_ex(c.ctx, out.data() + len, &len) != 1) {
    OPENSSL_cleanse(out.data(), out.size());
    throw Error(ErrorCode::AuthFailure, "authentication tag mismatch");
  }
  recv_ctr_ = ctr;
  return out;
}

util::Digest ChannelEnd::key_fingerprint() const {
  check_alive();
  return util::sha256(key_);
}

void ChannelEnd::destroy() {
  OPENSSL_cleanse(key_.data(), key_.size());
  destroyed_ = true;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::uint8_t> handshake_message(std::uint32_t node, const GroupPoint& eph) {
  util::ByteWriter w;
  w.str("vdi/handshake/v1");
  w.u32(node);
  w.point(eph);
  return w.take();
}

}  // namespace

Handshake make_handshake(const Keypair& identity, std::uint32_t node, const Keypair& ephemeral) {
  return {node, ephemeral.pub, schnorr_sign(identity, handshake_message(node, ephemeral.pub))};
}

bool check_handshake(const Handshake& h, const GroupPoint& identity_pub) {
  return schnorr_verify(identity_pub, handshake_message(h.node, h.ephemeral), h.signature);
}

ChannelEnd finish_handshake(std::uint32_t self, const Keypair& ephemeral, const Handshake& peer) {
  auto secret = ecdh(ephemeral.secret, peer.ephemeral);
  util::ByteWriter info;
  bool low = self < peer.node;
  info.u32(low ? self : peer.node);
  info.u32(low ? peer.node : self);
  info.point(low ? ephemeral.pub : peer.ephemeral);
  info.point(low ? peer.ephemeral : ephemeral.pub);
  static constexpr std::string_view kSalt = "vdi/netsim/channel";
  auto key = hkdf_sha256(secret, std::span(reinterpret_cast<const std::uint8_t*>(kSalt.data()), kSalt.size()),
                         info.data(), 32);
  ChannelEnd end(self, peer.node, key);
  OPENSSL_cleanse(key.data(), key.size());
  OPENSSL_cleanse(secret.data(), secret.size());
  return end;
}

}  // namespace vdi::netsim
