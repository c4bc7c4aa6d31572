#include "vdi/transcript/transcript.hpp"

#include <array>

#include "vdi/util/bytes.hpp"

namespace vdi::transcript {

using algebra::FieldElement;

Transcript::Transcript(Mode mode, const algebra::PrimeField& field, std::string_view domain, std::uint64_t seed)
    : mode_(mode), field_(&field) {
  util::Sha256 h;
  h.update("vdi/transcript/v1");
  h.update_framed({reinterpret_cast<const std::uint8_t*>(domain.data()), domain.size()});
  h.update_u64(static_cast<std::uint64_t>(mode));
  h.update(field.modulus().to_hex());
  state_ = h.finish();
  if (mode == Mode::Interactive) verifier_rng_ = std::make_unique<util::Csprng>(seed, domain);
  log_.push_back({LogEntry::Absorb, "domain", {domain.begin(), domain.end()}});
}

Transcript Transcript::fiat_shamir(const algebra::PrimeField& field, std::string_view domain) {
  return Transcript(Mode::FiatShamir, field, domain, 0);
}

Transcript Transcript::interactive(const algebra::PrimeField& field, std::string_view domain,
                                   std::uint64_t verifier_seed) {
  return Transcript(Mode::Interactive, field, domain, verifier_seed);
}

Transcript Transcript::make(Mode mode, const algebra::PrimeField& field, std::string_view domain,
                            std::uint64_t verifier_seed) {
  return Transcript(mode, field, domain, verifier_seed);
}

Transcript::Transcript(Transcript&&) noexcept = default;
Transcript& Transcript::operator=(Transcript&&) noexcept = default;
Transcript::~Transcript() = default;

void Transcript::absorb(std::string_view label, std::span<const std::uint8_t> message) {
  util::Sha256 h;
  h.update("absorb");
  h.update(state_);
  h.update_framed({reinterpret_cast<const std::uint8_t*>(label.data()), label.size()});
  h.update_framed(message);
  state_ = h.finish();
  LogEntry e{LogEntry::Absorb, std::string(label), {}};
  if (record_payloads_) e.bytes.assign(message.begin(), message.end());
  log_.push_back(std::move(e));
}

void Transcript::absorb(std::string_view label, std::string_view message) {
  absorb(label, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(message.data()), message.size()));
}

void Transcript::absorb_field(std::string_view label, const FieldElement& v) { absorb(label, v.to_bytes()); }

void Transcript::absorb_fields(std::string_view label, std::span<const FieldElement> vs) {
  util::ByteWriter w;
  w.fields(vs);
  absorb(label, w.data());
}

void Transcript::absorb_point(std::string_view label, const algebra::GroupPoint& p) { absorb(label, p.encode()); }

void Transcript::absorb_u64(std::string_view label, std::uint64_t v) {
  util::ByteWriter w;
  w.u64(v);
  absorb(label, w.data());
}

FieldElement Transcript::challenge(std::string_view label) {
  std::array<std::uint8_t, 64> wide{};
  if (mode_ == Mode::Interactive) {
    verifier_rng_->fill(wide);
    FieldElement c = FieldElement::from_wide_bytes(*field_, wide);
    absorb(std::string(label) + "/verifier", c.to_bytes());
    log_.back().kind = LogEntry::Challenge;
    return c;
  }
  util::Sha256 h;
  h.update("challenge");
  h.update(state_);
  h.update_framed({reinterpret_cast<const std::uint8_t*>(label.data()), label.size()});
  state_ = h.finish();
  auto d0 = util::Sha256().update(state_).update_u64(0).finish();
  auto d1 = util::Sha256().update(state_).update_u64(1).finish();
  std::copy(d0.begin(), d0.end(), wide.begin());
  std::copy(d1.begin(), d1.end(), wide.begin() + 32);
  log_.push_back({LogEntry::Challenge, std::string(label), {}});
  return FieldElement::from_wide_bytes(*field_, wide);
}

std::vector<FieldElement> Transcript::challenges(std::string_view label, std::size_t n) {
  std::vector<FieldElement> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(challenge(std::string(label) + "/" + std::to_string(i)));
  return out;
}

}  // namespace vdi::transcript
