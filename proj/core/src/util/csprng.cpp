#include "vdi/util/csprng.hpp"

#include <openssl/evp.h>
#include <openssl/rand.h>

#include <cstring>
#include <stdexcept>
#include <vector>

#include "vdi/util/sha256.hpp"

namespace vdi::util {

struct Csprng::Impl {
  EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
  std::array<std::uint8_t, 4096> buf{};
  std::size_t pos = 4096;

  explicit Impl(const std::array<std::uint8_t, 32>& key) {
    std::uint8_t iv[16] = {0};
    if (!ctx || EVP_EncryptInit_ex(ctx, EVP_chacha20(), nullptr, key.data(), iv) != 1) {
      throw std::runtime_error("chacha20 init failed");
    }
  }
  ~Impl() { EVP_CIPHER_CTX_free(ctx); }

  void refill() {
    static const std::array<std::uint8_t, 4096> zeros{};
    int len = 0;
    EVP_EncryptUpdate(ctx, buf.data(), &len, zeros.data(), static_cast<int>(zeros.size()));
    pos = 0;
  }
};

Csprng::Csprng(const std::array<std::uint8_t, 32>& key) : impl_(std::make_unique<Impl>(key)) {}

Csprng::Csprng(std::uint64_t seed) : Csprng(Sha256().update("vdi/csprng/v1").update_u64(seed).finish()) {}

Csprng::Csprng(std::uint64_t seed, std::string_view label)
    : Csprng(Sha256().update("vdi/csprng/v1/label").update_u64(seed).update(label).finish()) {}

Csprng Csprng::from_entropy() {
  std::array<std::uint8_t, 32> key{};
  if (RAND_bytes(key.data(), static_cast<int>(key.size())) != 1) throw std::runtime_error("RAND_bytes failed");
  return Csprng(key);
}

Csprng::~Csprng() = default;
Csprng::Csprng(Csprng&&) noexcept = default;
Csprng& Csprng::operator=(Csprng&&) noexcept = default;

void Csprng::fill(std::span<std::uint8_t> out) {
  std::size_t done = 0;
  while (done < out.size()) {
    if (impl_->pos == impl_->buf.size()) impl_->refill();
    std::size_t n = std::min(out.size() - done, impl_->buf.size() - impl_->pos);
    std::memcpy(out.data() + done, impl_->buf.data() + impl_->pos, n);
    impl_->pos += n;
    done += n;
  }
}

std::uint64_t Csprng::next_u64() {
  std::uint8_t b[8];
  fill(b);
  std::uint64_t v = 0;
  for (auto x : b) v = (v << 8) | x;
  return v;
}

std::uint64_t Csprng::uniform(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform bound 0");
  std::uint64_t limit = max() - max() % bound;
  for (;;) {
    std::uint64_t v = next_u64();
    if (v < limit) return v % bound;
  }
}

double Csprng::uniform_open01() {
  for (;;) {
    std::uint64_t v = next_u64() >> 11;
    if (v != 0) return static_cast<double>(v) * 0x1.0p-53;
  }
}

algebra::FieldElement Csprng::field_element(const algebra::PrimeField& f) {
  std::array<std::uint8_t, 64> wide{};
  fill(wide);
  return algebra::FieldElement::from_wide_bytes(f, wide);
}

Csprng Csprng::fork(std::string_view label) {
  std::array<std::uint8_t, 32> material{};
  fill(material);
  return Csprng(Sha256().update("vdi/csprng/fork").update(material).update(label).finish());
}

}  // namespace vdi::util
