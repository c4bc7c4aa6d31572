#include "vdi/algebra/generators.hpp"

#include <map>
#include <mutex>
#include <set>
#include <string>

#include "vdi/util/sha256.hpp"

#include <array>

namespace vdi::algebra {

namespace {

struct Sampler {
  const CurveProfile& profile;
  std::string tag;
  std::uint64_t next_index = 0;
  std::set<std::vector<std::uint8_t>> seen;

  GroupPoint next() {
    const PrimeField& base = profile.base_field();
    for (;;) {
      std::uint64_t index = next_index++;
      std::array<std::uint8_t, 64> wide{};
      for (std::uint64_t half = 0; half < 2; ++half) {
        auto d = util::Sha256()
                     .update("vdi/hash-to-curve/v1")
                     .update(profile.seed())
                     .update_u64(tag.size())
                     .update(tag)
                     .update_u64(index)
                     .update_u64(half)
                     .finish();
        std::copy(d.begin(), d.end(), wide.begin() + 32 * half);
      }
      FieldElement x = FieldElement::from_wide_bytes(base, wide);
      auto p = GroupPoint::lift_x(profile, x, wide[63] & 1);
      if (!p || p->is_infinity()) continue;
      if (!seen.insert(p->encode()).second) continue;
      return *p;
    }
  }
};

void check_capacity(const CurveProfile& profile, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "need at least one generator");
  U256 half = shift_right(profile.order(), 1);
  if (half.limb[1] == 0 && half.limb[2] == 0 && half.limb[3] == 0 && n > half.limb[0]) {
    throw Error(ErrorCode::DomainTooLarge, "too many generators for the " + profile.name() + " group");
  }
}

struct CacheEntry {
  std::unique_ptr<Sampler> sampler;
  std::shared_ptr<const std::vector<GroupPoint>> points;
};

}  // namespace

std::vector<GroupPoint> sample_generators(const CurveProfile& profile, std::size_t n, std::string_view domain_tag) {
  check_capacity(profile, n);
  Sampler s{profile, std::string(domain_tag), 0, {}};
  std::vector<GroupPoint> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(s.next());
  return out;
}

std::shared_ptr<const std::vector<GroupPoint>> cached_generators(const CurveProfile& profile, std::size_t n,
                                                                 std::string_view domain_tag) {
  check_capacity(profile, n);
  static std::mutex mu;
  static std::map<std::pair<const CurveProfile*, std::string>, CacheEntry> cache;
  std::lock_guard lock(mu);
  auto& entry = cache[{&profile, std::string(domain_tag)}];
  if (!entry.sampler) {
    entry.sampler = std::make_unique<Sampler>(Sampler{profile, std::string(domain_tag), 0, {}});
    entry.points = std::make_shared<const std::vector<GroupPoint>>();
  }
  if (entry.points->size() < n) {
    auto grown = std::make_shared<std::vector<GroupPoint>>(*entry.points);
    grown->reserve(n);
    while (grown->size() < n) grown->push_back(entry.sampler->next());
    entry.points = std::move(grown);
  }
  return entry.points;
}

}  // namespace vdi::algebra
