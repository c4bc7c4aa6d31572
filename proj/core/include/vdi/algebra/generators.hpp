#pragma once

#include <memory>
#include <string_view>
#include <vector>

#include "vdi/algebra/curve.hpp"

namespace vdi::algebra {

/// n pairwise-distinct points derived by hashing (profile seed, tag, index) to
/// the curve, so nobody knows discrete logs between them. The list for n is a
/// prefix of the list for any larger n.
std::vector<GroupPoint> sample_generators(const CurveProfile& profile, std::size_t n, std::string_view domain_tag);

/// Process-wide memo of sample_generators; grows on demand and never shrinks.
std::shared_ptr<const std::vector<GroupPoint>> cached_generators(const CurveProfile& profile, std::size_t n,
                                                                 std::string_view domain_tag);

}  // namespace vdi::algebra
