#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vdi/algebra/field.hpp"
#include "vdi/util/bytes.hpp"

namespace vdi::gadgets {

enum class TableFn : std::uint8_t {
  Range = 0,        // single column x
  Sigmoid = 1,      // 1 / (1 + e^-x)
  SoftmaxExp = 2,   // e^x, the per-entry factor of softmax
  Gelu = 3,         // x * Phi(x)
  RmsnormRsqrt = 4, // 1 / sqrt(x), x > 0
};

std::string_view to_string(TableFn fn);
TableFn table_fn_from_string(std::string_view name);

inline constexpr std::size_t kDefaultTableRowCap = std::size_t{1} << 16;

/// Public lookup table, column-major. Function tables hold (x, f_q(x)) for x
/// in [lo, hi] where f_q(x) = round_half_even(f(x / scale) * scale).
struct LookupTable {
  TableFn fn = TableFn::Range;
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  std::int64_t scale = 1;
  std::vector<std::vector<std::int64_t>> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns[0].size(); }
  std::size_t width() const { return columns.size(); }
  /// Row index of x in the input column, if x is in the domain.
  std::int64_t row_of(std::int64_t x) const { return x < lo || x > hi ? -1 : x - lo; }
  /// Evaluates the quantized function (throws EntryNotInTable outside the domain).
  std::int64_t apply(std::int64_t x) const;

  /// Identifies the table; the verifier rebuilds it from these fields.
  void write_descriptor(util::ByteWriter& w) const;
  static LookupTable read_descriptor(util::ByteReader& r, std::size_t row_cap = kDefaultTableRowCap);
};

/// Throws DomainTooLarge when hi - lo + 1 exceeds row_cap, InvalidArgument
/// for empty domains or non-positive inputs to rsqrt.
LookupTable build_function_table(TableFn fn, std::int64_t lo, std::int64_t hi, std::int64_t scale,
                                 std::size_t row_cap = kDefaultTableRowCap);
LookupTable range_table(std::int64_t lo, std::int64_t hi, std::size_t row_cap = kDefaultTableRowCap);

/// Round half to even, as used for every real-to-grid conversion.
std::int64_t round_half_even(double v);

}  // namespace vdi::gadgets
