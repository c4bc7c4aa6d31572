#include "vdi/gadgets/table.hpp"

#include <cmath>

#include "vdi/error.hpp"

namespace vdi::gadgets {

std::string_view to_string(TableFn fn) {
  switch (fn) {
    case TableFn::Range: return "range";
    case TableFn::Sigmoid: return "sigmoid";
    case TableFn::SoftmaxExp: return "softmax-component";
    case TableFn::Gelu: return "gelu-component";
    case TableFn::RmsnormRsqrt: return "rmsnorm-component";
  }
  return "?";
}

TableFn table_fn_from_string(std::string_view name) {
  for (auto fn : {TableFn::Range, TableFn::Sigmoid, TableFn::SoftmaxExp, TableFn::Gelu, TableFn::RmsnormRsqrt}) {
    if (to_string(fn) == name) return fn;
  }
  if (name == "softmax") return TableFn::SoftmaxExp;
  if (name == "gelu") return TableFn::Gelu;
  if (name == "rmsnorm") return TableFn::RmsnormRsqrt;
  throw Error(ErrorCode::ParseError, "unknown table function '" + std::string(name) + "'");
}

std::int64_t round_half_even(double v) {
  if (!std::isfinite(v) || std::fabs(v) >= 9.2e18) throw Error(ErrorCode::MagnitudeOverflow, "value out of range");
  double r = std::nearbyint(v);  // default rounding mode is to-nearest-even
  return static_cast<std::int64_t>(r);
}

namespace {

double eval_fn(TableFn fn, double x) {
  switch (fn) {
    case TableFn::Range: return x;
    case TableFn::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case TableFn::SoftmaxExp: return std::exp(x);
    case TableFn::Gelu: return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0)));
    case TableFn::RmsnormRsqrt: return 1.0 / std::sqrt(x);
  }
  return 0;
}

}  // namespace

std::int64_t LookupTable::apply(std::int64_t x) const {
  auto row = row_of(x);
  if (row < 0) {
    throw Error(ErrorCode::EntryNotInTable, std::string(to_string(fn)) + " input " + std::to_string(x) +
                                                " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return columns.back()[static_cast<std::size_t>(row)];
}

void LookupTable::write_descriptor(util::ByteWriter& w) const {
  w.u8(static_cast<std::uint8_t>(fn));
  w.i64(lo);
  w.i64(hi);
  w.i64(scale);
}

LookupTable LookupTable::read_descriptor(util::ByteReader& r, std::size_t row_cap) {
  auto fn = static_cast<TableFn>(r.u8());
  if (static_cast<std::uint8_t>(fn) > 4) throw Error(ErrorCode::MalformedProof, "unknown table function");
  std::int64_t lo = r.i64(), hi = r.i64(), scale = r.i64();
  try {
    return fn == TableFn::Range ? range_table(lo, hi, row_cap) : build_function_table(fn, lo, hi, scale, row_cap);
  } catch (const Error& e) {
    throw Error(ErrorCode::MalformedProof, std::string("bad table descriptor: ") + e.what());
  }
}

LookupTable build_function_table(TableFn fn, std::int64_t lo, std::int64_t hi, std::int64_t scale,
                                 std::size_t row_cap) {
  if (hi < lo) throw Error(ErrorCode::InvalidArgument, "empty table domain");
  if (scale <= 0) throw Error(ErrorCode::InvalidArgument, "table scale must be positive");
  auto rows = static_cast<unsigned __int128>(static_cast<__int128>(hi) - lo + 1);
  if (rows > row_cap) {
    throw Error(ErrorCode::DomainTooLarge, "table needs " + std::to_string(static_cast<std::uint64_t>(rows)) +
                                               " rows, cap is " + std::to_string(row_cap));
  }
  if (fn == TableFn::RmsnormRsqrt && lo <= 0) throw Error(ErrorCode::InvalidArgument, "rsqrt table needs x > 0");
  LookupTable t;
  t.fn = fn;
  t.lo = lo;
  t.hi = hi;
  t.scale = scale;
  t.columns.resize(fn == TableFn::Range ? 1 : 2);
  for (std::int64_t x = lo; x <= hi; ++x) {
    t.columns[0].push_back(x);
    if (fn != TableFn::Range) {
      double y = eval_fn(fn, static_cast<double>(x) / static_cast<double>(scale)) * static_cast<double>(scale);
      t.columns[1].push_back(round_half_even(y));
    }
  }
  return t;
}

LookupTable range_table(std::int64_t lo, std::int64_t hi, std::size_t row_cap) {
  return build_function_table(TableFn::Range, lo, hi, 1, row_cap);
}

}  // namespace vdi::gadgets
