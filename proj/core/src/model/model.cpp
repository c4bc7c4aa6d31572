#include "vdi/model/model.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "vdi/error.hpp"
#include "vdi/util/bytes.hpp"

namespace vdi::model {

namespace {

bool is_pow2(std::int64_t v) { return v > 0 && (v & (v - 1)) == 0; }
bool is_pow2(std::size_t v) { return v > 0 && (v & (v - 1)) == 0; }

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  return (a % b != 0 && (a < 0) != (b < 0)) ? q - 1 : q;
}

void check_magnitude(__int128 v, unsigned q, std::size_t layer) {
  __int128 bound = static_cast<__int128>(1) << q;
  if (v >= bound || v <= -bound) {
    throw Error(ErrorCode::MagnitudeOverflow,
                "layer " + std::to_string(layer) + " accumulator exceeds 2^" + std::to_string(q));
  }
}

}  // namespace

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Linear: return "linear";
    case LayerKind::Relu: return "relu";
    case LayerKind::Lookup: return "lookup";
  }
  return "?";
}

LayerKind layer_kind_from_string(std::string_view name) {
  if (name == "linear") return LayerKind::Linear;
  if (name == "relu") return LayerKind::Relu;
  if (name == "lookup" || name == "lookup-activation") return LayerKind::Lookup;
  throw Error(ErrorCode::ParseError, "unknown layer kind '" + std::string(name) + "'");
}

LayerSpec LayerSpec::linear(std::size_t in, std::size_t out, std::int64_t scale) {
  LayerSpec s;
  s.kind = LayerKind::Linear;
  s.in = in;
  s.out = out;
  s.scale = scale;
  return s;
}

LayerSpec LayerSpec::relu(std::size_t width) {
  LayerSpec s;
  s.kind = LayerKind::Relu;
  s.in = s.out = width;
  return s;
}

LayerSpec LayerSpec::lookup(std::size_t width, gadgets::TableFn fn, std::int64_t lo, std::int64_t hi,
                            std::int64_t scale) {
  LayerSpec s;
  s.kind = LayerKind::Lookup;
  s.in = s.out = width;
  s.fn = fn;
  s.lo = lo;
  s.hi = hi;
  s.scale = scale;
  return s;
}

gadgets::LookupTable LayerSpec::table() const {
  if (kind != LayerKind::Lookup) throw Error(ErrorCode::InvalidArgument, "only lookup layers have tables");
  return fn == gadgets::TableFn::Range ? gadgets::range_table(lo, hi) : gadgets::build_function_table(fn, lo, hi, scale);
}

void ModelArchitecture::validate() const {
  if (layers.empty()) throw Error(ErrorCode::ShapeMismatch, "model has no layers");
  if (q_bits < 1 || q_bits > 62) throw Error(ErrorCode::InvalidArgument, "q_bits must be in [1, 62]");
  if (input_scale < 1) throw Error(ErrorCode::InvalidArgument, "input scale must be positive");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    auto where = "layer " + std::to_string(i);
    if (l.in == 0 || l.out == 0) throw Error(ErrorCode::ShapeMismatch, where + " has an empty shape");
    if (i > 0 && layers[i - 1].out != l.in) {
      throw Error(ErrorCode::ShapeMismatch, where + " input " + std::to_string(l.in) + " != previous output " +
                                                std::to_string(layers[i - 1].out));
    }
    switch (l.kind) {
      case LayerKind::Linear:
        if (!is_pow2(l.scale)) throw Error(ErrorCode::InvalidArgument, where + " scale must be a power of two");
        break;
      case LayerKind::Relu:
        if (l.in != l.out) throw Error(ErrorCode::ShapeMismatch, where + " relu must keep its width");
        break;
      case LayerKind::Lookup:
        if (l.in != l.out) throw Error(ErrorCode::ShapeMismatch, where + " lookup must keep its width");
        if (l.hi < l.lo) throw Error(ErrorCode::InvalidArgument, where + " has an empty lookup domain");
        if (static_cast<std::uint64_t>(l.hi - l.lo) + 1 > gadgets::kDefaultTableRowCap) {
          throw Error(ErrorCode::DomainTooLarge, where + " lookup domain exceeds the row cap");
        }
        if (l.scale < 1) throw Error(ErrorCode::InvalidArgument, where + " lookup scale must be positive");
        if (!is_pow2(l.in)) {
          auto pad = pad_value(i);
          if (pad < l.lo || pad > l.hi) {
            throw Error(ErrorCode::InvalidArgument, where + " lookup domain must contain the padding value " +
                                                        std::to_string(pad));
          }
        }
        break;
    }
  }
}

std::size_t ModelArchitecture::width(std::size_t boundary) const {
  return boundary < layers.size() ? layers[boundary].in : layers.back().out;
}

std::int64_t ModelArchitecture::pad_value(std::size_t boundary) const {
  std::int64_t pad = 0;
  for (std::size_t i = 0; i < boundary && i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.kind == LayerKind::Linear) pad = 0;
    else if (l.kind == LayerKind::Relu) pad = std::max<std::int64_t>(pad, 0);
    else if (is_pow2(l.in)) pad = 0;  // nothing is padded, so the value never matters
    else pad = l.table().apply(pad);
  }
  return pad;
}

std::vector<std::uint8_t> ModelArchitecture::serialize() const {
  util::ByteWriter w;
  w.str("vdi/architecture/v1");
  w.i64(input_scale);
  w.u32(q_bits);
  w.u32(static_cast<std::uint32_t>(layers.size()));
  for (const auto& l : layers) {
    w.u8(static_cast<std::uint8_t>(l.kind));
    w.u64(l.in);
    w.u64(l.out);
    w.i64(l.scale);
    w.u8(static_cast<std::uint8_t>(l.fn));
    w.i64(l.lo);
    w.i64(l.hi);
  }
  return w.take();
}

util::Digest ModelArchitecture::digest() const { return util::sha256(serialize()); }

void Model::validate() const {
  arch.validate();
  if (weights.size() != arch.layers.size()) throw Error(ErrorCode::ShapeMismatch, "one weight entry per layer");
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const auto& l = arch.layers[i];
    const auto& w = weights[i];
    bool linear = l.kind == LayerKind::Linear;
    if (w.w.size() != (linear ? l.in * l.out : 0) || w.bias.size() != (linear ? l.out : 0)) {
      throw Error(ErrorCode::ShapeMismatch, "layer " + std::to_string(i) + " weights have the wrong size");
    }
  }
}

std::int64_t quantize(double value, std::int64_t scale, unsigned q_bits) {
  std::int64_t v = gadgets::round_half_even(value * static_cast<double>(scale));
  std::int64_t bound = std::int64_t{1} << q_bits;
  if (v >= bound || v <= -bound) throw Error(ErrorCode::MagnitudeOverflow, "quantized value exceeds 2^Q");
  return v;
}

std::vector<std::int64_t> quantize(std::span<const double> values, std::int64_t scale, unsigned q_bits) {
  std::vector<std::int64_t> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(quantize(v, scale, q_bits));
  return out;
}

std::vector<double> dequantize(std::span<const std::int64_t> values, std::int64_t scale) {
  std::vector<double> out;
  for (auto v : values) out.push_back(static_cast<double>(v) / static_cast<double>(scale));
  return out;
}

std::vector<std::uint8_t> InferenceTrace::serialize() const {
  util::ByteWriter w;
  w.u64(first_layer);
  w.u64(activations.size());
  auto ints = [&](const std::vector<std::int64_t>& v) {
    w.u64(v.size());
    for (auto x : v) w.i64(x);
  };
  for (const auto& a : activations) ints(a);
  for (const auto& r : remainders) ints(r);
  for (const auto& m : multiplicities) {
    w.u64(m.size());
    for (auto x : m) w.u64(x);
  }
  return w.take();
}

ForwardResult forward_range(const Model& model, std::size_t first, std::size_t last,
                            std::span<const std::int64_t> x) {
  const auto& arch = model.arch;
  if (first >= last || last > arch.layers.size()) throw Error(ErrorCode::BadCutPoint, "bad layer range");
  if (x.size() != arch.layers[first].in) {
    throw Error(ErrorCode::ShapeMismatch, "input has " + std::to_string(x.size()) + " entries, layer expects " +
                                              std::to_string(arch.layers[first].in));
  }
  ForwardResult res;
  auto& tr = res.trace;
  tr.first_layer = first;
  tr.activations.emplace_back(x.begin(), x.end());
  for (std::size_t i = first; i < last; ++i) {
    const auto& l = arch.layers[i];
    const auto& in = tr.activations.back();
    std::vector<std::int64_t> out(l.out), rem;
    std::vector<std::uint64_t> mult;
    switch (l.kind) {
      case LayerKind::Linear: {
        const auto& w = model.weights[i];
        rem.resize(l.out);
        for (std::size_t r = 0; r < l.out; ++r) {
          __int128 acc = w.bias[r];
          for (std::size_t c = 0; c < l.in; ++c) acc += static_cast<__int128>(w.w[r * l.in + c]) * in[c];
          check_magnitude(acc, arch.q_bits, i);
          auto a = static_cast<std::int64_t>(acc);
          out[r] = floor_div(a + l.scale / 2, l.scale);
          rem[r] = a - l.scale * out[r];
        }
        break;
      }
      case LayerKind::Relu:
        for (std::size_t j = 0; j < l.in; ++j) {
          check_magnitude(in[j], arch.q_bits, i);
          out[j] = std::max<std::int64_t>(in[j], 0);
        }
        break;
      case LayerKind::Lookup: {
        auto table = l.table();
        mult.assign(table.rows(), 0);
        for (std::size_t j = 0; j < l.in; ++j) {
          out[j] = table.apply(in[j]);
          ++mult[static_cast<std::size_t>(table.row_of(in[j]))];
        }
        break;
      }
    }
    tr.remainders.push_back(std::move(rem));
    tr.multiplicities.push_back(std::move(mult));
    tr.activations.push_back(std::move(out));
  }
  res.output = tr.activations.back();
  return res;
}

ForwardResult forward(const Model& model, std::span<const std::int64_t> x) {
  return forward_range(model, 0, model.arch.layers.size(), x);
}

SplitState split_forward(const Model& model, std::span<const std::int64_t> x, std::size_t cut) {
  if (cut < 1 || cut >= model.arch.layers.size()) {
    throw Error(ErrorCode::BadCutPoint, "cut " + std::to_string(cut) + " outside [1, " +
                                            std::to_string(model.arch.layers.size() - 1) + "]");
  }
  return {cut, forward_range(model, 0, cut, x).output};
}

std::vector<std::int64_t> resume(const Model& model, const SplitState& state) {
  if (state.cut < 1 || state.cut >= model.arch.layers.size()) throw Error(ErrorCode::BadCutPoint, "bad cut");
  return forward_range(model, state.cut, model.arch.layers.size(), state.z).output;
}

std::vector<std::int64_t> privatize_embedding(std::span<const std::int64_t> z, double epsilon, double sensitivity,
                                              std::int64_t grid_scale, util::Csprng& rng) {
  if (!(epsilon > 0)) throw Error(ErrorCode::NonPositiveEpsilon, "epsilon must be positive");
  if (sensitivity < 0) throw Error(ErrorCode::InvalidArgument, "sensitivity must be non-negative");
  std::vector<std::int64_t> out(z.begin(), z.end());
  double b = sensitivity * static_cast<double>(grid_scale) / epsilon;
  if (b == 0 || std::isinf(epsilon)) return out;
  // Discrete Laplace as the difference of two geometric variables.
  std::geometric_distribution<std::int64_t> geo(1.0 - std::exp(-1.0 / b));
  for (auto& v : out) v += geo(rng) - geo(rng);
  return out;
}

}  // namespace vdi::model
