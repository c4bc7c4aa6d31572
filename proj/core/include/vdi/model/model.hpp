#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vdi/gadgets/table.hpp"
#include "vdi/util/csprng.hpp"
#include "vdi/util/sha256.hpp"

namespace vdi::model {

enum class LayerKind : std::uint8_t { Linear = 0, Relu = 1, Lookup = 2 };

std::string_view to_string(LayerKind kind);
LayerKind layer_kind_from_string(std::string_view name);

/// One layer of a quantized feed-forward network.
///
/// Linear: y = round_half_up((W x + bias) / scale), W is out x in row-major,
/// bias is at accumulator scale. Relu and Lookup act elementwise (in == out);
/// a Lookup maps x to the quantized table function over [lo, hi] at `scale`.
struct LayerSpec {
  LayerKind kind = LayerKind::Linear;
  std::size_t in = 0;
  std::size_t out = 0;
  std::int64_t scale = 1;
  gadgets::TableFn fn = gadgets::TableFn::Sigmoid;
  std::int64_t lo = 0;
  std::int64_t hi = 0;

  static LayerSpec linear(std::size_t in, std::size_t out, std::int64_t scale);
  static LayerSpec relu(std::size_t width);
  static LayerSpec lookup(std::size_t width, gadgets::TableFn fn, std::int64_t lo, std::int64_t hi,
                          std::int64_t scale);

  gadgets::LookupTable table() const;
  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// The public part of a model: everything but the weights.
struct ModelArchitecture {
  std::int64_t input_scale = 256;
  /// Q: every accumulator and activation magnitude stays below 2^Q.
  unsigned q_bits = 32;
  std::vector<LayerSpec> layers;

  std::size_t input_dim() const { return layers.front().in; }
  std::size_t output_dim() const { return layers.back().out; }
  std::size_t num_layers() const { return layers.size(); }

  /// Throws ShapeMismatch or InvalidArgument. Also checks that padded slots
  /// (which carry a fixed value through every layer) stay inside lookup domains.
  void validate() const;
  /// Width of the tensor entering layer `boundary` (boundary L is the output).
  std::size_t width(std::size_t boundary) const;
  /// Value carried by the padding slots of that tensor once it is padded to a
  /// power of two. Padding enters as 0 and goes through every layer.
  std::int64_t pad_value(std::size_t boundary) const;

  std::vector<std::uint8_t> serialize() const;
  util::Digest digest() const;
  friend bool operator==(const ModelArchitecture&, const ModelArchitecture&) = default;
};

/// Quantized parameters of one linear layer (empty for other kinds).
struct LayerWeights {
  std::vector<std::int64_t> w;
  std::vector<std::int64_t> bias;
  friend bool operator==(const LayerWeights&, const LayerWeights&) = default;
};

struct Model {
  ModelArchitecture arch;
  std::vector<LayerWeights> weights;  // one entry per layer

  void validate() const;
};

/// Real values to the fixed-point grid, round half to even. Throws
/// MagnitudeOverflow when |v * scale| >= 2^q_bits.
std::vector<std::int64_t> quantize(std::span<const double> values, std::int64_t scale, unsigned q_bits = 32);
std::int64_t quantize(double value, std::int64_t scale, unsigned q_bits = 32);
std::vector<double> dequantize(std::span<const std::int64_t> values, std::int64_t scale);

/// Everything the prover needs to replay layers [first_layer, first_layer + n).
struct InferenceTrace {
  std::size_t first_layer = 0;
  /// activations[i] is the input of layer first_layer + i; the last entry is the output.
  std::vector<std::vector<std::int64_t>> activations;
  /// Per layer: rescale remainders (linear) or table multiplicities (lookup); empty otherwise.
  std::vector<std::vector<std::int64_t>> remainders;
  std::vector<std::vector<std::uint64_t>> multiplicities;

  std::size_t num_layers() const { return activations.empty() ? 0 : activations.size() - 1; }
  const std::vector<std::int64_t>& input() const { return activations.front(); }
  const std::vector<std::int64_t>& output() const { return activations.back(); }
  std::vector<std::uint8_t> serialize() const;
};

struct ForwardResult {
  std::vector<std::int64_t> output;
  InferenceTrace trace;
};

/// Exact integer execution of layers [first, last). Throws ShapeMismatch,
/// MagnitudeOverflow (an accumulator reaches 2^Q) or EntryNotInTable.
ForwardResult forward_range(const Model& model, std::size_t first, std::size_t last, std::span<const std::int64_t> x);
ForwardResult forward(const Model& model, std::span<const std::int64_t> x);

/// Intermediate representation after the first `cut` layers.
struct SplitState {
  std::size_t cut = 0;
  std::vector<std::int64_t> z;
};

/// Requires 1 <= cut < L (BadCutPoint).
SplitState split_forward(const Model& model, std::span<const std::int64_t> x, std::size_t cut);
std::vector<std::int64_t> resume(const Model& model, const SplitState& state);

/// Adds discrete Laplace noise with scale sensitivity / epsilon (real units,
/// so sensitivity * grid_scale / epsilon on the grid) to every coordinate.
/// epsilon = +inf adds nothing. Throws NonPositiveEpsilon.
std::vector<std::int64_t> privatize_embedding(std::span<const std::int64_t> z, double epsilon, double sensitivity,
                                              std::int64_t grid_scale, util::Csprng& rng);

// ---------------------------------------------------------------------------
// Sharding

struct Shard {
  std::size_t first = 0;  // layers [first, last)
  std::size_t last = 0;
  std::vector<std::uint32_t> nodes;
  friend bool operator==(const Shard&, const Shard&) = default;
};

struct ShardPlan {
  std::vector<Shard> shards;

  /// Ranges must partition [0, num_layers) in order; every shard needs a node.
  void validate(std::size_t num_layers) const;
  /// Random contiguous cut points; each shard gets `redundancy` distinct
  /// nodes drawn from [0, num_nodes).
  static ShardPlan random(std::size_t num_layers, std::size_t num_nodes, std::size_t redundancy,
                          util::Csprng& rng);
  /// Near-equal contiguous ranges, nodes assigned round-robin.
  static ShardPlan even(std::size_t num_layers, std::size_t num_shards, std::size_t num_nodes,
                        std::size_t redundancy);
};

/// Runs every shard of the plan in order.
std::vector<std::int64_t> run_plan(const Model& model, const ShardPlan& plan, std::span<const std::int64_t> x);

// ---------------------------------------------------------------------------
// Construction and files

struct MlpConfig {
  std::vector<std::size_t> widths = {4, 8, 8, 2};
  std::int64_t input_scale = 256;
  std::int64_t weight_scale = 64;
  unsigned q_bits = 32;
  /// Elementwise head after the last linear layer.
  std::optional<gadgets::TableFn> head = gadgets::TableFn::Sigmoid;
  std::int64_t head_lo = -4096;
  std::int64_t head_hi = 4095;
};

/// Linear layers of the given widths with ReLU between them and an optional
/// lookup head. Weights are uniform in +-1/sqrt(in), biases in +-0.1.
Model random_mlp(const MlpConfig& config, util::Csprng& rng);
/// Random input quantized from uniform [-1, 1].
std::vector<std::int64_t> random_input(const ModelArchitecture& arch, util::Csprng& rng);

/// JSON model files (see docs/file-formats.md). The architecture-only form
/// omits the "weights" member.
std::string model_to_json(const Model& model);
std::string architecture_to_json(const ModelArchitecture& arch);
Model model_from_json(std::string_view text);
ModelArchitecture architecture_from_json(std::string_view text);
Model load_model(const std::string& path);
ModelArchitecture load_architecture(const std::string& path);
void save_text(const std::string& path, std::string_view text);
std::string read_text(const std::string& path);

/// Newline-delimited decimal integers.
std::vector<std::int64_t> parse_tensor(std::string_view text);
std::string format_tensor(std::span<const std::int64_t> values);

}  // namespace vdi::model
