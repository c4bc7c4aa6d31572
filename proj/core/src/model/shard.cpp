#include <algorithm>
#include <cmath>
#include <numeric>

#include "vdi/error.hpp"
#include "vdi/model/model.hpp"

namespace vdi::model {

void ShardPlan::validate(std::size_t num_layers) const {
  if (shards.empty()) throw Error(ErrorCode::InvalidArgument, "shard plan is empty");
  std::size_t next = 0;
  for (std::size_t s = 0; s < shards.size(); ++s) {
    const auto& sh = shards[s];
    if (sh.first != next || sh.last <= sh.first) {
      throw Error(ErrorCode::InvalidArgument, "shard " + std::to_string(s) + " does not continue the partition");
    }
    if (sh.nodes.empty()) throw Error(ErrorCode::InvalidArgument, "shard " + std::to_string(s) + " has no node");
    next = sh.last;
  }
  if (next != num_layers) throw Error(ErrorCode::InvalidArgument, "shard plan does not cover every layer");
}

ShardPlan ShardPlan::random(std::size_t num_layers, std::size_t num_nodes, std::size_t redundancy,
                            util::Csprng& rng) {
  if (num_layers == 0 || redundancy == 0 || redundancy > num_nodes) {
    throw Error(ErrorCode::InvalidArgument, "need layers, and redundancy <= nodes");
  }
  // Each of the L-1 boundaries is a cut with probability 1/2.
  std::vector<std::size_t> cuts;
  for (std::size_t b = 1; b < num_layers; ++b) {
    if (rng.uniform(2)) cuts.push_back(b);
  }
  cuts.push_back(num_layers);
  std::vector<std::uint32_t> all(num_nodes);
  std::iota(all.begin(), all.end(), 0u);
  ShardPlan plan;
  std::size_t first = 0;
  for (auto c : cuts) {
    std::shuffle(all.begin(), all.end(), rng);
    std::vector<std::uint32_t> nodes(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(redundancy));
    std::sort(nodes.begin(), nodes.end());
    plan.shards.push_back({first, c, std::move(nodes)});
    first = c;
  }
  return plan;
}

ShardPlan ShardPlan::even(std::size_t num_layers, std::size_t num_shards, std::size_t num_nodes,
                          std::size_t redundancy) {
  if (num_shards == 0 || num_shards > num_layers || redundancy == 0 || redundancy > num_nodes) {
    throw Error(ErrorCode::InvalidArgument, "bad even shard plan parameters");
  }
  ShardPlan plan;
  std::uint32_t node = 0;
  for (std::size_t s = 0; s < num_shards; ++s) {
    Shard sh;
    sh.first = s * num_layers / num_shards;
    sh.last = (s + 1) * num_layers / num_shards;
    for (std::size_t k = 0; k < redundancy; ++k) {
      sh.nodes.push_back(node);
      node = static_cast<std::uint32_t>((node + 1) % num_nodes);
    }
    std::sort(sh.nodes.begin(), sh.nodes.end());
    sh.nodes.erase(std::unique(sh.nodes.begin(), sh.nodes.end()), sh.nodes.end());
    plan.shards.push_back(std::move(sh));
  }
  return plan;
}

std::vector<std::int64_t> run_plan(const Model& model, const ShardPlan& plan, std::span<const std::int64_t> x) {
  plan.validate(model.arch.layers.size());
  std::vector<std::int64_t> cur(x.begin(), x.end());
  for (const auto& sh : plan.shards) cur = forward_range(model, sh.first, sh.last, cur).output;
  return cur;
}

Model random_mlp(const MlpConfig& config, util::Csprng& rng) {
  if (config.widths.size() < 2) throw Error(ErrorCode::InvalidArgument, "an MLP needs at least two widths");
  Model m;
  m.arch.input_scale = config.input_scale;
  m.arch.q_bits = config.q_bits;
  auto uniform = [&](double bound) { return (2 * rng.uniform_open01() - 1) * bound; };
  for (std::size_t i = 0; i + 1 < config.widths.size(); ++i) {
    std::size_t in = config.widths[i], out = config.widths[i + 1];
    m.arch.layers.push_back(LayerSpec::linear(in, out, config.weight_scale));
    LayerWeights w;
    double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (std::size_t k = 0; k < in * out; ++k) w.w.push_back(quantize(uniform(bound), config.weight_scale));
    for (std::size_t k = 0; k < out; ++k) {
      w.bias.push_back(quantize(uniform(0.1), config.weight_scale * config.input_scale));
    }
    m.weights.push_back(std::move(w));
    if (i + 2 < config.widths.size()) {
      m.arch.layers.push_back(LayerSpec::relu(out));
      m.weights.emplace_back();
    }
  }
  if (config.head) {
    m.arch.layers.push_back(
        LayerSpec::lookup(config.widths.back(), *config.head, config.head_lo, config.head_hi, config.input_scale));
    m.weights.emplace_back();
  }
  m.validate();
  return m;
}

std::vector<std::int64_t> random_input(const ModelArchitecture& arch, util::Csprng& rng) {
  std::vector<std::int64_t> x;
  for (std::size_t i = 0; i < arch.input_dim(); ++i) {
    x.push_back(quantize(2 * rng.uniform_open01() - 1, arch.input_scale, arch.q_bits));
  }
  return x;
}

}  // namespace vdi::model
