#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vdi/gadgets/gadgets.hpp"
#include "vdi/model/model.hpp"

namespace vdi::zkdps {

using algebra::FieldElement;
using algebra::GroupPoint;
using algebra::PrimeField;
using commit::CommitmentKey;
using gadgets::CommittedTensor;
using model::LayerKind;

inline constexpr std::uint32_t kContainerVersion = 1;

/// Published commitments to the parameters of layers [first, last). Non-linear
/// layers carry points at infinity.
struct WeightCommitments {
  std::uint32_t first = 0;
  std::uint32_t last = 0;
  std::vector<GroupPoint> w;
  std::vector<GroupPoint> bias;

  std::vector<std::uint8_t> serialize(const algebra::CurveProfile& profile) const;
  static WeightCommitments deserialize(std::span<const std::uint8_t> bytes, const algebra::CurveProfile& profile);
  friend bool operator==(const WeightCommitments&, const WeightCommitments&) = default;
};

/// Prover-side openings of a WeightCommitments set.
struct CommittedShard {
  WeightCommitments commitments;
  std::vector<CommittedTensor> w;
  std::vector<CommittedTensor> bias;
};

/// Commits every weight tensor of layers [first, last), padded to powers of two.
CommittedShard commit_shard(const CommitmentKey& key, const model::Model& model, std::size_t first,
                            std::size_t last, util::Csprng& rng);

/// Pads an activation entering `boundary` with the architecture's pad value
/// and commits it.
CommittedTensor commit_activation(const CommitmentKey& key, const model::ModelArchitecture& arch,
                                  std::size_t boundary, std::span<const std::int64_t> values, util::Csprng& rng);
/// Same commitment with a caller-supplied blinding.
CommittedTensor commit_activation_with(const CommitmentKey& key, const model::ModelArchitecture& arch,
                                       std::size_t boundary, std::span<const std::int64_t> values,
                                       const FieldElement& blinding);
/// True iff (values, blinding) opens the commitment at that boundary.
bool check_activation(const CommitmentKey& key, const model::ModelArchitecture& arch, std::size_t boundary,
                      std::span<const std::int64_t> values, const FieldElement& blinding, const GroupPoint& c);

/// Commitment key large enough for every tensor and table of the model.
std::size_t required_capacity(const model::ModelArchitecture& arch);

struct LayerProof {
  LayerKind kind = LayerKind::Linear;
  GroupPoint output;
  gadgets::LinearProof linear;
  /// Linear outputs not consumed by a ReLU or lookup are range-bound by a
  /// sign/magnitude decomposition against an auxiliary tensor.
  std::optional<GroupPoint> range_aux;
  gadgets::ReluProof range;
  gadgets::ReluProof relu;
  gadgets::LookupProof lookup;
};

struct ShardProof {
  algebra::ProfileId profile = algebra::ProfileId::Main;
  transcript::Mode mode = transcript::Mode::FiatShamir;
  std::uint32_t first = 0;
  std::uint32_t last = 0;
  /// The shard re-commits its input; input = previous output + h^handoff.
  GroupPoint input;
  FieldElement handoff;
  std::vector<LayerProof> layers;

  const GroupPoint& output() const { return layers.back().output; }

  /// Container: "ZKDP", version, profile id, mode, shard range, layer count,
  /// then one length-prefixed section per layer. See docs/proof-format.md.
  std::vector<std::uint8_t> serialize(const algebra::CurveProfile& profile) const;
  /// Throws MalformedProof.
  static ShardProof deserialize(std::span<const std::uint8_t> bytes, const algebra::CurveProfile& profile);
};

struct ProofOptions {
  transcript::Mode mode = transcript::Mode::FiatShamir;
  /// Shared verifier coins for interactive mode.
  std::uint64_t challenge_seed = 0;
  /// Dishonest skips every witness check; for attack harnesses.
  gadgets::ProverMode prover = gadgets::ProverMode::Honest;
};

struct ShardOutput {
  ShardProof proof;
  CommittedTensor output;
};

/// Proves layers [weights.first, weights.last) on `input`, which must open
/// the commitment the verifier expects. Honest proving replays the trace
/// against the weights and throws TraceMismatch on any difference.
ShardOutput prove_shard(const CommitmentKey& key, const model::Model& model, const CommittedShard& weights,
                        const CommittedTensor& input, const model::InferenceTrace& trace, util::Csprng& rng,
                        const ProofOptions& options = {});

struct LayerReport {
  std::size_t index = 0;
  std::string gadget;
  bool checked = false;
  bool ok = false;
  std::string failed_check;
};

struct VerificationReport {
  bool accepted = false;
  std::string failed_check;
  std::vector<LayerReport> layers;
  double prove_ms = 0;
  double verify_ms = 0;
  std::size_t proof_bytes = 0;

  std::string to_json() const;
};

/// Uses only the architecture and commitments; never sees weights or activations.
VerificationReport verify_shard(const CommitmentKey& key, const model::ModelArchitecture& arch,
                                const WeightCommitments& weights, const GroupPoint& input, const ShardProof& proof,
                                const ProofOptions& options = {});
/// Parses the container first; a parse failure is reported as "container/malformed".
VerificationReport verify_shard_bytes(const CommitmentKey& key, const model::ModelArchitecture& arch,
                                      const WeightCommitments& weights, const GroupPoint& input,
                                      std::span<const std::uint8_t> bytes, const ProofOptions& options = {});

}  // namespace vdi::zkdps
