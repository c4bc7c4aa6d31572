#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vdi/model/model.hpp"
#include "vdi/util/csprng.hpp"

namespace vdi::consensus {

enum class Status { Verified, Ambiguous, Failed };
std::string_view to_string(Status s);

struct DistributionStats {
  double mean = 0;
  double stddev = 0;
  std::size_t count = 1;
  std::vector<double> higher_moments;  // central moments of order 3, 4, ...

  static DistributionStats from_samples(std::span<const double> xs, unsigned extra_moments = 0);
  void validate() const;
};

struct ConsensusConfig {
  std::size_t redundancy = 3;
  /// Required share of the m assigned nodes; strictly above one half.
  double quorum = kMajority;
  bool cdv = false;
  double cdv_c = 3.0;
  /// Output quantization scale used to turn CDV tensors into reals.
  double cdv_scale = 1.0;
  std::optional<DistributionStats> reference;

  static constexpr double kMajority = 0.5000001;

  void validate() const;
  /// Smallest tally that meets the quorum out of m nodes.
  std::size_t required_votes(std::size_t m) const;
};

struct NodeOutput {
  std::uint32_t node = 0;
  std::vector<std::uint8_t> bytes;  // canonical tensor encoding unless Byzantine

  static NodeOutput of_tensor(std::uint32_t node, std::span<const std::int64_t> values);
  /// nullopt when the bytes are not a canonical tensor.
  std::optional<std::vector<std::int64_t>> tensor() const;
  std::string digest_hex() const;
};

std::vector<std::uint8_t> encode_tensor(std::span<const std::int64_t> values);
std::optional<std::vector<std::int64_t>> decode_tensor(std::span<const std::uint8_t> bytes);

struct ConsensusResult {
  Status status = Status::Failed;
  std::vector<std::uint8_t> value;  // y_con; empty unless a value won
  std::size_t tally = 0;
  std::size_t total = 0;
  std::vector<std::uint32_t> agreeing;
  std::vector<std::uint32_t> dissenters;

  std::vector<std::int64_t> tensor() const;
};

/// Exact-match vote over canonical bytes, or in CDV mode a vote of nodes
/// whose output distribution passes cdv_check against the reference.
/// Deterministic in (multiset of outputs, ids, config).
ConsensusResult decide(std::span<const NodeOutput> outputs, const ConsensusConfig& config);

struct CdvVerdict {
  bool accepted = false;
  double observed_mean = 0;
  double threshold = 0;  // c * sigma / sqrt(n)
  double z = 0;
};

/// Accepts iff |mean(observed) - mu_ref| <= c * sigma_ref / sqrt(n). With
/// sigma_ref = 0 the observations must all equal mu_ref; throws
/// DegenerateReference if they are not even identical to each other.
CdvVerdict cdv_check(std::span<const double> observed, const DistributionStats& reference, double c);

/// c starts at 3. A false alarm in the recent window raises c by 10%; a full
/// window with none lowers it by 10%. Always clamped to [2, 5].
class AdaptiveThreshold {
 public:
  explicit AdaptiveThreshold(std::size_t window = 20, double c0 = 3.0);

  double c() const { return c_; }
  void record(bool false_alarm);
  std::size_t false_alarms() const;

 private:
  std::size_t window_;
  double c_;
  std::deque<bool> recent_;
};

// ---------------------------------------------------------------------------
// Simulated redundant execution

enum class Behavior { Honest, Byzantine, Colluding, Unavailable };

struct Node {
  std::uint32_t id = 0;
  Behavior behavior = Behavior::Honest;
};

/// Each available node runs layers [shard.first, shard.last) on x. Byzantine
/// nodes return random bytes; colluding nodes all return the same wrong
/// tensor. Throws NodeUnavailable when no node answers.
std::vector<NodeOutput> run_redundant(const model::Model& model, const model::Shard& shard,
                                      std::span<const std::int64_t> x, std::span<const Node> nodes,
                                      util::Csprng& rng);

struct LogRecord {
  std::uint64_t round = 0;
  std::size_t shard = 0;
  std::uint32_t node = 0;
  std::string digest;
  std::string verdict;  // "agree", "dissent", or the round status

  std::string to_json() const;
};

std::vector<LogRecord> round_log(std::uint64_t round, std::size_t shard, std::span<const NodeOutput> outputs,
                                 const ConsensusResult& result);

/// Y_final: the last shard's agreed value. Throws ShardFailed if any shard
/// is not verified.
std::vector<std::int64_t> reconstruct(std::span<const ConsensusResult> shards);

struct PlanRun {
  std::vector<ConsensusResult> shards;
  std::vector<LogRecord> log;
  std::optional<std::vector<std::int64_t>> output;  // set when every shard verified
};

/// Runs each shard redundantly, feeding the agreed boundary forward, and stops
/// at the first shard that does not verify.
PlanRun run_consensus_plan(const model::Model& model, const model::ShardPlan& plan, std::span<const std::int64_t> x,
                           const ConsensusConfig& config, std::span<const Behavior> behaviors, util::Csprng& rng);

}  // namespace vdi::consensus
