#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "vdi/consensus/consensus.hpp"
#include "vdi/model/model.hpp"
#include "vdi/netsim/crypto.hpp"
#include "vdi/zkdps/zkdps.hpp"

namespace vdi::netsim {

inline constexpr std::uint32_t kOrchestrator = 0xffffffffu;

struct NodeDescriptor {
  std::uint32_t id = 0;
  TeeType tee = TeeType::Cpu;
  double speed = 1.0;  // relative; cost / speed gives virtual ticks
  consensus::Behavior behavior = consensus::Behavior::Honest;

  void validate() const;
};

// ---------------------------------------------------------------------------
// Scheduling

/// Multiply count of layers [first, last).
std::uint64_t shard_cost(const model::ModelArchitecture& arch, std::size_t first, std::size_t last);

struct PlanRequest {
  /// Interior cut points; shards are [0, c1), [c1, c2), ..., [ck, L).
  std::vector<std::size_t> cuts;
  std::size_t redundancy = 1;
};

/// LPT: shards by descending cost, each placed on the nodes that would
/// finish it earliest given their speed. Shards costing at least the mean
/// only consider gpu-class nodes when any exist. Throws NoNodes.
model::ShardPlan schedule_shards(const model::ModelArchitecture& arch, const PlanRequest& request,
                                 std::span<const NodeDescriptor> nodes);

/// Per-node total cost under a plan, indexed by position in `nodes`.
std::vector<double> node_loads(const model::ModelArchitecture& arch, const model::ShardPlan& plan,
                               std::span<const NodeDescriptor> nodes);

// ---------------------------------------------------------------------------
// Discrete-event core

/// Events fire in (tick, insertion order); equal seeds give equal orderings.
class EventQueue {
 public:
  using Handler = std::function<void()>;

  void at(std::uint64_t tick, Handler h);
  void after(std::uint64_t delay, Handler h) { at(now_ + delay, std::move(h)); }
  std::uint64_t now() const { return now_; }
  /// Runs until the queue drains; returns the number of events fired.
  std::size_t run();

 private:
  struct Item {
    std::uint64_t tick;
    std::uint64_t seq;
    Handler h;
  };
  struct Later {
    bool operator()(const Item& a, const Item& b) const {
      return a.tick != b.tick ? a.tick > b.tick : a.seq > b.seq;
    }
  };
  std::priority_queue<Item, std::vector<Item>, Later> q_;
  std::uint64_t now_ = 0;
  std::uint64_t seq_ = 0;
};

struct LogEvent {
  std::uint64_t tick = 0;
  std::uint64_t seq = 0;
  std::string kind;  // e.g. "attest", "channel/open", "send", "execute", "destroy"
  std::uint32_t from = kOrchestrator;
  std::uint32_t to = kOrchestrator;
  std::string channel;  // "orchestrator" or "direct" for sends
  std::string payload;  // "weights", "input", "intermediate", "digest", "proof", "output"
  std::size_t bytes = 0;
  std::string detail;

  std::string to_json() const;
};

std::string format_log(std::span<const LogEvent> log);

// ---------------------------------------------------------------------------
// Enclave memory

enum class Taint : std::uint8_t { Public, Secret };

/// A buffer with a confidentiality tag. Reads after poison() throw PoisonedRead.
class TaggedBuffer {
 public:
  TaggedBuffer() = default;
  TaggedBuffer(std::vector<std::uint8_t> bytes, Taint taint) : bytes_(std::move(bytes)), taint_(taint) {}

  const std::vector<std::uint8_t>& read() const;
  Taint taint() const { return taint_; }
  bool poisoned() const { return poisoned_; }
  void poison();

 private:
  std::vector<std::uint8_t> bytes_;
  Taint taint_ = Taint::Public;
  bool poisoned_ = false;
};

/// Throws ConfidentialityViolation if any host-visible buffer is tagged
/// Secret or contains a 16-byte window of any secret buffer.
void check_confidentiality(const std::map<std::string, TaggedBuffer>& host,
                           const std::map<std::string, TaggedBuffer>& enclave);

// ---------------------------------------------------------------------------
// Sessions

struct SessionConfig {
  std::uint64_t seed = 0;
  std::size_t redundancy = 1;
  /// Empty means one shard per node group, cut evenly.
  std::vector<std::size_t> cuts;
  std::size_t num_shards = 0;  // used when cuts is empty; 0 picks min(layers, nodes / redundancy)
  bool proofs = false;
  algebra::ProfileId profile = algebra::ProfileId::Main;
  std::string runtime_version = "vdi-tee/1";
};

struct SessionResult {
  std::optional<std::vector<std::int64_t>> output;  // Y_final when the session verified
  bool verified = false;
  std::string failure;
  model::ShardPlan plan;
  std::vector<consensus::ConsensusResult> shard_consensus;
  std::vector<std::uint32_t> flagged;  // nodes caught dissenting or with failing proofs
  std::vector<LogEvent> log;
};

/// Full lifecycle: init, attest, schedule, channels, transmit, execute,
/// retrieve, destroy. Sub-step failures abort and return a partial log.
SessionResult run_session(const model::Model& model, std::span<const std::int64_t> x,
                          std::span<const NodeDescriptor> nodes, const SessionConfig& config);

/// True iff every intermediate payload went node-to-node and the
/// orchestrator only sent weights and inputs and received digests, proofs and outputs.
bool direct_channel_property(std::span<const LogEvent> log);

/// Scenario files (JSON): {"seed", "redundancy", "proofs", "profile", "cuts", "nodes": [{"id", "tee", "speed", "behavior"}]}.
struct Scenario {
  SessionConfig config;
  std::vector<NodeDescriptor> nodes;
};
Scenario parse_scenario(std::string_view json_text);
std::string scenario_to_json(const Scenario& s);

}  // namespace vdi::netsim
