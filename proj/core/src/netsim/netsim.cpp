#include "vdi/netsim/netsim.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "vdi/error.hpp"

namespace vdi::netsim {

using nlohmann::json;

void NodeDescriptor::validate() const {
  if (!(speed > 0)) throw Error(ErrorCode::InvalidArgument, "node " + std::to_string(id) + " needs speed > 0");
  if (id == kOrchestrator) throw Error(ErrorCode::InvalidArgument, "node id reserved for the orchestrator");
}

// ---------------------------------------------------------------------------

std::uint64_t shard_cost(const model::ModelArchitecture& arch, std::size_t first, std::size_t last) {
  std::uint64_t c = 0;
  for (std::size_t i = first; i < last; ++i) {
    const auto& l = arch.layers[i];
    c += l.kind == model::LayerKind::Linear ? static_cast<std::uint64_t>(l.in) * l.out : l.out;
  }
  return std::max<std::uint64_t>(c, 1);
}

namespace {

std::vector<std::pair<std::size_t, std::size_t>> ranges_from_cuts(std::size_t layers,
                                                                  std::span<const std::size_t> cuts) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t prev = 0;
  for (auto c : cuts) {
    if (c <= prev || c >= layers) throw Error(ErrorCode::BadCutPoint, "cut " + std::to_string(c) + " out of order");
    out.push_back({prev, c});
    prev = c;
  }
  out.push_back({prev, layers});
  return out;
}

}  // namespace

model::ShardPlan schedule_shards(const model::ModelArchitecture& arch, const PlanRequest& request,
                                 std::span<const NodeDescriptor> nodes) {
  if (nodes.empty()) throw Error(ErrorCode::NoNodes, "no nodes to schedule on");
  for (const auto& n : nodes) n.validate();
  if (request.redundancy < 1 || request.redundancy > nodes.size()) {
    throw Error(ErrorCode::InvalidArgument, "redundancy " + std::to_string(request.redundancy) + " with " +
                                                std::to_string(nodes.size()) + " nodes");
  }
  auto ranges = ranges_from_cuts(arch.num_layers(), request.cuts);
  std::vector<std::uint64_t> cost;
  for (auto [a, b] : ranges) cost.push_back(shard_cost(arch, a, b));
  double mean = static_cast<double>(std::accumulate(cost.begin(), cost.end(), std::uint64_t{0})) /
                static_cast<double>(cost.size());

  std::vector<std::size_t> order(ranges.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return cost[a] > cost[b]; });

  std::size_t gpus = static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const NodeDescriptor& n) { return n.tee == TeeType::Gpu; }));
  std::vector<double> load(nodes.size(), 0.0);
  model::ShardPlan plan;
  plan.shards.resize(ranges.size());
  for (std::size_t s : order) {
    bool gpu_only = static_cast<double>(cost[s]) >= mean && gpus >= request.redundancy;
    std::vector<std::size_t> cand;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (!gpu_only || nodes[i].tee == TeeType::Gpu) cand.push_back(i);
    }
    const double c = static_cast<double>(cost[s]);
    std::stable_sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) {
      double fa = (load[a] + c) / nodes[a].speed, fb = (load[b] + c) / nodes[b].speed;
      if (fa != fb) return fa < fb;
      return nodes[a].id < nodes[b].id;
    });
    auto& shard = plan.shards[s];
    shard.first = ranges[s].first;
    shard.last = ranges[s].second;
    for (std::size_t k = 0; k < request.redundancy; ++k) {
      load[cand[k]] += c;
      shard.nodes.push_back(nodes[cand[k]].id);
    }
    std::sort(shard.nodes.begin(), shard.nodes.end());
  }
  return plan;
}

std::vector<double> node_loads(const model::ModelArchitecture& arch, const model::ShardPlan& plan,
                               std::span<const NodeDescriptor> nodes) {
  std::vector<double> load(nodes.size(), 0.0);
  for (const auto& s : plan.shards) {
    double c = static_cast<double>(shard_cost(arch, s.first, s.last));
    for (auto id : s.nodes) {
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].id == id) load[i] += c;
      }
    }
  }
  return load;
}

// ---------------------------------------------------------------------------

void EventQueue::at(std::uint64_t tick, Handler h) { q_.push({std::max(tick, now_), seq_++, std::move(h)}); }

std::size_t EventQueue::run() {
  std::size_t fired = 0;
  while (!q_.empty()) {
    Item it = q_.top();
    q_.pop();
    now_ = it.tick;
    it.h();
    ++fired;
  }
  return fired;
}

namespace {

std::string party(std::uint32_t id) { return id == kOrchestrator ? "orchestrator" : "node-" + std::to_string(id); }

}  // namespace

std::string LogEvent::to_json() const {
  nlohmann::ordered_json j;
  j["tick"] = tick;
  j["seq"] = seq;
  j["event"] = kind;
  j["from"] = party(from);
  j["to"] = party(to);
  if (!channel.empty()) j["channel"] = channel;
  if (!payload.empty()) j["payload"] = payload;
  if (bytes) j["bytes"] = bytes;
  if (!detail.empty()) j["detail"] = detail;
  return j.dump();
}

std::string format_log(std::span<const LogEvent> log) {
  std::string out;
  for (const auto& e : log) {
    out += e.to_json();
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------

const std::vector<std::uint8_t>& TaggedBuffer::read() const {
  if (poisoned_) throw Error(ErrorCode::PoisonedRead, "buffer was destroyed");
  return bytes_;
}

void TaggedBuffer::poison() {
  std::fill(bytes_.begin(), bytes_.end(), std::uint8_t{0});
  bytes_.clear();
  bytes_.shrink_to_fit();
  poisoned_ = true;
}

void check_confidentiality(const std::map<std::string, TaggedBuffer>& host,
                           const std::map<std::string, TaggedBuffer>& enclave) {
  constexpr std::size_t kWindow = 16;
  std::unordered_set<std::string> windows;
  for (const auto& [name, buf] : enclave) {
    if (buf.taint() != Taint::Secret || buf.poisoned()) continue;
    const auto& b = buf.read();
    for (std::size_t i = 0; i + kWindow <= b.size(); ++i) {
      windows.emplace(reinterpret_cast<const char*>(b.data() + i), kWindow);
    }
  }
  for (const auto& [name, buf] : host) {
    if (buf.taint() == Taint::Secret) {
      throw Error(ErrorCode::ConfidentialityViolation, "host-visible buffer '" + name + "' is tagged secret");
    }
    if (buf.poisoned()) continue;
    const auto& b = buf.read();
    for (std::size_t i = 0; i + kWindow <= b.size(); ++i) {
      if (windows.count(std::string(reinterpret_cast<const char*>(b.data() + i), kWindow))) {
        throw Error(ErrorCode::ConfidentialityViolation, "host-visible buffer '" + name + "' leaks enclave bytes");
      }
    }
  }
}

bool direct_channel_property(std::span<const LogEvent> log) {
  for (const auto& e : log) {
    if (e.kind != "send") continue;
    if (e.payload == "intermediate") {
      if (e.from == kOrchestrator || e.to == kOrchestrator || e.channel != "direct") return false;
    } else if (e.payload == "weights" || e.payload == "input" || e.payload == "nonce" ||
               e.payload == "source" || e.payload == "destroy") {
      if (e.from != kOrchestrator) return false;
    } else if (e.payload == "digest" || e.payload == "proof" || e.payload == "output" || e.payload == "evidence") {
      if (e.to != kOrchestrator) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------

namespace {

consensus::Behavior behavior_from_string(const std::string& s) {
  if (s == "honest") return consensus::Behavior::Honest;
  if (s == "byzantine") return consensus::Behavior::Byzantine;
  if (s == "colluding") return consensus::Behavior::Colluding;
  if (s == "unavailable") return consensus::Behavior::Unavailable;
  throw Error(ErrorCode::ParseError, "unknown behavior '" + s + "'");
}

std::string behavior_name(consensus::Behavior b) {
  switch (b) {
    case consensus::Behavior::Honest:
      return "honest";
    case consensus::Behavior::Byzantine:
      return "byzantine";
    case consensus::Behavior::Colluding:
      return "colluding";
    case consensus::Behavior::Unavailable:
      return "unavailable";
  }
  return "honest";
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("scenario: ") + e.what());
  }
  try {
    Scenario s;
    auto& c = s.config;
    c.seed = j.value("seed", std::uint64_t{0});
    c.redundancy = j.value("redundancy", std::size_t{1});
    c.proofs = j.value("proofs", false);
    std::string profile = j.value("profile", std::string("main"));
    c.profile = algebra::CurveProfile::builtin(profile).id();
    c.cuts = j.value("cuts", std::vector<std::size_t>{});
    c.num_shards = j.value("shards", std::size_t{0});
    if (j.contains("runtime_version")) c.runtime_version = j["runtime_version"].get<std::string>();
    for (const auto& n : j.at("nodes")) {
      NodeDescriptor d;
      d.id = n.at("id").get<std::uint32_t>();
      std::string tee = n.value("tee", std::string("cpu"));
      if (tee != "cpu" && tee != "gpu") throw Error(ErrorCode::ParseError, "tee must be cpu or gpu");
      d.tee = tee == "gpu" ? TeeType::Gpu : TeeType::Cpu;
      d.speed = n.value("speed", 1.0);
      d.behavior = behavior_from_string(n.value("behavior", std::string("honest")));
      d.validate();
      s.nodes.push_back(d);
    }
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("scenario: ") + e.what());
  }
}

std::string scenario_to_json(const Scenario& s) {
  nlohmann::ordered_json j;
  j["seed"] = s.config.seed;
  j["redundancy"] = s.config.redundancy;
  j["proofs"] = s.config.proofs;
  j["profile"] = algebra::CurveProfile::by_id(s.config.profile).name();
  j["cuts"] = s.config.cuts;
  if (s.config.num_shards) j["shards"] = s.config.num_shards;
  j["runtime_version"] = s.config.runtime_version;
  j["nodes"] = json::array();
  for (const auto& n : s.nodes) {
    j["nodes"].push_back({{"id", n.id},
                          {"tee", std::string(to_string(n.tee))},
                          {"speed", n.speed},
                          {"behavior", behavior_name(n.behavior)}});
  }
  return j.dump(2);
}

}  // namespace vdi::netsim
