#include "vdi/consensus/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <numeric>

#include <json.hpp>

#include "vdi/error.hpp"
#include "vdi/util/bytes.hpp"
#include "vdi/util/sha256.hpp"

namespace vdi::consensus {

std::string_view to_string(Status s) {
  switch (s) {
    case Status::Verified:
      return "verified";
    case Status::Ambiguous:
      return "ambiguous";
    case Status::Failed:
      return "failed";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------

DistributionStats DistributionStats::from_samples(std::span<const double> xs, unsigned extra_moments) {
  if (xs.empty()) throw Error(ErrorCode::InvalidArgument, "no samples");
  DistributionStats s;
  s.count = xs.size();
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double ss = 0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.stddev = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
  for (unsigned k = 3; k < 3 + extra_moments; ++k) {
    double m = 0;
    for (double x : xs) m += std::pow(x - s.mean, k);
    s.higher_moments.push_back(m / static_cast<double>(xs.size()));
  }
  return s;
}

void DistributionStats::validate() const {
  if (!(stddev >= 0) || !std::isfinite(mean)) throw Error(ErrorCode::InvalidArgument, "bad distribution stats");
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "distribution stats need n >= 1");
}

void ConsensusConfig::validate() const {
  if (redundancy < 1) throw Error(ErrorCode::InvalidArgument, "redundancy must be at least 1");
  if (!(quorum > 0.5 && quorum <= 1.0)) throw Error(ErrorCode::InvalidArgument, "quorum must lie in (0.5, 1]");
  if (cdv) {
    if (!reference) throw Error(ErrorCode::InvalidArgument, "CDV mode needs reference statistics");
    reference->validate();
    if (!(cdv_c > 0)) throw Error(ErrorCode::InvalidArgument, "CDV multiplier must be positive");
    if (!(cdv_scale > 0)) throw Error(ErrorCode::InvalidArgument, "CDV scale must be positive");
  }
}

std::size_t ConsensusConfig::required_votes(std::size_t m) const {
  auto t = static_cast<std::size_t>(std::ceil(quorum * static_cast<double>(m) - 1e-9));
  return std::max<std::size_t>(t, m / 2 + 1);
}

// ---------------------------------------------------------------------------

std::vector<std::uint8_t> encode_tensor(std::span<const std::int64_t> values) {
  util::ByteWriter w;
  w.u32(static_cast<std::uint32_t>(values.size()));
  for (auto v : values) w.i64(v);
  return w.take();
}

std::optional<std::vector<std::int64_t>> decode_tensor(std::span<const std::uint8_t> bytes) {
  try {
    util::ByteReader r(bytes);
    std::uint32_t n = r.u32();
    if (static_cast<std::size_t>(n) * 8 != r.remaining()) return std::nullopt;
    std::vector<std::int64_t> out(n);
    for (auto& v : out) v = r.i64();
    return out;
  } catch (const Error&) {
    return std::nullopt;
  }
}

NodeOutput NodeOutput::of_tensor(std::uint32_t node, std::span<const std::int64_t> values) {
  return {node, encode_tensor(values)};
}

std::optional<std::vector<std::int64_t>> NodeOutput::tensor() const { return decode_tensor(bytes); }

std::string NodeOutput::digest_hex() const { return util::to_hex(util::sha256(bytes)); }

std::vector<std::int64_t> ConsensusResult::tensor() const {
  auto t = decode_tensor(value);
  if (!t) throw Error(ErrorCode::ParseError, "agreed value is not a tensor");
  return *t;
}

// ---------------------------------------------------------------------------

namespace {

bool passes_cdv(const NodeOutput& o, const ConsensusConfig& config) {
  auto t = o.tensor();
  if (!t || t->size() < 2) return false;
  std::vector<double> xs;
  for (auto v : *t) xs.push_back(static_cast<double>(v) / config.cdv_scale);
  try {
    return cdv_check(xs, *config.reference, config.cdv_c).accepted;
  } catch (const Error&) {
    return false;
  }
}

}  // namespace

ConsensusResult decide(std::span<const NodeOutput> outputs, const ConsensusConfig& config) {
  config.validate();
  if (outputs.empty()) throw Error(ErrorCode::InvalidArgument, "decide needs at least one output");
  ConsensusResult res;
  res.total = std::max(config.redundancy, outputs.size());
  const std::size_t need = config.required_votes(res.total);

  // Candidate value -> voters, ordered by bytes for determinism.
  std::map<std::vector<std::uint8_t>, std::vector<std::uint32_t>> votes;
  if (config.cdv) {
    std::vector<const NodeOutput*> pass;
    for (const auto& o : outputs) {
      if (passes_cdv(o, config)) pass.push_back(&o);
    }
    if (!pass.empty()) {
      // Every passing output counts for the smallest passing value.
      auto best = *std::min_element(pass.begin(), pass.end(),
                                    [](const NodeOutput* a, const NodeOutput* b) { return a->bytes < b->bytes; });
      auto& v = votes[best->bytes];
      for (auto* o : pass) v.push_back(o->node);
    }
  } else {
    for (const auto& o : outputs) votes[o.bytes].push_back(o.node);
  }

  std::size_t top = 0, second = 0;
  const std::vector<std::uint8_t>* winner = nullptr;
  for (const auto& [value, voters] : votes) {
    if (voters.size() > top) {
      second = top;
      top = voters.size();
      winner = &value;
    } else if (voters.size() > second) {
      second = voters.size();
    }
  }
  res.tally = top;
  if (winner == nullptr || top == second) {
    res.status = winner == nullptr ? Status::Failed : Status::Ambiguous;
    for (const auto& o : outputs) res.dissenters.push_back(o.node);
  } else {
    res.status = top >= need ? Status::Verified : Status::Failed;
    res.value = *winner;
    res.agreeing = votes.at(*winner);
    for (const auto& o : outputs) {
      if (std::find(res.agreeing.begin(), res.agreeing.end(), o.node) == res.agreeing.end()) {
        res.dissenters.push_back(o.node);
      }
    }
  }
  std::sort(res.agreeing.begin(), res.agreeing.end());
  std::sort(res.dissenters.begin(), res.dissenters.end());
  return res;
}

CdvVerdict cdv_check(std::span<const double> observed, const DistributionStats& reference, double c) {
  reference.validate();
  if (observed.size() < 2) throw Error(ErrorCode::InvalidArgument, "CDV needs at least two observations");
  if (!(c > 0)) throw Error(ErrorCode::InvalidArgument, "CDV multiplier must be positive");
  CdvVerdict v;
  const double n = static_cast<double>(observed.size());
  v.observed_mean = std::accumulate(observed.begin(), observed.end(), 0.0) / n;
  if (reference.stddev == 0) {
    bool identical = std::all_of(observed.begin(), observed.end(), [&](double x) { return x == observed[0]; });
    if (!identical) throw Error(ErrorCode::DegenerateReference, "zero reference spread with varying observations");
    v.accepted = observed[0] == reference.mean;
    v.z = v.accepted ? 0 : INFINITY;
    return v;
  }
  double se = reference.stddev / std::sqrt(n);
  v.threshold = c * se;
  v.z = (v.observed_mean - reference.mean) / se;
  v.accepted = std::abs(v.observed_mean - reference.mean) <= v.threshold;
  return v;
}

AdaptiveThreshold::AdaptiveThreshold(std::size_t window, double c0) : window_(window), c_(c0) {
  if (window == 0) throw Error(ErrorCode::InvalidArgument, "window must be positive");
  c_ = std::clamp(c_, 2.0, 5.0);
}

void AdaptiveThreshold::record(bool false_alarm) {
  recent_.push_back(false_alarm);
  if (recent_.size() > window_) recent_.pop_front();
  if (false_alarm) {
    c_ *= 1.1;
  } else if (recent_.size() == window_ && false_alarms() == 0) {
    c_ *= 0.9;
  }
  c_ = std::clamp(c_, 2.0, 5.0);
}

std::size_t AdaptiveThreshold::false_alarms() const {
  return static_cast<std::size_t>(std::count(recent_.begin(), recent_.end(), true));
}

// ---------------------------------------------------------------------------

std::vector<NodeOutput> run_redundant(const model::Model& model, const model::Shard& shard,
                                      std::span<const std::int64_t> x, std::span<const Node> nodes,
                                      util::Csprng& rng) {
  if (nodes.empty()) throw Error(ErrorCode::InvalidArgument, "no nodes assigned");
  std::vector<std::future<std::vector<std::int64_t>>> jobs;
  for (const auto& n : nodes) {
    if (n.behavior == Behavior::Honest) {
      jobs.push_back(std::async(std::launch::async,
                                [&] { return model::forward_range(model, shard.first, shard.last, x).output; }));
    }
  }
  std::vector<NodeOutput> out;
  std::optional<std::vector<std::int64_t>> wrong;
  std::size_t job = 0;
  for (const auto& n : nodes) {
    switch (n.behavior) {
      case Behavior::Honest:
        out.push_back(NodeOutput::of_tensor(n.id, jobs[job++].get()));
        break;
      case Behavior::Byzantine: {
        std::vector<std::uint8_t> junk(4 + 8 * model.arch.width(shard.last));
        rng.fill(junk);
        out.push_back({n.id, std::move(junk)});
        break;
      }
      case Behavior::Colluding:
        if (!wrong) {
          wrong = model::forward_range(model, shard.first, shard.last, x).output;
          (*wrong)[0] += 1;
        }
        out.push_back(NodeOutput::of_tensor(n.id, *wrong));
        break;
      case Behavior::Unavailable:
        break;
    }
  }
  if (out.empty()) throw Error(ErrorCode::NodeUnavailable, "no node answered");
  return out;
}

std::string LogRecord::to_json() const {
  nlohmann::ordered_json j;
  j["round"] = round;
  j["shard"] = shard;
  j["node"] = node;
  j["digest"] = digest;
  j["verdict"] = verdict;
  return j.dump();
}

std::vector<LogRecord> round_log(std::uint64_t round, std::size_t shard, std::span<const NodeOutput> outputs,
                                 const ConsensusResult& result) {
  std::vector<LogRecord> log;
  for (const auto& o : outputs) {
    bool agree = std::binary_search(result.agreeing.begin(), result.agreeing.end(), o.node);
    std::string verdict = result.status != Status::Verified ? std::string(to_string(result.status))
                          : agree                            ? "agree"
                                                             : "dissent";
    log.push_back({round, shard, o.node, o.digest_hex(), verdict});
  }
  return log;
}

std::vector<std::int64_t> reconstruct(std::span<const ConsensusResult> shards) {
  if (shards.empty()) throw Error(ErrorCode::InvalidArgument, "no shard results");
  for (std::size_t i = 0; i < shards.size(); ++i) {
    if (shards[i].status != Status::Verified) {
      throw Error(ErrorCode::ShardFailed,
                  "shard " + std::to_string(i) + " is " + std::string(to_string(shards[i].status)));
    }
  }
  return shards.back().tensor();
}

PlanRun run_consensus_plan(const model::Model& model, const model::ShardPlan& plan, std::span<const std::int64_t> x,
                           const ConsensusConfig& config, std::span<const Behavior> behaviors, util::Csprng& rng) {
  config.validate();
  plan.validate(model.arch.num_layers());
  PlanRun run;
  std::vector<std::int64_t> cur(x.begin(), x.end());
  for (std::size_t s = 0; s < plan.shards.size(); ++s) {
    const auto& shard = plan.shards[s];
    std::vector<Node> nodes;
    for (auto id : shard.nodes) nodes.push_back({id, id < behaviors.size() ? behaviors[id] : Behavior::Honest});
    std::vector<NodeOutput> outs;
    ConsensusResult res;
    try {
      outs = run_redundant(model, shard, cur, nodes, rng);
      res = decide(outs, config);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NodeUnavailable) throw;
      res.total = nodes.size();
    }
    auto log = round_log(0, s, outs, res);
    run.log.insert(run.log.end(), log.begin(), log.end());
    run.shards.push_back(res);
    if (res.status != Status::Verified) return run;
    auto next = res.tensor();
    if (next.size() != model.arch.width(shard.last)) {
      res.status = Status::Failed;
      run.shards.back() = res;
      return run;
    }
    cur = std::move(next);
  }
  run.output = reconstruct(run.shards);
  return run;
}

}  // namespace vdi::consensus
