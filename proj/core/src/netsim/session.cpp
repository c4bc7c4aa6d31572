#include <algorithm>
#include <cmath>
#include <set>

#include "vdi/error.hpp"
#include "vdi/netsim/netsim.hpp"
#include "vdi/util/bytes.hpp"

namespace vdi::netsim {

namespace {

using consensus::Behavior;
using consensus::NodeOutput;

constexpr std::string_view kRuntimeImage = "vdi blank enclave image";

std::span<const std::uint8_t> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

struct Task {
  std::size_t shard = 0;
  std::uint32_t node = 0;
  bool have_weights = false;
  std::vector<std::uint8_t> weights_payload;
  std::array<std::uint8_t, 32> commit_seed{};
  // Inputs: from the orchestrator (shard 0) or every replica of the previous shard.
  std::vector<NodeOutput> inputs;
  std::map<std::uint32_t, FieldElement> input_blindings;
  // Proof mode: the upstream replica the orchestrator accepted.
  std::optional<std::uint32_t> source;
  bool started = false;
};

struct SimNode {
  NodeDescriptor desc;
  Keypair identity;
  bool attested = false;
  std::map<std::uint32_t, ChannelEnd> channels;
  std::map<std::string, TaggedBuffer> enclave;
  std::map<std::string, TaggedBuffer> host;
  std::size_t rx = 0;
};

struct ProofRecord {
  std::uint32_t node = 0;
  std::uint32_t source = kOrchestrator;
  std::vector<std::uint8_t> bytes;
};

class Session {
 public:
  Session(const model::Model& m, std::span<const std::int64_t> x, std::span<const NodeDescriptor> nodes,
          const SessionConfig& cfg)
      : model_(m), x_(x.begin(), x.end()), cfg_(cfg),
        curve_(algebra::CurveProfile::by_id(cfg.profile)) {
    util::Csprng id_rng(cfg.seed, "netsim/identity/orchestrator");
    orch_identity_ = Keypair::generate(curve_, id_rng);
    for (const auto& d : nodes) {
      d.validate();
      if (nodes_.count(d.id)) throw Error(ErrorCode::InvalidArgument, "duplicate node id");
      util::Csprng r(cfg.seed, "netsim/identity/" + std::to_string(d.id));
      SimNode n;
      n.desc = d;
      n.identity = Keypair::generate(curve_, r);
      nodes_.emplace(d.id, std::move(n));
    }
  }

  SessionResult run() {
    try {
      model_.validate();
      init_and_attest();
      schedule();
      open_channels();
      transmit();
      q_.run();
      collect();
      audit_and_destroy();
    } catch (const Error& e) {
      result_.failure = e.what();
      result_.verified = false;
      result_.output.reset();
      record("abort", kOrchestrator, kOrchestrator, "", "", 0, e.what());
    }
    result_.log = std::move(log_);
    return std::move(result_);
  }

 private:
  const model::Model& model_;
  std::vector<std::int64_t> x_;
  SessionConfig cfg_;
  const algebra::CurveProfile& curve_;
  Keypair orch_identity_;
  std::map<std::uint32_t, SimNode> nodes_;
  std::map<std::uint32_t, ChannelEnd> orch_channels_;
  EventQueue q_;
  std::vector<LogEvent> log_;
  SessionResult result_;
  std::vector<Task> tasks_;
  std::unique_ptr<commit::CommitmentKey> key_;
  std::vector<zkdps::WeightCommitments> published_;
  std::optional<gadgets::CommittedTensor> input_commitment_;
  std::map<std::pair<std::size_t, std::uint32_t>, ProofRecord> proofs_;
  std::map<std::pair<std::size_t, std::uint32_t>, util::Digest> digests_;
  std::map<std::uint32_t, std::vector<std::uint8_t>> outputs_;
  // Output commitments of accepted proofs, and the verdict per replica.
  std::map<std::pair<std::size_t, std::uint32_t>, GroupPoint> verified_out_;
  std::map<std::pair<std::size_t, std::uint32_t>, bool> proof_ok_;
  std::set<std::size_t> shards_checked_;

  void record(std::string kind, std::uint32_t from, std::uint32_t to, std::string channel, std::string payload,
              std::size_t bytes, std::string detail) {
    LogEvent e;
    e.tick = q_.now();
    e.seq = log_.size();
    e.kind = std::move(kind);
    e.from = from;
    e.to = to;
    e.channel = std::move(channel);
    e.payload = std::move(payload);
    e.bytes = bytes;
    e.detail = std::move(detail);
    log_.push_back(std::move(e));
  }

  static std::uint64_t latency(std::size_t bytes) { return 1 + bytes / 1024; }

  ChannelEnd& channel(std::uint32_t from, std::uint32_t to) {
    auto& map = from == kOrchestrator ? orch_channels_ : nodes_.at(from).channels;
    auto it = map.find(to);
    if (it == map.end()) {
      throw Error(ErrorCode::AttestationMissing, "no channel from " + std::to_string(from) + " to " + std::to_string(to));
    }
    return it->second;
  }

  /// Seals on the sender's channel, logs, and delivers after the link latency.
  /// Receivers keep the frame in their host view and the plaintext in the enclave.
  void send(std::uint32_t from, std::uint32_t to, const std::string& payload, std::vector<std::uint8_t> plain,
            std::function<void(std::vector<std::uint8_t>)> on_delivery) {
    auto frame = channel(from, to).seal(plain);
    std::fill(plain.begin(), plain.end(), std::uint8_t{0});
    std::string ch = from == kOrchestrator || to == kOrchestrator ? "orchestrator" : "direct";
    record("send", from, to, ch, payload, frame.size(), util::to_hex(util::sha256(frame)).substr(0, 16));
    q_.after(latency(frame.size()), [this, from, to, payload, frame = std::move(frame), cb = std::move(on_delivery)] {
      auto opened = channel(to, from).open(frame);
      if (to != kOrchestrator) {
        auto& n = nodes_.at(to);
        n.host.emplace("rx/" + std::to_string(n.rx), TaggedBuffer(frame, Taint::Public));
        n.enclave.emplace("rx/" + std::to_string(n.rx) + "/" + payload, TaggedBuffer(opened, Taint::Secret));
        ++n.rx;
      }
      record("recv", from, to, "", payload, frame.size(), "");
      cb(std::move(opened));
    });
  }

  // -------------------------------------------------------------------------

  void init_and_attest() {
    util::Csprng nonce_rng(cfg_.seed, "netsim/nonces");
    const auto expected = measure(as_bytes(kRuntimeImage), cfg_.runtime_version);
    for (auto& [id, n] : nodes_) {
      record("vm/init", kOrchestrator, id, "", "", kRuntimeImage.size(), "blank enclave");
      std::uint64_t nonce = nonce_rng.next_u64();
      record("attest/challenge", kOrchestrator, id, "", "nonce", 8, "");
      if (n.desc.behavior == Behavior::Unavailable) {
        record("attest/timeout", id, kOrchestrator, "", "", 0, "");
        continue;
      }
      auto ev = attest(n.identity, id, n.desc.tee, as_bytes(kRuntimeImage), cfg_.runtime_version, nonce);
      bool ok = verify_evidence(ev, n.identity.pub, expected, nonce);
      n.attested = ok;
      record("attest", id, kOrchestrator, "", "evidence", ev.claims.encode().size() + ev.signature.encode().size(),
             std::string(ok ? "ok " : "rejected ") + std::string(to_string(ev.claims.tee)));
    }
  }

  void schedule() {
    std::vector<NodeDescriptor> live;
    for (const auto& [id, n] : nodes_) {
      if (n.attested) live.push_back(n.desc);
    }
    if (live.empty()) throw Error(ErrorCode::NoNodes, "no node passed attestation");
    PlanRequest req;
    req.redundancy = cfg_.redundancy;
    req.cuts = cfg_.cuts;
    const std::size_t layers = model_.arch.num_layers();
    if (req.cuts.empty()) {
      std::size_t shards = cfg_.num_shards;
      if (shards == 0) shards = std::max<std::size_t>(1, std::min(layers, live.size() / std::max<std::size_t>(1, cfg_.redundancy)));
      shards = std::min(shards, layers);
      for (std::size_t s = 1; s < shards; ++s) req.cuts.push_back(s * layers / shards);
    }
    result_.plan = schedule_shards(model_.arch, req, live);
    for (std::size_t s = 0; s < result_.plan.shards.size(); ++s) {
      const auto& sh = result_.plan.shards[s];
      std::string ids;
      for (auto id : sh.nodes) ids += (ids.empty() ? "" : ",") + std::to_string(id);
      record("schedule", kOrchestrator, kOrchestrator, "", "", 0,
             "shard " + std::to_string(s) + " layers " + std::to_string(sh.first) + "-" + std::to_string(sh.last) +
                 " nodes " + ids);
      for (auto id : sh.nodes) {
        Task task;
        task.shard = s;
        task.node = id;
        tasks_.push_back(std::move(task));
      }
    }
  }

  void open_pair(std::uint32_t a, std::uint32_t b) {
    if (a == b) return;
    auto& map_a = a == kOrchestrator ? orch_channels_ : nodes_.at(a).channels;
    if (map_a.count(b)) return;
    auto identity = [&](std::uint32_t id) -> const Keypair& {
      if (id == kOrchestrator) return orch_identity_;
      const auto& n = nodes_.at(id);
      if (!n.attested) throw Error(ErrorCode::AttestationMissing, "node " + std::to_string(id) + " not attested");
      return n.identity;
    };
    const Keypair& ia = identity(a);
    const Keypair& ib = identity(b);
    util::Csprng ra(cfg_.seed, "netsim/ephemeral/" + std::to_string(a) + "/" + std::to_string(b));
    util::Csprng rb(cfg_.seed, "netsim/ephemeral/" + std::to_string(b) + "/" + std::to_string(a));
    Keypair ea = Keypair::generate(curve_, ra), eb = Keypair::generate(curve_, rb);
    Handshake ha = make_handshake(ia, a, ea), hb = make_handshake(ib, b, eb);
    std::string ch = a == kOrchestrator || b == kOrchestrator ? "orchestrator" : "direct";
    record("send", a, b, ch, "handshake", ha.signature.encode().size() + curve_.point_width(), "");
    record("send", b, a, ch, "handshake", hb.signature.encode().size() + curve_.point_width(), "");
    if (!check_handshake(hb, ib.pub) || !check_handshake(ha, ia.pub)) {
      throw Error(ErrorCode::AuthFailure, "handshake signature rejected");
    }
    auto end_a = finish_handshake(a, ea, hb);
    auto end_b = finish_handshake(b, eb, ha);
    bool same = end_a.key_fingerprint() == end_b.key_fingerprint();
    record("channel/open", a, b, ch, "", 0, same ? "keys agree" : "keys differ");
    if (!same) throw Error(ErrorCode::AuthFailure, "session keys differ");
    map_a.emplace(b, std::move(end_a));
    (b == kOrchestrator ? orch_channels_ : nodes_.at(b).channels).emplace(a, std::move(end_b));
  }

  void open_channels() {
    const auto& plan = result_.plan;
    for (std::size_t s = 0; s < plan.shards.size(); ++s) {
      for (auto id : plan.shards[s].nodes) open_pair(kOrchestrator, id);
      if (s + 1 < plan.shards.size()) {
        for (auto a : plan.shards[s].nodes) {
          for (auto b : plan.shards[s + 1].nodes) open_pair(a, b);
        }
      }
    }
  }

  model::Model fragment(std::size_t first, std::size_t last) const {
    model::Model m;
    m.arch = model_.arch;
    for (std::size_t i = 0; i < model_.arch.layers.size(); ++i) {
      const auto& l = model_.arch.layers[i];
      if (i >= first && i < last) {
        m.weights.push_back(model_.weights[i]);
      } else {
        bool linear = l.kind == model::LayerKind::Linear;
        m.weights.push_back({std::vector<std::int64_t>(linear ? l.in * l.out : 0, 0),
                             std::vector<std::int64_t>(linear ? l.out : 0, 0)});
      }
    }
    return m;
  }

  static std::vector<std::uint8_t> encode_weights(const model::Model& m, std::size_t first, std::size_t last,
                                                  std::span<const std::uint8_t> seed) {
    util::ByteWriter w;
    w.u32(static_cast<std::uint32_t>(first));
    w.u32(static_cast<std::uint32_t>(last));
    for (std::size_t i = first; i < last; ++i) {
      w.u32(static_cast<std::uint32_t>(m.weights[i].w.size()));
      for (auto v : m.weights[i].w) w.i64(v);
      w.u32(static_cast<std::uint32_t>(m.weights[i].bias.size()));
      for (auto v : m.weights[i].bias) w.i64(v);
    }
    w.bytes(seed);
    return w.take();
  }

  model::Model decode_weights(std::span<const std::uint8_t> payload, std::array<std::uint8_t, 32>& seed) const {
    util::ByteReader r(payload);
    std::size_t first = r.u32(), last = r.u32();
    model::Model m = fragment(0, 0);
    for (std::size_t i = first; i < last; ++i) {
      auto& lw = m.weights.at(i);
      lw.w.assign(r.u32(), 0);
      for (auto& v : lw.w) v = r.i64();
      lw.bias.assign(r.u32(), 0);
      for (auto& v : lw.bias) v = r.i64();
    }
    auto s = r.bytes(32);
    std::copy(s.begin(), s.end(), seed.begin());
    r.expect_done();
    return m;
  }

  void transmit() {
    if (cfg_.proofs) {
      key_ = std::make_unique<commit::CommitmentKey>(curve_, zkdps::required_capacity(model_.arch));
      util::Csprng r(cfg_.seed, "netsim/input-commitment");
      input_commitment_ = zkdps::commit_activation(*key_, model_.arch, 0, x_, r);
    }
    const auto& plan = result_.plan;
    for (std::size_t s = 0; s < plan.shards.size(); ++s) {
      const auto& sh = plan.shards[s];
      std::array<std::uint8_t, 32> seed{};
      util::Csprng(cfg_.seed, "netsim/weight-blinding/" + std::to_string(s)).fill(seed);
      if (cfg_.proofs) {
        util::Csprng wr(seed);
        published_.push_back(zkdps::commit_shard(*key_, model_, sh.first, sh.last, wr).commitments);
        record("commit", kOrchestrator, kOrchestrator, "", "", 0,
               "shard " + std::to_string(s) + " " +
                   util::to_hex(util::sha256(published_.back().serialize(curve_))).substr(0, 16));
      }
      for (std::size_t t = 0; t < tasks_.size(); ++t) {
        if (tasks_[t].shard != s) continue;
        send(kOrchestrator, tasks_[t].node, "weights", encode_weights(model_, sh.first, sh.last, seed),
             [this, t](std::vector<std::uint8_t> plain) { on_weights(t, std::move(plain)); });
        if (s == 0) {
          util::ByteWriter w;
          w.section(consensus::encode_tensor(x_));
          if (input_commitment_) w.field(input_commitment_->blinding);
          send(kOrchestrator, tasks_[t].node, "input", w.take(), [this, t](std::vector<std::uint8_t> plain) {
            on_input(t, kOrchestrator, std::move(plain));
          });
        }
      }
    }
  }

  void on_weights(std::size_t t, std::vector<std::uint8_t> plain) {
    Task& task = tasks_[t];
    auto& node = nodes_.at(task.node);
    const auto& sh = result_.plan.shards[task.shard];
    // The enclave re-attests over the code it now holds.
    util::Csprng nr(cfg_.seed, "netsim/shard-nonce/" + std::to_string(t));
    std::uint64_t nonce = nr.next_u64();
    auto ev = attest(node.identity, task.node, node.desc.tee, plain, cfg_.runtime_version, nonce);
    std::array<std::uint8_t, 32> seed{};
    util::Csprng(cfg_.seed, "netsim/weight-blinding/" + std::to_string(task.shard)).fill(seed);
    auto expect = measure(encode_weights(model_, sh.first, sh.last, seed), cfg_.runtime_version);
    bool ok = verify_evidence(ev, node.identity.pub, expect, nonce);
    record("attest/shard", task.node, kOrchestrator, "", "evidence", ev.claims.encode().size(),
           ok ? "measurement ok" : "measurement mismatch");
    if (!ok) throw Error(ErrorCode::AuthFailure, "shard measurement mismatch on node " + std::to_string(task.node));
    task.weights_payload = std::move(plain);
    task.have_weights = true;
    maybe_start(t);
  }

  void on_input(std::size_t t, std::uint32_t from, std::vector<std::uint8_t> plain) {
    Task& task = tasks_[t];
    util::ByteReader r(plain);
    auto tensor = r.section();
    std::vector<std::uint8_t> bytes(tensor.remaining());
    auto span = tensor.bytes(tensor.remaining());
    std::copy(span.begin(), span.end(), bytes.begin());
    task.inputs.push_back({from, std::move(bytes)});
    if (cfg_.proofs && r.remaining() > 0) {
      try {
        task.input_blindings.emplace(from, r.field(curve_.scalar_field()));
      } catch (const Error&) {
      }
    }
    maybe_start(t);
  }

  std::size_t expected_inputs(const Task& task) const {
    return task.shard == 0 ? 1 : result_.plan.shards[task.shard - 1].nodes.size();
  }

  void on_source(std::size_t t, std::vector<std::uint8_t> plain) {
    util::ByteReader r(plain);
    tasks_[t].source = r.u32();
    r.expect_done();
    maybe_start(t);
  }

  void maybe_start(std::size_t t) {
    Task& task = tasks_[t];
    if (task.started || !task.have_weights) return;
    const auto& sh = result_.plan.shards[task.shard];
    const auto& node = nodes_.at(task.node);

    std::vector<std::int64_t> x;
    std::uint32_t source = kOrchestrator;
    if (task.shard == 0) {
      if (task.inputs.empty()) return;
      auto d = consensus::decode_tensor(task.inputs[0].bytes);
      if (!d) throw Error(ErrorCode::ParseError, "input tensor");
      x = *d;
    } else if (cfg_.proofs) {
      // Only an intermediate whose proof the orchestrator accepted is used.
      if (!task.source) return;
      auto it = std::find_if(task.inputs.begin(), task.inputs.end(),
                             [&](const NodeOutput& o) { return o.node == *task.source; });
      if (it == task.inputs.end()) return;
      auto d = consensus::decode_tensor(it->bytes);
      if (!d) throw Error(ErrorCode::ParseError, "intermediate tensor");
      x = *d;
      source = *task.source;
      record("input/source", task.node, task.node, "", "", 0,
             "shard " + std::to_string(task.shard) + " from " + std::to_string(source));
    } else {
      if (task.inputs.size() < expected_inputs(task)) return;
      consensus::ConsensusConfig cc;
      cc.redundancy = expected_inputs(task);
      auto res = consensus::decide(task.inputs, cc);
      record("consensus/input", task.node, task.node, "", "", 0,
             "shard " + std::to_string(task.shard) + " " + std::string(consensus::to_string(res.status)));
      if (res.status != consensus::Status::Verified) {
        task.started = true;
        return;
      }
      x = res.tensor();
      source = res.agreeing.front();
    }
    task.started = true;
    std::uint64_t ticks = static_cast<std::uint64_t>(
        std::ceil(static_cast<double>(shard_cost(model_.arch, sh.first, sh.last)) / node.desc.speed));
    q_.after(ticks, [this, t, x = std::move(x), source] { execute(t, x, source); });
  }

  void execute(std::size_t t, const std::vector<std::int64_t>& x, std::uint32_t source) {
    Task& task = tasks_[t];
    auto& node = nodes_.at(task.node);
    const auto& sh = result_.plan.shards[task.shard];
    std::array<std::uint8_t, 32> seed{};
    model::Model frag = decode_weights(task.weights_payload, seed);
    util::Csprng rng(cfg_.seed, "netsim/exec/" + std::to_string(t));

    std::vector<std::uint8_t> out_bytes;
    std::vector<std::uint8_t> proof_bytes;
    std::optional<FieldElement> out_blinding;
    auto fwd = model::forward_range(frag, sh.first, sh.last, x);
    auto behavior = node.desc.behavior;
    if (behavior == Behavior::Byzantine) {
      out_bytes.resize(4 + 8 * model_.arch.width(sh.last));
      rng.fill(out_bytes);
    } else {
      if (behavior == Behavior::Colluding) {
        fwd.output[0] += 1;
        fwd.trace.activations.back()[0] += 1;
      }
      out_bytes = consensus::encode_tensor(fwd.output);
    }
    if (cfg_.proofs) {
      if (behavior == Behavior::Byzantine) {
        proof_bytes.resize(256);
        rng.fill(proof_bytes);
        out_blinding = rng.field_element(curve_.scalar_field());
      } else if (task.input_blindings.count(source)) {
        util::Csprng wr(seed);
        auto cs = zkdps::commit_shard(*key_, frag, sh.first, sh.last, wr);
        auto input = zkdps::commit_activation_with(*key_, model_.arch, sh.first, x, task.input_blindings.at(source));
        zkdps::ProofOptions opt;
        if (behavior != Behavior::Honest) opt.prover = gadgets::ProverMode::Dishonest;
        auto proved = zkdps::prove_shard(*key_, frag, cs, input, fwd.trace, rng, opt);
        proof_bytes = proved.proof.serialize(curve_);
        out_blinding = proved.output.blinding;
      }
    }
    node.enclave.emplace("output/" + std::to_string(task.shard), TaggedBuffer(out_bytes, Taint::Secret));
    record("execute", task.node, task.node, "", "", 0,
           "shard " + std::to_string(task.shard) + " layers " + std::to_string(sh.first) + "-" +
               std::to_string(sh.last));

    const std::size_t s = task.shard;
    util::ByteWriter dw;
    dw.u32(static_cast<std::uint32_t>(s));
    dw.bytes(util::sha256(out_bytes));
    send(task.node, kOrchestrator, "digest", dw.take(), [this, s, id = task.node](std::vector<std::uint8_t> plain) {
      util::ByteReader r(plain);
      r.u32();
      util::Digest d{};
      auto b = r.bytes(32);
      std::copy(b.begin(), b.end(), d.begin());
      digests_[{s, id}] = d;
    });
    if (cfg_.proofs) {
      util::ByteWriter pw;
      pw.u32(static_cast<std::uint32_t>(s));
      pw.u32(source);
      pw.section(proof_bytes);
      send(task.node, kOrchestrator, "proof", pw.take(),
           [this, s, id = task.node](std::vector<std::uint8_t> plain) {
             util::ByteReader r(plain);
             r.u32();
             ProofRecord rec;
             rec.node = id;
             rec.source = r.u32();
             auto sec = r.section();
             auto b = sec.bytes(sec.remaining());
             rec.bytes.assign(b.begin(), b.end());
             proofs_[{s, id}] = std::move(rec);
             on_proof(s);
           });
    }
    if (s + 1 < result_.plan.shards.size()) {
      for (std::size_t u = 0; u < tasks_.size(); ++u) {
        if (tasks_[u].shard != s + 1) continue;
        util::ByteWriter w;
        w.section(out_bytes);
        if (out_blinding) w.field(*out_blinding);
        if (tasks_[u].node == task.node) {
          record("handoff/local", task.node, task.node, "", "intermediate", out_bytes.size(), "");
          q_.after(0, [this, u, from = task.node, plain = w.take()]() mutable { on_input(u, from, std::move(plain)); });
        } else {
          send(task.node, tasks_[u].node, "intermediate", w.take(),
               [this, u, from = task.node](std::vector<std::uint8_t> plain) { on_input(u, from, std::move(plain)); });
        }
      }
    } else {
      send(task.node, kOrchestrator, "output", out_bytes,
           [this, id = task.node](std::vector<std::uint8_t> plain) { outputs_[id] = std::move(plain); });
    }
  }

  // -------------------------------------------------------------------------

  /// Verifies every proof of shard s once. Missing proofs count as rejected.
  void check_proofs(std::size_t s) {
    if (!shards_checked_.insert(s).second) return;
    for (auto id : result_.plan.shards[s].nodes) {
      auto it = proofs_.find({s, id});
      bool accepted = false;
      std::string why = "missing";
      if (it != proofs_.end()) {
        std::optional<GroupPoint> input;
        if (s == 0) {
          input = input_commitment_->commitment;
        } else if (auto src = verified_out_.find({s - 1, it->second.source}); src != verified_out_.end()) {
          input = src->second;
        }
        if (input) {
          auto rep = zkdps::verify_shard_bytes(*key_, model_.arch, published_[s], *input, it->second.bytes);
          accepted = rep.accepted;
          why = rep.accepted ? "accepted" : rep.failed_check;
          if (accepted) verified_out_[{s, id}] = zkdps::ShardProof::deserialize(it->second.bytes, curve_).output();
        } else {
          why = "unverified source";
        }
      }
      proof_ok_[{s, id}] = accepted;
      record("verify/proof", id, kOrchestrator, "", "", 0, "shard " + std::to_string(s) + " " + why);
    }
  }

  /// Once shard s has reported every proof, names an accepted replica as the
  /// source for each replica of shard s + 1.
  void on_proof(std::size_t s) {
    const auto& plan = result_.plan;
    for (auto id : plan.shards[s].nodes) {
      if (!proofs_.count({s, id})) return;
    }
    check_proofs(s);
    if (s + 1 >= plan.shards.size()) return;
    std::optional<std::uint32_t> source;
    for (auto id : plan.shards[s].nodes) {
      if (proof_ok_[{s, id}]) {
        source = id;
        break;
      }
    }
    if (!source) return;
    for (std::size_t u = 0; u < tasks_.size(); ++u) {
      if (tasks_[u].shard != s + 1) continue;
      util::ByteWriter w;
      w.u32(*source);
      send(kOrchestrator, tasks_[u].node, "source", w.take(),
           [this, u](std::vector<std::uint8_t> plain) { on_source(u, std::move(plain)); });
    }
  }

  void collect() {
    const auto& plan = result_.plan;
    std::set<std::uint32_t> flagged;
    bool all_verified = true;
    for (std::size_t s = 0; s < plan.shards.size(); ++s) {
      std::set<std::uint32_t> excluded;
      if (cfg_.proofs) {
        check_proofs(s);
        std::size_t ok = 0;
        for (auto id : plan.shards[s].nodes) {
          if (proof_ok_[{s, id}]) {
            ++ok;
          } else {
            excluded.insert(id);
            flagged.insert(id);
          }
        }
        if (ok == 0) all_verified = false;
      }
      std::vector<NodeOutput> votes;
      for (auto id : plan.shards[s].nodes) {
        auto it = digests_.find({s, id});
        if (it == digests_.end() || excluded.count(id)) continue;
        votes.push_back({id, std::vector<std::uint8_t>(it->second.begin(), it->second.end())});
      }
      consensus::ConsensusConfig cc;
      // With proofs on, only replicas with accepted proofs are counted.
      cc.redundancy = cfg_.proofs ? std::max<std::size_t>(1, votes.size()) : plan.shards[s].nodes.size();
      consensus::ConsensusResult res;
      if (!votes.empty()) res = consensus::decide(votes, cc);
      res.total = cc.redundancy;
      for (auto id : res.dissenters) flagged.insert(id);
      for (const auto& rec : consensus::round_log(0, s, votes, res)) {
        record("consensus", rec.node, kOrchestrator, "", "", 0,
               "shard " + std::to_string(s) + " " + rec.verdict);
      }
      if (res.status != consensus::Status::Verified) all_verified = false;
      result_.shard_consensus.push_back(std::move(res));
    }

    std::vector<NodeOutput> finals;
    const auto& last = plan.shards.back();
    for (auto id : last.nodes) {
      if (auto it = outputs_.find(id); it != outputs_.end() && !flagged.count(id)) finals.push_back({id, it->second});
    }
    result_.flagged.assign(flagged.begin(), flagged.end());
    if (!all_verified || finals.empty()) {
      result_.failure = "consensus or proof verification failed";
      record("retrieve", kOrchestrator, kOrchestrator, "", "", 0, "rejected");
      return;
    }
    consensus::ConsensusConfig cc;
    cc.redundancy = cfg_.proofs ? finals.size() : last.nodes.size();
    auto res = consensus::decide(finals, cc);
    const auto& digest_vote = result_.shard_consensus.back();
    auto d = util::sha256(res.value);
    bool matches = res.status == consensus::Status::Verified &&
                   std::equal(d.begin(), d.end(), digest_vote.value.begin(), digest_vote.value.end());
    record("retrieve", kOrchestrator, kOrchestrator, "", "", res.value.size(), matches ? "accepted" : "rejected");
    if (!matches) {
      result_.failure = "final output disagrees with the digest vote";
      return;
    }
    result_.output = res.tensor();
    result_.verified = true;
  }

  void audit_and_destroy() {
    for (auto& [id, n] : nodes_) {
      if (!n.attested) continue;
      check_confidentiality(n.host, n.enclave);
      record("audit/confidentiality", id, id, "", "", n.host.size(), "ok");
    }
    for (auto& [id, n] : nodes_) {
      if (!n.attested) continue;
      record("send", kOrchestrator, id, "orchestrator", "destroy", 0, "");
      for (auto& [peer, ch] : n.channels) ch.destroy();
      for (auto& [name, buf] : n.enclave) buf.poison();
      std::size_t blocked = 0;
      for (auto& [name, buf] : n.enclave) {
        try {
          buf.read();
        } catch (const Error& e) {
          if (e.code() == ErrorCode::PoisonedRead) ++blocked;
        }
      }
      for (auto& [peer, ch] : n.channels) {
        try {
          ch.key_fingerprint();
        } catch (const Error& e) {
          if (e.code() == ErrorCode::PoisonedRead) ++blocked;
        }
      }
      bool clean = blocked == n.enclave.size() + n.channels.size();
      record("destroy", id, id, "", "", 0, clean ? "zeroized" : "residue");
      if (!clean) throw Error(ErrorCode::PoisonedRead, "enclave state readable after destroy");
    }
    for (auto& [peer, ch] : orch_channels_) ch.destroy();
    bool direct = direct_channel_property(log_);
    record("audit/direct-channels", kOrchestrator, kOrchestrator, "", "", 0, direct ? "ok" : "violated");
    if (!direct) {
      result_.verified = false;
      result_.output.reset();
      result_.failure = "intermediate traffic crossed the orchestrator";
    }
  }
};

}  // namespace

SessionResult run_session(const model::Model& model, std::span<const std::int64_t> x,
                          std::span<const NodeDescriptor> nodes, const SessionConfig& config) {
  if (nodes.empty()) throw Error(ErrorCode::NoNodes, "session needs nodes");
  Session s(model, x, nodes, config);
  return s.run();
}

}  // namespace vdi::netsim
