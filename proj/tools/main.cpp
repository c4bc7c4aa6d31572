#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <iterator>
#include <limits>
#include <memory>

#include "vdi/consensus/consensus.hpp"
#include "vdi/error.hpp"
#include "vdi/model/model.hpp"
#include "vdi/netsim/netsim.hpp"
#include "vdi/zkdps/zkdps.hpp"

using namespace vdi;
using nlohmann::ordered_json;

namespace {

constexpr int kOk = 0;
constexpr int kRejected = 1;
constexpr int kUsage = 2;

struct Globals {
  std::string profile = "main";
  std::uint64_t seed = 0;
  bool seeded = false;
  bool json = false;

  // Stream for one purpose; seeded runs are reproducible, others draw entropy.
  util::Csprng rng(std::string_view label) const {
    return seeded ? util::Csprng(seed, label) : util::Csprng::from_entropy();
  }
};

class UsageError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_bytes(const std::string& path, std::span<const std::uint8_t> b) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
}

// Built-in names or a profile file.
const algebra::CurveProfile& resolve_profile(const std::string& name) {
  if (name == "test" || name == "main") return algebra::CurveProfile::builtin(name);
  static std::unique_ptr<algebra::CurveProfile> custom;
  custom = algebra::CurveProfile::load(name);
  return *custom;
}

// Input commitment file: "ZKIC", version, profile id, point.
std::vector<std::uint8_t> encode_input_commitment(const algebra::CurveProfile& profile, const algebra::GroupPoint& c) {
  util::ByteWriter w;
  w.bytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>("ZKIC"), 4));
  w.u32(zkdps::kContainerVersion);
  w.u8(static_cast<std::uint8_t>(profile.id()));
  w.point(c);
  return w.take();
}

algebra::GroupPoint decode_input_commitment(const algebra::CurveProfile& profile, std::span<const std::uint8_t> b) {
  util::ByteReader r(b);
  auto magic = r.bytes(4);
  if (std::string(magic.begin(), magic.end()) != "ZKIC") throw Error(ErrorCode::MalformedProof, "bad magic");
  if (r.u32() != zkdps::kContainerVersion) throw Error(ErrorCode::MalformedProof, "unsupported version");
  if (r.u8() != static_cast<std::uint8_t>(profile.id())) throw Error(ErrorCode::MalformedProof, "profile mismatch");
  auto p = r.point(profile);
  r.expect_done();
  return p;
}

transcript::Mode parse_mode(const std::string& s) {
  return s == "interactive" ? transcript::Mode::Interactive : transcript::Mode::FiatShamir;
}

std::vector<std::int64_t> load_or_sample_input(const std::string& path, const model::ModelArchitecture& arch,
                                               const Globals& g) {
  if (!path.empty()) return model::parse_tensor(model::read_text(path));
  auto rng = g.rng("cli/input");
  return model::random_input(arch, rng);
}

// ---------------------------------------------------------------------------

struct ModelArgs {
  std::vector<std::size_t> widths = {4, 8, 8, 2};
  std::string head = "sigmoid";
  std::int64_t input_scale = 256;
  std::int64_t weight_scale = 64;
  unsigned q_bits = 32;
  std::int64_t head_lo = -4096;
  std::int64_t head_hi = 4095;
  std::string out;
};

int cmd_model(const Globals& g, const ModelArgs& a) {
  model::MlpConfig cfg;
  cfg.widths = a.widths;
  cfg.input_scale = a.input_scale;
  cfg.weight_scale = a.weight_scale;
  cfg.q_bits = a.q_bits;
  cfg.head_lo = a.head_lo;
  cfg.head_hi = a.head_hi;
  if (a.head == "none") {
    cfg.head.reset();
  } else {
    cfg.head = gadgets::table_fn_from_string(a.head);
  }
  auto rng = g.rng("cli/model");
  auto m = model::random_mlp(cfg, rng);
  auto text = model::model_to_json(m);
  if (a.out.empty()) {
    std::cout << text << "\n";
  } else {
    model::save_text(a.out, text);
  }
  return kOk;
}

struct ProveArgs {
  std::string model;
  std::string input;
  std::string out;
  std::string commitments;
  std::string input_commitment;
  std::string mode = "fiat-shamir";
  std::uint64_t challenge_seed = 0;
};

std::string default_sibling(const std::string& given, const std::string& base, const char* suffix) {
  return given.empty() ? base + suffix : given;
}

int cmd_commit(const Globals& g, const ProveArgs& a) {
  const auto& profile = resolve_profile(g.profile);
  auto m = model::load_model(a.model);
  commit::CommitmentKey key(profile, zkdps::required_capacity(m.arch));
  auto rng = g.rng("cli/weights");
  auto shard = zkdps::commit_shard(key, m, 0, m.arch.num_layers(), rng);
  auto bytes = shard.commitments.serialize(profile);
  write_bytes(a.out, bytes);
  ordered_json j = {{"event", "commit"},
                    {"profile", profile.name()},
                    {"layers", m.arch.num_layers()},
                    {"bytes", bytes.size()},
                    {"digest", util::to_hex(util::sha256(bytes))}};
  if (g.json) {
    std::cout << j.dump() << "\n";
  } else {
    std::cout << "committed " << m.arch.num_layers() << " layers to " << a.out << " (" << bytes.size() << " bytes)\n";
  }
  return kOk;
}

int cmd_prove(const Globals& g, const ProveArgs& a) {
  const auto& profile = resolve_profile(g.profile);
  auto m = model::load_model(a.model);
  auto x = load_or_sample_input(a.input, m.arch, g);
  commit::CommitmentKey key(profile, zkdps::required_capacity(m.arch));
  // Same stream labels as `commit`, so equal seeds reproduce its commitments.
  auto wrng = g.rng("cli/weights");
  auto shard = zkdps::commit_shard(key, m, 0, m.arch.num_layers(), wrng);
  auto irng = g.rng("cli/input-blinding");
  auto input = zkdps::commit_activation(key, m.arch, 0, x, irng);
  auto fwd = model::forward(m, x);
  zkdps::ProofOptions opt;
  opt.mode = parse_mode(a.mode);
  opt.challenge_seed = a.challenge_seed;
  auto prng = g.rng("cli/prove");
  auto out = zkdps::prove_shard(key, m, shard, input, fwd.trace, prng, opt);
  auto bytes = out.proof.serialize(profile);

  write_bytes(a.out, bytes);
  write_bytes(default_sibling(a.commitments, a.out, ".weights"), shard.commitments.serialize(profile));
  write_bytes(default_sibling(a.input_commitment, a.out, ".input"),
              encode_input_commitment(profile, input.commitment));
  ordered_json j = {{"event", "prove"},
                    {"profile", profile.name()},
                    {"mode", a.mode},
                    {"proof_bytes", bytes.size()},
                    {"digest", util::to_hex(util::sha256(bytes))},
                    {"output", fwd.output}};
  if (g.json) {
    std::cout << j.dump() << "\n";
  } else {
    std::cout << "proof written to " << a.out << " (" << bytes.size() << " bytes)\n"
              << "output\n" << model::format_tensor(fwd.output);
  }
  return kOk;
}

int cmd_verify(const Globals& g, const ProveArgs& a) {
  const auto& profile = resolve_profile(g.profile);
  auto arch = model::load_architecture(a.model);
  commit::CommitmentKey key(profile, zkdps::required_capacity(arch));
  auto proof = read_bytes(a.out);
  zkdps::VerificationReport rep;
  try {
    auto weights = zkdps::WeightCommitments::deserialize(
        read_bytes(default_sibling(a.commitments, a.out, ".weights")), profile);
    auto input =
        decode_input_commitment(profile, read_bytes(default_sibling(a.input_commitment, a.out, ".input")));
    zkdps::ProofOptions opt;
    opt.mode = parse_mode(a.mode);
    opt.challenge_seed = a.challenge_seed;
    rep = zkdps::verify_shard_bytes(key, arch, weights, input, proof, opt);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::IoError) throw;
    rep.failed_check = std::string("statement/malformed: ") + e.what();
  }
  if (g.json) {
    for (const auto& l : rep.layers) {
      ordered_json j = {{"event", "layer"}, {"layer", l.index}, {"gadget", l.gadget}, {"checked", l.checked},
                        {"ok", l.ok}};
      if (!l.failed_check.empty()) j["failed_check"] = l.failed_check;
      std::cout << j.dump() << "\n";
    }
    ordered_json j = {{"event", "verdict"},      {"accepted", rep.accepted},     {"failed_check", rep.failed_check},
                      {"verify_ms", rep.verify_ms}, {"proof_bytes", rep.proof_bytes}};
    std::cout << j.dump() << "\n";
  } else if (rep.accepted) {
    std::cout << "accepted: " << rep.layers.size() << " layers in " << rep.verify_ms << " ms\n";
  }
  if (!rep.accepted) {
    std::cerr << "rejected";
    for (const auto& l : rep.layers) {
      if (l.checked && !l.ok) std::cerr << " at layer " << l.index << " (" << l.gadget << ")";
    }
    std::cerr << ": " << rep.failed_check << "\n";
    return kRejected;
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct InferArgs {
  std::string model;
  std::string input;
  std::size_t cut = 0;
  double epsilon = std::numeric_limits<double>::infinity();
  double sensitivity = 1.0;
};

int cmd_infer(const Globals& g, const InferArgs& a) {
  auto m = model::load_model(a.model);
  auto x = load_or_sample_input(a.input, m.arch, g);
  std::vector<std::int64_t> y;
  ordered_json j = {{"event", "infer"}};
  if (a.cut == 0) {
    y = model::forward(m, x).output;
  } else {
    auto state = model::split_forward(m, x, a.cut);
    if (!std::isinf(a.epsilon)) {
      auto rng = g.rng("cli/noise");
      state.z = model::privatize_embedding(state.z, a.epsilon, a.sensitivity, m.arch.input_scale, rng);
      j["epsilon"] = a.epsilon;
    }
    j["cut"] = a.cut;
    j["z"] = state.z;
    y = model::resume(m, state);
  }
  j["output"] = y;
  if (g.json) {
    std::cout << j.dump() << "\n";
  } else {
    std::cout << model::format_tensor(y);
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string scenario;
  std::string model;
  std::string input;
  std::string log;
  std::size_t nodes = 3;
  std::size_t redundancy = 0;
  std::vector<std::size_t> cuts;
  std::string proof_mode;
};

int cmd_simulate(const Globals& g, const SimulateArgs& a, bool profile_given) {
  netsim::Scenario sc;
  if (!a.scenario.empty()) {
    sc = netsim::parse_scenario(model::read_text(a.scenario));
  } else {
    for (std::uint32_t i = 0; i < a.nodes; ++i) sc.nodes.push_back({i, netsim::TeeType::Cpu, 1.0, {}});
  }
  auto& cfg = sc.config;
  if (g.seeded) cfg.seed = g.seed;
  if (a.redundancy) cfg.redundancy = a.redundancy;
  if (!a.cuts.empty()) cfg.cuts = a.cuts;
  if (!a.proof_mode.empty()) cfg.proofs = a.proof_mode == "on";
  if (profile_given) cfg.profile = algebra::CurveProfile::builtin(g.profile).id();

  model::Model m;
  if (a.model.empty()) {
    util::Csprng rng(cfg.seed, "cli/model");
    m = model::random_mlp({}, rng);
  } else {
    m = model::load_model(a.model);
  }
  std::vector<std::int64_t> x;
  if (a.input.empty()) {
    util::Csprng rng(cfg.seed, "cli/input");
    x = model::random_input(m.arch, rng);
  } else {
    x = model::parse_tensor(model::read_text(a.input));
  }

  auto res = netsim::run_session(m, x, sc.nodes, cfg);
  auto log = netsim::format_log(res.log);
  if (a.log.empty()) {
    std::cout << log;
  } else {
    model::save_text(a.log, log);
  }
  ordered_json j = {{"event", "verdict"}, {"verified", res.verified}};
  if (res.output) j["output"] = *res.output;
  if (!res.failure.empty()) j["failure"] = res.failure;
  j["flagged"] = res.flagged;
  std::cout << j.dump() << "\n";
  if (!res.verified) {
    std::cerr << "session not verified: " << res.failure << "\n";
    return kRejected;
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct ConsensusArgs {
  std::string outputs;
  std::size_t redundancy = 0;
  double quorum = consensus::ConsensusConfig::kMajority;
  bool cdv = false;
  double c = 3.0;
  double scale = 1.0;
  std::vector<double> reference;  // mean, stddev
};

// {"outputs": [{"node": 0, "values": [..]}, ...]}
int cmd_consensus(const Globals& g, const ConsensusArgs& a) {
  std::vector<consensus::NodeOutput> outs;
  try {
    auto j = nlohmann::json::parse(model::read_text(a.outputs));
    for (const auto& o : j.at("outputs")) {
      outs.push_back(consensus::NodeOutput::of_tensor(o.at("node").get<std::uint32_t>(),
                                                      o.at("values").get<std::vector<std::int64_t>>()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("outputs: ") + e.what());
  }
  if (outs.empty()) throw UsageError("outputs file lists no nodes");
  consensus::ConsensusConfig cfg;
  cfg.redundancy = a.redundancy ? a.redundancy : outs.size();
  cfg.quorum = a.quorum;
  cfg.cdv = a.cdv;
  cfg.cdv_c = a.c;
  cfg.cdv_scale = a.scale;
  if (!a.reference.empty()) {
    if (a.reference.size() != 2) throw UsageError("--reference takes MEAN STDDEV");
    cfg.reference = consensus::DistributionStats{a.reference[0], a.reference[1], 1, {}};
  }
  cfg.validate();
  auto res = consensus::decide(outs, cfg);
  if (g.json) {
    for (const auto& r : consensus::round_log(0, 0, outs, res)) std::cout << r.to_json() << "\n";
  }
  ordered_json j = {{"event", "consensus"},
                    {"status", std::string(consensus::to_string(res.status))},
                    {"tally", res.tally},
                    {"total", res.total},
                    {"required", cfg.required_votes(cfg.redundancy)},
                    {"agreeing", res.agreeing},
                    {"dissenters", res.dissenters}};
  if (!res.value.empty()) j["value"] = res.tensor();
  if (g.json) {
    std::cout << j.dump() << "\n";
  } else {
    std::cout << consensus::to_string(res.status) << " " << res.tally << "/" << cfg.redundancy << "\n";
    if (!res.value.empty()) std::cout << model::format_tensor(res.tensor());
  }
  return res.status == consensus::Status::Verified ? kOk : kRejected;
}

// ---------------------------------------------------------------------------

struct TableArgs {
  std::string fn = "sigmoid";
  std::int64_t lo = -8;
  std::int64_t hi = 8;
  std::int64_t scale = 4;
};

int cmd_table(const Globals& g, const TableArgs& a) {
  auto fn = gadgets::table_fn_from_string(a.fn);
  auto t = fn == gadgets::TableFn::Range ? gadgets::range_table(a.lo, a.hi)
                                         : gadgets::build_function_table(fn, a.lo, a.hi, a.scale);
  for (std::size_t r = 0; r < t.rows(); ++r) {
    if (g.json) {
      ordered_json j = {{"x", t.columns[0][r]}};
      if (t.width() > 1) j["y"] = t.columns[1][r];
      std::cout << j.dump() << "\n";
    } else {
      std::cout << t.columns[0][r];
      if (t.width() > 1) std::cout << " " << t.columns[1][r];
      std::cout << "\n";
    }
  }
  return kOk;
}

bool is_usage_error(ErrorCode c) {
  switch (c) {
    case ErrorCode::ParseError:
    case ErrorCode::IoError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidProfile:
    case ErrorCode::BadCutPoint:
    case ErrorCode::NonPositiveEpsilon:
    case ErrorCode::ShapeMismatch:
    case ErrorCode::NoNodes:
      return true;
    default:
      return false;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Verifiable decentralized inference: commitments, proofs, consensus and network simulation"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--profile", g.profile, "Curve profile: test, main, or a profile file")->capture_default_str();
  auto* seed_opt = app.add_option("--seed", g.seed, "Seed for every random choice (default: OS entropy)");
  std::string format = "text";
  app.add_option("--format", format, "Report format")->check(CLI::IsMember({"text", "json"}))->capture_default_str();

  ModelArgs ma;
  auto* model_cmd = app.add_subcommand("model", "Generate a random quantized MLP as a model file");
  model_cmd->add_option("--widths", ma.widths, "Layer widths")->delimiter(',')->capture_default_str();
  model_cmd->add_option("--head", ma.head, "Output lookup head or 'none'")->capture_default_str();
  model_cmd->add_option("--input-scale", ma.input_scale)->capture_default_str();
  model_cmd->add_option("--weight-scale", ma.weight_scale)->capture_default_str();
  model_cmd->add_option("--q-bits", ma.q_bits)->capture_default_str();
  model_cmd->add_option("--head-lo", ma.head_lo)->capture_default_str();
  model_cmd->add_option("--head-hi", ma.head_hi)->capture_default_str();
  model_cmd->add_option("-o,--out", ma.out, "Output path (default stdout)");

  ProveArgs pa;
  auto add_statement = [&](CLI::App* c, bool proof_required) {
    c->add_option("--model", pa.model, "Model file")->required()->check(CLI::ExistingFile);
    auto* o = c->add_option("--proof", pa.out, "Proof container path");
    if (proof_required) o->required();
    c->add_option("--commitments", pa.commitments, "Weight commitments (default PROOF.weights)");
    c->add_option("--input-commitment", pa.input_commitment, "Input commitment (default PROOF.input)");
    c->add_option("--mode", pa.mode, "Transcript mode")
        ->check(CLI::IsMember({"fiat-shamir", "interactive"}))
        ->capture_default_str();
    c->add_option("--challenge-seed", pa.challenge_seed, "Shared verifier coins in interactive mode");
  };
  auto* commit_cmd = app.add_subcommand("commit", "Commit to a model's weights");
  commit_cmd->add_option("--model", pa.model, "Model file")->required()->check(CLI::ExistingFile);
  commit_cmd->add_option("-o,--out", pa.out, "Commitments path")->required();
  auto* prove_cmd = app.add_subcommand("prove", "Prove inference of a model on an input");
  add_statement(prove_cmd, true);
  prove_cmd->add_option("--input", pa.input, "Input tensor, one integer per line (default: random)");
  auto* verify_cmd = app.add_subcommand("verify", "Verify a proof container against commitments");
  add_statement(verify_cmd, true);

  InferArgs ia;
  auto* infer_cmd = app.add_subcommand("infer", "Plain forward pass, optionally split with a noised boundary");
  infer_cmd->add_option("--model", ia.model, "Model file")->required()->check(CLI::ExistingFile);
  infer_cmd->add_option("--input", ia.input, "Input tensor (default: random)");
  infer_cmd->add_option("--cut", ia.cut, "Split after this many layers");
  infer_cmd->add_option("--epsilon", ia.epsilon, "Privacy budget for the boundary tensor");
  infer_cmd->add_option("--sensitivity", ia.sensitivity, "L1 sensitivity in real units")->capture_default_str();

  SimulateArgs sa;
  auto* sim_cmd = app.add_subcommand("simulate", "Run a simulated network session");
  sim_cmd->add_option("--scenario", sa.scenario, "Scenario file")->check(CLI::ExistingFile);
  sim_cmd->add_option("--model", sa.model, "Model file (default: random 4-8-8-2 MLP from the seed)");
  sim_cmd->add_option("--input", sa.input, "Input tensor (default: random from the seed)");
  sim_cmd->add_option("--nodes", sa.nodes, "Honest cpu nodes when no scenario is given")->capture_default_str();
  sim_cmd->add_option("--redundancy", sa.redundancy, "Replicas per shard");
  sim_cmd->add_option("--cut", sa.cuts, "Cut point; repeat for several");
  sim_cmd->add_option("--proof-mode", sa.proof_mode, "Prove every shard")->check(CLI::IsMember({"on", "off"}));
  sim_cmd->add_option("--log", sa.log, "Write the session log here instead of stdout");

  ConsensusArgs ca;
  auto* cons_cmd = app.add_subcommand("consensus", "Decide over node outputs");
  cons_cmd->add_option("--outputs", ca.outputs, "Outputs file")->required()->check(CLI::ExistingFile);
  cons_cmd->add_option("--redundancy", ca.redundancy, "Assigned nodes m (default: number of outputs)");
  cons_cmd->add_option("--quorum", ca.quorum, "Required share of m")->capture_default_str();
  cons_cmd->add_flag("--cdv", ca.cdv, "Compare output distributions instead of exact bytes");
  cons_cmd->add_option("--c", ca.c, "CDV threshold multiplier")->capture_default_str();
  cons_cmd->add_option("--scale", ca.scale, "Output grid scale for CDV")->capture_default_str();
  cons_cmd->add_option("--reference", ca.reference, "CDV reference MEAN STDDEV")->expected(2);

  TableArgs ta;
  auto* table_cmd = app.add_subcommand("table", "Print a quantized function lookup table");
  table_cmd->add_option("--fn", ta.fn, "range, sigmoid, softmax-exp, gelu, rmsnorm-rsqrt")->capture_default_str();
  table_cmd->add_option("--lo", ta.lo)->capture_default_str();
  table_cmd->add_option("--hi", ta.hi)->capture_default_str();
  table_cmd->add_option("--scale", ta.scale)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }
  g.seeded = seed_opt->count() > 0;
  g.json = format == "json";

  try {
    if (*model_cmd) return cmd_model(g, ma);
    if (*commit_cmd) return cmd_commit(g, pa);
    if (*prove_cmd) return cmd_prove(g, pa);
    if (*verify_cmd) return cmd_verify(g, pa);
    if (*infer_cmd) return cmd_infer(g, ia);
    if (*sim_cmd) return cmd_simulate(g, sa, app.get_option("--profile")->count() > 0);
    if (*cons_cmd) return cmd_consensus(g, ca);
    if (*table_cmd) return cmd_table(g, ta);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_usage_error(e.code()) ? kUsage : kRejected;
  }
  return kUsage;
}
