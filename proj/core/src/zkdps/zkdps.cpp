#include "vdi/zkdps/zkdps.hpp"

#include <chrono>

#include <json.hpp>

#include "vdi/error.hpp"

namespace vdi::zkdps {

using gadgets::ProverMode;
using model::LayerSpec;
using model::ModelArchitecture;
using transcript::Transcript;

namespace {

constexpr std::string_view kDomain = "zkdps/v1";
constexpr std::uint8_t kMagic[4] = {'Z', 'K', 'D', 'P'};

std::size_t pow2(std::size_t n) { return std::size_t{1} << poly::log2_ceil(n); }

std::string layer_label(std::size_t i, std::string_view gadget) {
  return std::string(kDomain) + "/layer/" + std::to_string(i) + "/" + std::string(gadget);
}

std::string_view gadget_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::Linear: return "linear";
    case LayerKind::Relu: return "relu";
    case LayerKind::Lookup: return "lookup";
  }
  return "?";
}

bool needs_range(const ModelArchitecture& arch, std::size_t i) {
  if (arch.layers[i].kind != LayerKind::Linear) return false;
  return i + 1 == arch.layers.size() || arch.layers[i + 1].kind == LayerKind::Linear;
}

std::vector<FieldElement> padded_activation(const PrimeField& f, const ModelArchitecture& arch,
                                            std::size_t boundary, std::span<const std::int64_t> values) {
  std::vector<std::int64_t> v(values.begin(), values.end());
  v.resize(pow2(arch.width(boundary)), arch.pad_value(boundary));
  return gadgets::to_field(f, v);
}

std::vector<std::int64_t> logical_values(const std::vector<FieldElement>& values, std::size_t width) {
  std::vector<std::int64_t> out;
  for (std::size_t j = 0; j < width && j < values.size(); ++j) out.push_back(values[j].to_int());
  return out;
}

void absorb_header(Transcript& tr, const CommitmentKey& key, const ModelArchitecture& arch,
                   const WeightCommitments& wc, const GroupPoint& prev, const GroupPoint& input,
                   const FieldElement& handoff) {
  tr.absorb(std::string(kDomain) + "/profile", key.profile().name());
  tr.absorb(std::string(kDomain) + "/architecture", arch.digest());
  tr.absorb_u64(std::string(kDomain) + "/first", wc.first);
  tr.absorb_u64(std::string(kDomain) + "/last", wc.last);
  for (std::size_t k = 0; k < wc.w.size(); ++k) {
    tr.absorb_point(std::string(kDomain) + "/weights", wc.w[k]);
    tr.absorb_point(std::string(kDomain) + "/bias", wc.bias[k]);
  }
  tr.absorb_point(std::string(kDomain) + "/previous", prev);
  tr.absorb_point(std::string(kDomain) + "/input", input);
  tr.absorb_field(std::string(kDomain) + "/handoff", handoff);
}

void check_bits(const PrimeField& f, const ModelArchitecture& arch) {
  if (arch.q_bits > gadgets::max_relu_bits(f)) {
    throw Error(ErrorCode::InvalidArgument, "q_bits " + std::to_string(arch.q_bits) + " exceeds the field's limit " +
                                                std::to_string(gadgets::max_relu_bits(f)));
  }
}

// Sign/magnitude bits that ignore overflow; only used by dishonest provers.
gadgets::ReluWitness forced_bits(const PrimeField& f, std::span<const FieldElement> z, unsigned q) {
  gadgets::ReluWitness w;
  w.bits.assign(q + 1, std::vector<FieldElement>(z.size(), FieldElement::zero(f)));
  for (std::size_t j = 0; j < z.size(); ++j) {
    std::int64_t v = 0;
    try {
      v = z[j].to_int();
    } catch (const Error&) {
      v = static_cast<std::int64_t>(z[j].value().limb[0] >> 2);
    }
    std::uint64_t mag = static_cast<std::uint64_t>(v < 0 ? -v : v);
    w.bits[0][j] = v >= 0 ? FieldElement::one(f) : FieldElement::zero(f);
    for (unsigned k = 1; k <= q; ++k) {
      if ((mag >> (q - k)) & 1) w.bits[k][j] = FieldElement::one(f);
    }
  }
  return w;
}

gadgets::ReluProof relu_proof(const CommitmentKey& key, const CommittedTensor& z, const CommittedTensor& a, unsigned q,
                              Transcript& tr, util::Csprng& rng, ProverMode mode) {
  if (mode == ProverMode::Honest) return gadgets::prove_relu(key, z, a, q, tr, rng);
  return gadgets::prove_relu_unchecked(key, z, a, forced_bits(key.field(), z.values, q), q, tr, rng);
}

CommittedTensor relu_of(const CommitmentKey& key, const CommittedTensor& z, util::Csprng& rng) {
  const PrimeField& f = key.field();
  std::vector<FieldElement> a;
  for (const auto& v : z.values) {
    bool negative = false;
    try {
      negative = v.to_int() < 0;
    } catch (const Error&) {
    }
    a.push_back(negative ? FieldElement::zero(f) : v);
  }
  return CommittedTensor::commit(key, std::move(a), rng);
}

std::vector<std::int64_t> padded_ints(std::span<const std::int64_t> v, std::size_t n, std::int64_t pad) {
  std::vector<std::int64_t> out(v.begin(), v.end());
  out.resize(n, pad);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Commitments

std::vector<std::uint8_t> WeightCommitments::serialize(const algebra::CurveProfile& profile) const {
  util::ByteWriter w;
  w.bytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>("ZKWC"), 4));
  w.u32(kContainerVersion);
  w.u8(static_cast<std::uint8_t>(profile.id()));
  w.u32(first);
  w.u32(last);
  for (std::size_t k = 0; k < this->w.size(); ++k) {
    w.point(this->w[k]);
    w.point(bias[k]);
  }
  return w.take();
}

WeightCommitments WeightCommitments::deserialize(std::span<const std::uint8_t> bytes,
                                                 const algebra::CurveProfile& profile) {
  util::ByteReader r(bytes);
  auto magic = r.bytes(4);
  if (std::string(magic.begin(), magic.end()) != "ZKWC") throw Error(ErrorCode::MalformedProof, "bad magic");
  if (r.u32() != kContainerVersion) throw Error(ErrorCode::MalformedProof, "unsupported version");
  if (r.u8() != static_cast<std::uint8_t>(profile.id())) throw Error(ErrorCode::MalformedProof, "profile mismatch");
  WeightCommitments wc;
  wc.first = r.u32();
  wc.last = r.u32();
  if (wc.last <= wc.first || wc.last - wc.first > 4096) throw Error(ErrorCode::MalformedProof, "bad layer range");
  for (std::uint32_t i = wc.first; i < wc.last; ++i) {
    wc.w.push_back(r.point(profile));
    wc.bias.push_back(r.point(profile));
  }
  r.expect_done();
  return wc;
}

CommittedShard commit_shard(const CommitmentKey& key, const model::Model& model, std::size_t first,
                            std::size_t last, util::Csprng& rng) {
  model.validate();
  if (first >= last || last > model.arch.layers.size()) throw Error(ErrorCode::InvalidArgument, "bad layer range");
  const PrimeField& f = key.field();
  CommittedShard cs;
  cs.commitments.first = static_cast<std::uint32_t>(first);
  cs.commitments.last = static_cast<std::uint32_t>(last);
  for (std::size_t i = first; i < last; ++i) {
    const auto& l = model.arch.layers[i];
    CommittedTensor w, b;
    if (l.kind == LayerKind::Linear) {
      w = CommittedTensor::commit(key, gadgets::pad_matrix(f, model.weights[i].w, l.out, l.in), rng);
      b = CommittedTensor::commit(key, gadgets::to_field_padded(f, model.weights[i].bias), rng);
    } else {
      w.commitment = b.commitment = GroupPoint::infinity(key.profile());
    }
    cs.commitments.w.push_back(w.commitment);
    cs.commitments.bias.push_back(b.commitment);
    cs.w.push_back(std::move(w));
    cs.bias.push_back(std::move(b));
  }
  return cs;
}

CommittedTensor commit_activation(const CommitmentKey& key, const ModelArchitecture& arch, std::size_t boundary,
                                  std::span<const std::int64_t> values, util::Csprng& rng) {
  if (values.size() != arch.width(boundary)) throw Error(ErrorCode::ShapeMismatch, "activation has the wrong width");
  return CommittedTensor::commit(key, padded_activation(key.field(), arch, boundary, values), rng);
}

CommittedTensor commit_activation_with(const CommitmentKey& key, const ModelArchitecture& arch,
                                       std::size_t boundary, std::span<const std::int64_t> values,
                                       const FieldElement& blinding) {
  if (values.size() != arch.width(boundary)) throw Error(ErrorCode::ShapeMismatch, "activation has the wrong width");
  return CommittedTensor::commit_with(key, padded_activation(key.field(), arch, boundary, values), blinding);
}

bool check_activation(const CommitmentKey& key, const ModelArchitecture& arch, std::size_t boundary,
                      std::span<const std::int64_t> values, const FieldElement& blinding, const GroupPoint& c) {
  if (values.size() != arch.width(boundary)) return false;
  auto v = padded_activation(key.field(), arch, boundary, values);
  return commit::commit_vector(key, v, blinding).point == c;
}

std::size_t required_capacity(const ModelArchitecture& arch) {
  std::size_t cap = 1;
  for (const auto& l : arch.layers) {
    cap = std::max({cap, pow2(l.in), pow2(l.out)});
    if (l.kind == LayerKind::Linear) {
      cap = std::max({cap, pow2(l.in) * pow2(l.out), pow2(static_cast<std::size_t>(l.scale))});
    }
    if (l.kind == LayerKind::Lookup) cap = std::max(cap, pow2(static_cast<std::size_t>(l.hi - l.lo + 1)));
  }
  return cap;
}

// ---------------------------------------------------------------------------
// Container

std::vector<std::uint8_t> ShardProof::serialize(const algebra::CurveProfile& profile) const {
  util::ByteWriter w;
  w.bytes(kMagic);
  w.u32(kContainerVersion);
  w.u8(static_cast<std::uint8_t>(profile.id()));
  w.u8(static_cast<std::uint8_t>(mode));
  w.u32(first);
  w.u32(last);
  w.point(input);
  w.field(handoff);
  w.u32(static_cast<std::uint32_t>(layers.size()));
  for (const auto& l : layers) {
    util::ByteWriter s;
    s.u8(static_cast<std::uint8_t>(l.kind));
    s.point(l.output);
    switch (l.kind) {
      case LayerKind::Linear:
        l.linear.write(s);
        s.u8(l.range_aux ? 1 : 0);
        if (l.range_aux) {
          s.point(*l.range_aux);
          l.range.write(s);
        }
        break;
      case LayerKind::Relu: l.relu.write(s); break;
      case LayerKind::Lookup: l.lookup.write(s); break;
    }
    w.section(s.data());
  }
  return w.take();
}

ShardProof ShardProof::deserialize(std::span<const std::uint8_t> bytes, const algebra::CurveProfile& profile) {
  util::ByteReader r(bytes);
  auto magic = r.bytes(4);
  if (!std::equal(magic.begin(), magic.end(), kMagic)) throw Error(ErrorCode::MalformedProof, "bad magic");
  if (r.u32() != kContainerVersion) throw Error(ErrorCode::MalformedProof, "unsupported container version");
  if (r.u8() != static_cast<std::uint8_t>(profile.id())) throw Error(ErrorCode::MalformedProof, "profile mismatch");
  ShardProof p;
  p.profile = profile.id();
  auto mode = r.u8();
  if (mode > 1) throw Error(ErrorCode::MalformedProof, "unknown transcript mode");
  p.mode = static_cast<transcript::Mode>(mode);
  p.first = r.u32();
  p.last = r.u32();
  p.input = r.point(profile);
  p.handoff = r.field(profile.scalar_field());
  auto n = r.u32();
  if (n == 0 || p.last <= p.first || n != p.last - p.first) throw Error(ErrorCode::MalformedProof, "bad layer count");
  for (std::uint32_t i = 0; i < n; ++i) try {
    auto s = r.section();
    LayerProof l;
    auto kind = s.u8();
    if (kind > 2) throw Error(ErrorCode::MalformedProof, "unknown layer kind");
    l.kind = static_cast<LayerKind>(kind);
    l.output = s.point(profile);
    switch (l.kind) {
      case LayerKind::Linear: {
        l.linear = gadgets::LinearProof::read(s, profile);
        auto has_range = s.u8();
        if (has_range > 1) throw Error(ErrorCode::MalformedProof, "bad range flag");
        if (has_range) {
          l.range_aux = s.point(profile);
          l.range = gadgets::ReluProof::read(s, profile);
        }
        break;
      }
      case LayerKind::Relu: l.relu = gadgets::ReluProof::read(s, profile); break;
      case LayerKind::Lookup: l.lookup = gadgets::LookupProof::read(s, profile); break;
    }
    s.expect_done();
    p.layers.push_back(std::move(l));
  } catch (const Error& e) {
    throw Error(ErrorCode::MalformedProof, "layer " + std::to_string(p.first + i) + ": " + e.what());
  }
  r.expect_done();
  return p;
}

// ---------------------------------------------------------------------------
// Proving

ShardOutput prove_shard(const CommitmentKey& key, const model::Model& model, const CommittedShard& weights,
                        const CommittedTensor& input, const model::InferenceTrace& trace, util::Csprng& rng,
                        const ProofOptions& options) {
  const PrimeField& f = key.field();
  const auto& arch = model.arch;
  const std::size_t first = weights.commitments.first, last = weights.commitments.last;
  check_bits(f, arch);
  if (last > arch.layers.size() || first >= last) throw Error(ErrorCode::InvalidArgument, "bad layer range");
  if (trace.first_layer != first || trace.num_layers() != last - first) {
    throw Error(ErrorCode::TraceMismatch, "trace does not cover the shard's layers");
  }
  if (input.values.size() != pow2(arch.width(first))) throw Error(ErrorCode::ShapeMismatch, "input size");
  const bool honest = options.prover == ProverMode::Honest;
  if (honest) {
    auto x = logical_values(input.values, arch.width(first));
    if (x != trace.input()) throw Error(ErrorCode::TraceMismatch, "trace input differs from the committed input");
    auto replay = model::forward_range(model, first, last, x);
    if (replay.trace.activations != trace.activations || replay.trace.remainders != trace.remainders) {
      throw Error(ErrorCode::TraceMismatch, "trace does not replay against the weights");
    }
  }

  ShardOutput out;
  ShardProof& proof = out.proof;
  proof.profile = key.profile().id();
  proof.mode = options.mode;
  proof.first = static_cast<std::uint32_t>(first);
  proof.last = static_cast<std::uint32_t>(last);
  FieldElement fresh = rng.field_element(f);
  CommittedTensor cur = CommittedTensor::commit_with(key, input.values, fresh);
  proof.input = cur.commitment;
  proof.handoff = fresh - input.blinding;

  auto tr = Transcript::make(options.mode, f, kDomain, options.challenge_seed);
  absorb_header(tr, key, arch, weights.commitments, input.commitment, proof.input, proof.handoff);

  for (std::size_t i = first; i < last; ++i) {
    const LayerSpec& l = arch.layers[i];
    const std::size_t k = i - first;
    LayerProof lp;
    lp.kind = l.kind;
    auto out_values = padded_activation(f, arch, i + 1, trace.activations[k + 1]);
    CommittedTensor next = CommittedTensor::commit(key, std::move(out_values), rng);
    lp.output = next.commitment;
    tr.absorb_point(layer_label(i, gadget_name(l.kind)), lp.output);
    switch (l.kind) {
      case LayerKind::Linear: {
        auto rem = CommittedTensor::commit(
            key, gadgets::to_field(f, padded_ints(trace.remainders[k], pow2(l.out), 0)), rng);
        gadgets::LinearClaim claim{weights.w[k].commitment, weights.bias[k].commitment, cur.commitment,
                                   next.commitment, l.in, l.out, l.scale};
        lp.linear = gadgets::prove_linear(key, claim, weights.w[k], weights.bias[k], cur, next, rem, tr, rng,
                                          options.prover);
        if (needs_range(arch, i)) {
          auto aux = relu_of(key, next, rng);
          lp.range_aux = aux.commitment;
          tr.absorb_point(layer_label(i, "range"), aux.commitment);
          lp.range = relu_proof(key, next, aux, arch.q_bits, tr, rng, options.prover);
        }
        break;
      }
      case LayerKind::Relu:
        lp.relu = relu_proof(key, cur, next, arch.q_bits, tr, rng, options.prover);
        break;
      case LayerKind::Lookup: {
        const CommittedTensor* cols[] = {&cur, &next};
        lp.lookup = gadgets::prove_lookup(key, l.table(), cols, tr, rng, options.prover);
        break;
      }
    }
    proof.layers.push_back(std::move(lp));
    cur = std::move(next);
  }
  out.output = std::move(cur);
  return out;
}

// ---------------------------------------------------------------------------
// Verification

VerificationReport verify_shard(const CommitmentKey& key, const ModelArchitecture& arch,
                                const WeightCommitments& weights, const GroupPoint& input, const ShardProof& proof,
                                const ProofOptions& options) {
  auto start = std::chrono::steady_clock::now();
  VerificationReport rep;
  auto finish = [&](std::string failed) {
    rep.failed_check = std::move(failed);
    rep.accepted = rep.failed_check.empty();
    rep.verify_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return rep;
  };
  const PrimeField& f = key.field();
  try {
    arch.validate();
  } catch (const Error& e) {
    return finish(std::string("architecture/") + e.what());
  }
  const std::size_t first = weights.first, last = weights.last;
  if (last > arch.layers.size() || first >= last || weights.w.size() != last - first ||
      weights.bias.size() != last - first) {
    return finish("weights/range");
  }
  for (std::size_t i = first; i < last; ++i) {
    rep.layers.push_back({i, std::string(gadget_name(arch.layers[i].kind)), false, false, {}});
  }
  if (arch.q_bits > gadgets::max_relu_bits(f)) return finish("architecture/q-bits");
  if (proof.profile != key.profile().id()) return finish("container/profile");
  if (proof.mode != options.mode) return finish("container/mode");
  if (proof.first != first || proof.last != last || proof.layers.size() != last - first) {
    return finish("container/layer-range");
  }
  if (!(proof.input == input + key.h_pow(proof.handoff))) return finish("chaining/handoff");

  auto tr = Transcript::make(options.mode, f, kDomain, options.challenge_seed);
  absorb_header(tr, key, arch, weights, input, proof.input, proof.handoff);

  GroupPoint cur = proof.input;
  for (std::size_t i = first; i < last; ++i) {
    const LayerSpec& l = arch.layers[i];
    const std::size_t k = i - first;
    const LayerProof& lp = proof.layers[k];
    LayerReport& lr = rep.layers[k];
    lr.checked = true;
    Verdict v;
    if (lp.kind != l.kind) {
      v = Verdict::reject("layer-kind");
    } else {
      tr.absorb_point(layer_label(i, gadget_name(l.kind)), lp.output);
      try {
        switch (l.kind) {
          case LayerKind::Linear: {
            gadgets::LinearClaim claim{weights.w[k], weights.bias[k], cur, lp.output, l.in, l.out, l.scale};
            v = gadgets::verify_linear(key, claim, lp.linear, tr);
            if (v && needs_range(arch, i) != lp.range_aux.has_value()) v = Verdict::reject("range/presence");
            if (v && lp.range_aux) {
              tr.absorb_point(layer_label(i, "range"), *lp.range_aux);
              v = gadgets::verify_relu(key, lp.output, *lp.range_aux, poly::log2_ceil(l.out), arch.q_bits, lp.range, tr);
              if (!v) v = Verdict::reject("range/" + v.failed_check);
            }
            break;
          }
          case LayerKind::Relu:
            v = gadgets::verify_relu(key, cur, lp.output, poly::log2_ceil(l.in), arch.q_bits, lp.relu, tr);
            break;
          case LayerKind::Lookup: {
            GroupPoint cols[] = {cur, lp.output};
            v = gadgets::verify_lookup(key, l.table(), cols, poly::log2_ceil(l.in), lp.lookup, tr);
            break;
          }
        }
      } catch (const Error& e) {
        v = Verdict::reject(std::string("exception/") + e.what());
      }
    }
    lr.ok = v.ok;
    if (!v) {
      lr.failed_check = v.failed_check;
      return finish(layer_label(i, gadget_name(l.kind)) + "/" + v.failed_check);
    }
    cur = lp.output;
  }
  return finish({});
}

VerificationReport verify_shard_bytes(const CommitmentKey& key, const ModelArchitecture& arch,
                                      const WeightCommitments& weights, const GroupPoint& input,
                                      std::span<const std::uint8_t> bytes, const ProofOptions& options) {
  ShardProof proof;
  try {
    proof = ShardProof::deserialize(bytes, key.profile());
  } catch (const Error& e) {
    VerificationReport rep;
    rep.failed_check = std::string("container/malformed: ") + e.what();
    rep.proof_bytes = bytes.size();
    return rep;
  }
  auto rep = verify_shard(key, arch, weights, input, proof, options);
  rep.proof_bytes = bytes.size();
  return rep;
}

std::string VerificationReport::to_json() const {
  nlohmann::json layers_j = nlohmann::json::array();
  for (const auto& l : layers) {
    layers_j.push_back({{"layer", l.index}, {"gadget", l.gadget}, {"checked", l.checked}, {"ok", l.ok},
                        {"failed_check", l.failed_check}});
  }
  nlohmann::json j = {{"accepted", accepted},   {"failed_check", failed_check}, {"layers", layers_j},
                      {"prove_ms", prove_ms},   {"verify_ms", verify_ms},       {"proof_bytes", proof_bytes}};
  return j.dump(2);
}

}  // namespace vdi::zkdps
