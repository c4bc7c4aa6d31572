#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "vdi/error.hpp"
#include "vdi/model/model.hpp"

namespace vdi::model {

using nlohmann::json;

namespace {

json layer_json(const LayerSpec& l) {
  json j = {{"kind", to_string(l.kind)}, {"in", l.in}, {"out", l.out}};
  if (l.kind == LayerKind::Linear) j["scale"] = l.scale;
  if (l.kind == LayerKind::Lookup) {
    j["fn"] = gadgets::to_string(l.fn);
    j["lo"] = l.lo;
    j["hi"] = l.hi;
    j["scale"] = l.scale;
  }
  return j;
}

json arch_json(const ModelArchitecture& a) {
  json layers = json::array();
  for (const auto& l : a.layers) layers.push_back(layer_json(l));
  return {{"format", "vdi-model"}, {"version", 1}, {"input_scale", a.input_scale}, {"q_bits", a.q_bits},
          {"layers", layers}};
}

ModelArchitecture arch_from(const json& j) {
  if (j.value("format", "") != "vdi-model" || j.value("version", 0) != 1) {
    throw Error(ErrorCode::ParseError, "not a version 1 vdi-model document");
  }
  ModelArchitecture a;
  a.input_scale = j.at("input_scale").get<std::int64_t>();
  a.q_bits = j.at("q_bits").get<unsigned>();
  for (const auto& lj : j.at("layers")) {
    LayerSpec l;
    l.kind = layer_kind_from_string(lj.at("kind").get<std::string>());
    l.in = lj.at("in").get<std::size_t>();
    l.out = lj.value("out", l.in);
    l.scale = lj.value("scale", std::int64_t{1});
    if (l.kind == LayerKind::Lookup) {
      l.fn = gadgets::table_fn_from_string(lj.at("fn").get<std::string>());
      l.lo = lj.at("lo").get<std::int64_t>();
      l.hi = lj.at("hi").get<std::int64_t>();
    }
    a.layers.push_back(l);
  }
  a.validate();
  return a;
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("model file: ") + e.what());
  }
}

template <typename F>
auto wrap(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("model file: ") + e.what());
  }
}

}  // namespace

std::string architecture_to_json(const ModelArchitecture& arch) { return arch_json(arch).dump(2) + "\n"; }

std::string model_to_json(const Model& model) {
  json j = arch_json(model.arch);
  json ws = json::array();
  for (std::size_t i = 0; i < model.weights.size(); ++i) {
    if (model.arch.layers[i].kind != LayerKind::Linear) continue;
    ws.push_back({{"layer", i}, {"w", model.weights[i].w}, {"bias", model.weights[i].bias}});
  }
  j["weights"] = ws;
  return j.dump() + "\n";
}

ModelArchitecture architecture_from_json(std::string_view text) {
  return wrap([&] { return arch_from(parse_json(text)); });
}

Model model_from_json(std::string_view text) {
  return wrap([&] {
    json j = parse_json(text);
    Model m;
    m.arch = arch_from(j);
    m.weights.resize(m.arch.layers.size());
    for (const auto& wj : j.at("weights")) {
      auto i = wj.at("layer").get<std::size_t>();
      if (i >= m.weights.size()) throw Error(ErrorCode::ParseError, "weights for a missing layer");
      m.weights[i].w = wj.at("w").get<std::vector<std::int64_t>>();
      m.weights[i].bias = wj.at("bias").get<std::vector<std::int64_t>>();
    }
    m.validate();
    return m;
  });
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void save_text(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

Model load_model(const std::string& path) { return model_from_json(read_text(path)); }
ModelArchitecture load_architecture(const std::string& path) { return architecture_from_json(read_text(path)); }

std::vector<std::int64_t> parse_tensor(std::string_view text) {
  std::vector<std::int64_t> out;
  std::size_t line = 0;
  while (!text.empty()) {
    ++line;
    auto nl = text.find('\n');
    auto row = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    while (!row.empty() && (row.back() == '\r' || row.back() == ' ' || row.back() == '\t')) row.remove_suffix(1);
    while (!row.empty() && (row.front() == ' ' || row.front() == '\t')) row.remove_prefix(1);
    if (row.empty() || row.front() == '#') continue;
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(row.data(), row.data() + row.size(), v);
    if (ec != std::errc() || p != row.data() + row.size()) {
      throw Error(ErrorCode::ParseError, "tensor line " + std::to_string(line) + " is not an integer");
    }
    out.push_back(v);
  }
  return out;
}

std::string format_tensor(std::span<const std::int64_t> values) {
  std::string s;
  for (auto v : values) s += std::to_string(v) + "\n";
  return s;
}

}  // namespace vdi::model
