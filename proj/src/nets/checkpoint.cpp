// Copyright (c) 2026 The adasg Authors
// SPDX-License-Identifier: Apache-2.0

#include "adasg/nets/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "adasg/error.hpp"

namespace adasg::nets {

using engine::Tensor;

namespace {

constexpr char kMagic[4] = {'A', 'D', 'S', 'G'};

class ByteWriter {
 public:
  void raw(const void* data, std::size_t n) { out_.append(static_cast<const char*>(data), n); }
  void u32(std::uint32_t v) { integer(v, 4); }
  void u64(std::uint64_t v) { integer(v, 8); }
  void f64(double v) { integer(std::bit_cast<std::uint64_t>(v), 8); }
  void f64s(std::span<const double> values) {
    for (double v : values) f64(v);
  }
  std::string take() { return std::move(out_); }

 private:
  void integer(std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::string& bytes) : bytes_(bytes) {}

  std::string raw(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(integer(4)); }
  std::uint64_t u64() { return integer(8); }
  double f64() { return std::bit_cast<double>(integer(8)); }
  std::vector<double> f64s(std::size_t n) {
    need(n * 8);
    std::vector<double> out(n);
    for (double& v : out) v = f64();
    return out;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (n > remaining()) throw CheckpointError("checkpoint truncated");
  }
  std::uint64_t integer(int bytes) {
    need(static_cast<std::size_t>(bytes));
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(bytes);
    return v;
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

using SpecMap = std::map<std::string, std::string>;

SpecMap parse_spec_text(const std::string& text) {
  SpecMap map;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw CheckpointError("malformed spec line: " + line);
    map[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return map;
}

const std::string& field(const SpecMap& map, const std::string& key) {
  const auto it = map.find(key);
  if (it == map.end()) throw CheckpointError("checkpoint spec is missing '" + key + "'");
  return it->second;
}

std::size_t parse_size(const std::string& text, const std::string& what) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
  if (text.empty() || *end != '\0') throw CheckpointError("bad integer for " + what + ": " + text);
  return static_cast<std::size_t>(v);
}

double parse_double(const std::string& text, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || *end != '\0') throw CheckpointError("bad number for " + what + ": " + text);
  return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  return parts;
}

std::string encode_layers(const NetworkSpec& spec) {
  std::string out;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    if (i) out += ';';
    out += std::to_string(l.width);
    out += l.batch_norm ? ":bn:" : ":-:";
    out += l.activation == Activation::kRelu ? "relu" : "none";
  }
  return out;
}

std::vector<LayerSpec> decode_layers(const std::string& text) {
  std::vector<LayerSpec> layers;
  for (const auto& item : split(text, ';')) {
    const auto parts = split(item, ':');
    if (parts.size() != 3) throw CheckpointError("bad layer entry: " + item);
    LayerSpec l;
    l.width = parse_size(parts[0], "layer width");
    if (parts[1] != "bn" && parts[1] != "-") throw CheckpointError("bad BN flag: " + parts[1]);
    l.batch_norm = parts[1] == "bn";
    if (parts[2] == "relu") {
      l.activation = Activation::kRelu;
    } else if (parts[2] == "none") {
      l.activation = Activation::kNone;
    } else {
      throw CheckpointError("bad activation: " + parts[2]);
    }
    layers.push_back(l);
  }
  return layers;
}

// BN hyperparameters are shared by all layers of one network.
std::pair<double, double> bn_settings(const Mlp& net) {
  for (const auto& n : net.norms()) {
    if (n) return {n->momentum, n->eps};
  }
  return {0.1, 1e-5};
}

std::string mlp_spec_text(const Mlp& net) {
  const auto [momentum, eps] = bn_settings(net);
  std::string s;
  s += "input_dim=" + std::to_string(net.spec().input_dim) + "\n";
  s += "layers=" + encode_layers(net.spec()) + "\n";
  s += "bn_momentum=" + format_double(momentum) + "\n";
  s += "bn_eps=" + format_double(eps) + "\n";
  const auto& q = net.quantization();
  s += "quant_bits=" + (q ? std::to_string(q->bits) : std::string("none")) + "\n";
  s += "quant_input=" + std::string(q && q->quantize_input ? "1" : "0") + "\n";
  s += "bn_frozen=" + std::string(net.bn_frozen() ? "1" : "0") + "\n";
  return s;
}

void write_mlp_arrays(ByteWriter& w, const Mlp& net) {
  for (std::size_t i = 0; i < net.dense().size(); ++i) {
    w.f64s(net.dense()[i].weight.values());
    w.f64s(net.dense()[i].bias.values());
    if (const auto& n = net.norms()[i]) {
      w.f64s(n->gamma.values());
      w.f64s(n->beta.values());
      w.f64s(n->running_mean);
      w.f64s(n->running_var);
    }
  }
}

std::size_t mlp_array_count(const NetworkSpec& spec) {
  std::size_t total = 0;
  std::size_t fan_in = spec.input_dim;
  for (const auto& l : spec.layers) {
    total += fan_in * l.width + l.width;
    if (l.batch_norm) total += 4 * l.width;
    fan_in = l.width;
  }
  return total;
}

Mlp read_mlp(ByteReader& r, const SpecMap& map) {
  NetworkSpec spec;
  spec.input_dim = parse_size(field(map, "input_dim"), "input_dim");
  spec.layers = decode_layers(field(map, "layers"));
  try {
    spec.validate();
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("invalid network spec: ") + e.what());
  }
  const double momentum = parse_double(field(map, "bn_momentum"), "bn_momentum");
  const double eps = parse_double(field(map, "bn_eps"), "bn_eps");
  std::optional<quant::QuantConfig> quant;
  if (const auto& bits = field(map, "quant_bits"); bits != "none") {
    quant::QuantConfig cfg;
    cfg.bits = static_cast<int>(parse_size(bits, "quant_bits"));
    cfg.quantize_input = field(map, "quant_input") == "1";
    try {
      cfg.validate();
    } catch (const ConfigError& e) {
      throw CheckpointError(e.what());
    }
    quant = cfg;
  }
  const bool frozen = field(map, "bn_frozen") == "1";

  if (r.remaining() < mlp_array_count(spec) * 8) throw CheckpointError("checkpoint truncated");
  std::vector<DenseLayer> dense;
  std::vector<std::optional<engine::BatchNormState>> norms;
  std::size_t fan_in = spec.input_dim;
  for (const auto& l : spec.layers) {
    Tensor w({fan_in, l.width}, r.f64s(fan_in * l.width), true);
    Tensor b({l.width}, r.f64s(l.width), true);
    dense.push_back({w, b});
    if (l.batch_norm) {
      engine::BatchNormState bn(l.width);
      bn.gamma.assign(r.f64s(l.width));
      bn.beta.assign(r.f64s(l.width));
      bn.running_mean = r.f64s(l.width);
      bn.running_var = r.f64s(l.width);
      bn.momentum = momentum;
      bn.eps = eps;
      norms.emplace_back(std::move(bn));
    } else {
      norms.emplace_back(std::nullopt);
    }
    fan_in = l.width;
  }
  return MlpBuilder::assemble(std::move(spec), std::move(dense), std::move(norms), quant, frozen);
}

std::string frame(const std::string& spec_text, const std::function<void(ByteWriter&)>& arrays) {
  ByteWriter w;
  w.raw(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.u64(spec_text.size());
  w.raw(spec_text.data(), spec_text.size());
  arrays(w);
  return w.take();
}

SpecMap open_frame(ByteReader& r, const std::string& expected_kind) {
  if (r.raw(4) != std::string(kMagic, 4)) throw CheckpointError("not a checkpoint (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(version) + " unsupported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint64_t length = r.u64();
  if (length > r.remaining()) throw CheckpointError("checkpoint truncated");
  SpecMap map = parse_spec_text(r.raw(static_cast<std::size_t>(length)));
  if (field(map, "kind") != expected_kind) {
    throw CheckpointError("checkpoint holds a '" + field(map, "kind") + "', expected '" + expected_kind + "'");
  }
  return map;
}

void expect_end(const ByteReader& r) {
  if (r.remaining() != 0) throw CheckpointError("checkpoint has trailing bytes");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("failed writing checkpoint " + path.string());
}

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

}  // namespace

std::string encode_checkpoint(const Mlp& net) {
  return frame("kind=mlp\n" + mlp_spec_text(net), [&](ByteWriter& w) { write_mlp_arrays(w, net); });
}

std::string encode_checkpoint(const Generator& gen) {
  const auto& s = gen.spec();
  std::string text = "kind=generator\n";
  text += "noise_dim=" + std::to_string(s.noise_dim) + "\n";
  text += "classes=" + std::to_string(s.classes) + "\n";
  text += "hidden=" + join_sizes(s.hidden) + "\n";
  text += "output_dim=" + std::to_string(s.output_dim) + "\n";
  text += mlp_spec_text(gen.body());
  return frame(text, [&](ByteWriter& w) {
    w.f64s(gen.embedding().values());
    write_mlp_arrays(w, gen.body());
  });
}

Mlp decode_mlp_checkpoint(const std::string& bytes) {
  ByteReader r(bytes);
  const SpecMap map = open_frame(r, "mlp");
  Mlp net = read_mlp(r, map);
  expect_end(r);
  return net;
}

Generator decode_generator_checkpoint(const std::string& bytes) {
  ByteReader r(bytes);
  const SpecMap map = open_frame(r, "generator");
  GeneratorSpec spec;
  spec.noise_dim = parse_size(field(map, "noise_dim"), "noise_dim");
  spec.classes = parse_size(field(map, "classes"), "classes");
  spec.output_dim = parse_size(field(map, "output_dim"), "output_dim");
  spec.hidden.clear();
  for (const auto& h : split(field(map, "hidden"), ',')) spec.hidden.push_back(parse_size(h, "hidden"));
  try {
    spec.validate();
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("invalid generator spec: ") + e.what());
  }
  const std::size_t n = spec.classes * spec.noise_dim;
  Tensor embedding({spec.classes, spec.noise_dim}, r.f64s(n), true);
  Mlp body = read_mlp(r, map);
  expect_end(r);
  try {
    return Generator(spec, embedding, std::move(body));
  } catch (const Error& e) {
    throw CheckpointError(std::string("generator checkpoint inconsistent: ") + e.what());
  }
}

void save_checkpoint(const Mlp& net, const std::filesystem::path& path) {
  write_file(path, encode_checkpoint(net));
}

void save_checkpoint(const Generator& gen, const std::filesystem::path& path) {
  write_file(path, encode_checkpoint(gen));
}

Mlp load_mlp_checkpoint(const std::filesystem::path& path) { return decode_mlp_checkpoint(read_file(path)); }

Generator load_generator_checkpoint(const std::filesystem::path& path) {
  return decode_generator_checkpoint(read_file(path));
}

}  // namespace adasg::nets
