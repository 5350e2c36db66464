#include "evdet/network.hpp"

#include <cmath>
#include <random>

#include "json.hpp"

#include "evdet/error.hpp"
#include "evdet/io_util.hpp"

namespace evdet {

using nlohmann::json;

std::string_view layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv: return "conv";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::relu: return "relu";
  }
  return "?";
}

LayerSpec LayerSpec::conv(int k, int cin, int cout, int stride) {
  LayerSpec l;
  l.kind = LayerKind::conv;
  l.k = k;
  l.cin = cin;
  l.cout = cout;
  l.stride = stride;
  return l;
}

LayerSpec LayerSpec::maxpool(int k, int stride) {
  LayerSpec l;
  l.kind = LayerKind::maxpool;
  l.k = k;
  l.stride = stride;
  return l;
}

LayerSpec LayerSpec::relu() { return LayerSpec{}; }

int conv_out_extent(int in, int k, int stride, int pad) {
  const int span = in + 2 * pad - k;
  return span < 0 ? 0 : span / stride + 1;
}

std::vector<Shape> NetworkSpec::shapes() const {
  if (input.c < 1 || input.h < 1 || input.w < 1) throw ShapeError("network input must be at least 1x1x1");
  std::vector<Shape> out{input};
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    const Shape& in = out.back();
    const std::string where = "layer " + std::to_string(i) + " (" + std::string(layer_kind_name(l.kind)) + ")";
    if (l.kind == LayerKind::relu) {
      out.push_back(in);
      continue;
    }
    if (l.k < 1 || l.stride < 1) throw ShapeError(where + ": kernel and stride must be >= 1");
    Shape o{in.c, conv_out_extent(in.h, l.k, l.stride, l.pad()), conv_out_extent(in.w, l.k, l.stride, l.pad())};
    if (l.kind == LayerKind::conv) {
      if (l.cin != in.c) {
        throw ShapeError(where + ": expects " + std::to_string(l.cin) + " input channels, got " +
                         std::to_string(in.c));
      }
      if (l.cout < 1) throw ShapeError(where + ": cout must be >= 1");
      o.c = l.cout;
    }
    if (o.h < 1 || o.w < 1) throw ShapeError(where + ": output would be empty");
    out.push_back(o);
  }
  return out;
}

void NetworkSpec::resolve() {
  const auto s = shapes();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    LayerSpec& l = layers[i];
    if (l.kind != LayerKind::conv) {
      l.cin = s[i].c;
      l.cout = s[i + 1].c;
      continue;
    }
    const bool empty = l.weights.empty() && l.bias.empty();
    if (!empty && (l.weights.size() != l.weight_count() || l.bias.size() != static_cast<std::size_t>(l.cout))) {
      throw ShapeError("layer " + std::to_string(i) + ": weight/bias sizes do not match Cout x Cin x K x K");
    }
  }
}

bool NetworkSpec::has_weights() const {
  for (const auto& l : layers) {
    if (l.kind == LayerKind::conv && (l.weights.size() != l.weight_count() ||
                                      l.bias.size() != static_cast<std::size_t>(l.cout))) {
      return false;
    }
  }
  return true;
}

NetworkSpec parse_network_json(std::string_view text) {
  NetworkSpec spec;
  try {
    const json j = json::parse(text);
    const auto& in = j.at("input");
    if (!in.is_array() || in.size() != 3) throw Error("'input' must be [C,H,W]");
    spec.input = {in[0].get<int>(), in[1].get<int>(), in[2].get<int>()};
    for (const auto& lj : j.at("layers")) {
      const std::string kind = lj.at("kind").get<std::string>();
      if (kind == "conv") {
        spec.layers.push_back(LayerSpec::conv(lj.at("k").get<int>(), lj.at("cin").get<int>(),
                                              lj.at("cout").get<int>(), lj.value("stride", 1)));
      } else if (kind == "maxpool") {
        const int k = lj.at("k").get<int>();
        spec.layers.push_back(LayerSpec::maxpool(k, lj.value("stride", k)));
      } else if (kind == "relu") {
        spec.layers.push_back(LayerSpec::relu());
      } else {
        throw Error("unknown layer kind '" + kind + "'");
      }
    }
  } catch (const json::exception& e) {
    throw Error(std::string("invalid network JSON: ") + e.what());
  }
  spec.resolve();
  return spec;
}

std::string write_network_json(const NetworkSpec& spec) {
  json j;
  j["input"] = {spec.input.c, spec.input.h, spec.input.w};
  j["layers"] = json::array();
  for (const auto& l : spec.layers) {
    json lj;
    lj["kind"] = layer_kind_name(l.kind);
    if (l.kind == LayerKind::conv) {
      lj["k"] = l.k;
      lj["cin"] = l.cin;
      lj["cout"] = l.cout;
      lj["stride"] = l.stride;
    } else if (l.kind == LayerKind::maxpool) {
      lj["k"] = l.k;
      lj["stride"] = l.stride;
    }
    j["layers"].push_back(lj);
  }
  return j.dump(2) + "\n";
}

void init_weights(NetworkSpec& spec, std::uint64_t seed, bool random_bias) {
  spec.resolve();
  std::mt19937_64 rng(seed);
  for (auto& l : spec.layers) {
    if (l.kind != LayerKind::conv) continue;
    const float s = static_cast<float>(std::sqrt(1.0 / (static_cast<double>(l.k) * l.k * l.cin)));
    std::uniform_real_distribution<float> dist(-s, s);
    l.weights.resize(l.weight_count());
    for (auto& w : l.weights) w = dist(rng);
    l.bias.assign(l.cout, 0.0f);
    if (random_bias) {
      for (auto& b : l.bias) b = dist(rng);
    }
  }
}

std::string write_weights(const NetworkSpec& spec) {
  if (!spec.has_weights()) throw Error("network has no weights to write");
  std::string out = "WGT1";
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    if (l.kind != LayerKind::conv) continue;
    io::put_u32(out, static_cast<std::uint32_t>(i));
    io::put_u64(out, l.weights.size() + l.bias.size());
    for (float w : l.weights) io::put_f32(out, w);
    for (float b : l.bias) io::put_f32(out, b);
  }
  return out;
}

void load_weights(NetworkSpec& spec, std::string_view bytes) {
  spec.resolve();
  if (bytes.substr(0, 4) != "WGT1") throw ParseError("missing WGT1 header", 0);
  const auto* base = reinterpret_cast<const unsigned char*>(bytes.data());
  std::size_t pos = 4;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    auto& l = spec.layers[i];
    if (l.kind != LayerKind::conv) continue;
    if (bytes.size() < pos + 12) throw ParseError("weights file truncated before layer " + std::to_string(i), pos);
    const std::uint32_t index = io::get_u32(base + pos);
    const std::uint64_t count = io::get_u64(base + pos + 4);
    if (index != i) {
      throw ParseError("weights file has layer " + std::to_string(index) + " where layer " + std::to_string(i) +
                           " was expected",
                       pos);
    }
    if (count != l.weight_count() + static_cast<std::size_t>(l.cout)) {
      throw ParseError("weights/spec mismatch at layer " + std::to_string(i) + ": file has " +
                           std::to_string(count) + " values, spec needs " +
                           std::to_string(l.weight_count() + l.cout),
                       pos + 4);
    }
    pos += 12;
    if (bytes.size() < pos + count * 4) throw ParseError("weights file truncated in layer " + std::to_string(i), pos);
    l.weights.resize(l.weight_count());
    l.bias.resize(l.cout);
    for (auto& w : l.weights) { w = io::get_f32(base + pos); pos += 4; }
    for (auto& b : l.bias) { b = io::get_f32(base + pos); pos += 4; }
  }
  if (pos != bytes.size()) throw ParseError("trailing data after the last conv layer", pos);
}

namespace {

void conv_relu(NetworkSpec& s, int& channels, int out) {
  s.layers.push_back(LayerSpec::conv(3, channels, out));
  s.layers.push_back(LayerSpec::relu());
  channels = out;
}

void vgg_trunk(NetworkSpec& s, int channels, const PresetOptions& o) {
  const int b = o.base_width;
  const int blocks[5][2] = {{2, b}, {2, 2 * b}, {3, 4 * b}, {3, 8 * b}, {3, 8 * b}};
  for (const auto& [convs, width] : blocks) {
    for (int i = 0; i < convs; ++i) conv_relu(s, channels, width);
    s.layers.push_back(LayerSpec::maxpool(2, 2));
  }
  s.layers.push_back(LayerSpec::conv(1, channels, o.head_outputs));
}

}  // namespace

NetworkSpec preset_vgg16_yolo(const PresetOptions& opts) {
  NetworkSpec s;
  s.input = {opts.in_channels, opts.height, opts.width};
  vgg_trunk(s, opts.in_channels, opts);
  s.resolve();
  return s;
}

NetworkSpec preset_vgg16_yolo_ext(const PresetOptions& opts) {
  NetworkSpec s;
  s.input = {opts.in_channels, opts.height, opts.width};
  int channels = opts.in_channels;
  conv_relu(s, channels, 4 * opts.base_width);
  conv_relu(s, channels, 4 * opts.base_width);
  s.layers.push_back(LayerSpec::maxpool(2, 2));
  vgg_trunk(s, channels, opts);
  s.resolve();
  return s;
}

NetworkSpec make_preset(std::string_view name, const PresetOptions& opts) {
  if (name == "vgg16-yolo") return preset_vgg16_yolo(opts);
  if (name == "vgg16-yolo-ext") return preset_vgg16_yolo_ext(opts);
  throw Error("unknown network preset '" + std::string(name) + "'");
}

}  // namespace evdet
