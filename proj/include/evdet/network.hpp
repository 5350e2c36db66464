#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "evdet/tensor.hpp"

namespace evdet {

enum class LayerKind { conv, maxpool, relu };

std::string_view layer_kind_name(LayerKind kind);

/// One layer. Convolutions are same-padded (pad = k / 2); weights are stored
/// Cout x Cin x K x K, bias has Cout entries. `cin`/`cout` are filled in for
/// pooling and ReLU layers by NetworkSpec::resolve().
struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  int k = 1;
  int cin = 0;
  int cout = 0;
  int stride = 1;
  std::vector<float> weights;
  std::vector<float> bias;

  int pad() const { return kind == LayerKind::conv ? k / 2 : 0; }
  std::size_t weight_count() const { return static_cast<std::size_t>(cout) * cin * k * k; }

  static LayerSpec conv(int k, int cin, int cout, int stride = 1);
  static LayerSpec maxpool(int k, int stride);
  static LayerSpec relu();
};

struct NetworkSpec {
  Shape input;
  std::vector<LayerSpec> layers;

  /// Output shape of every layer: result[0] is the input, result[i + 1] the
  /// output of layers[i]. Throws ShapeError when the chain does not fit.
  std::vector<Shape> shapes() const;

  /// Propagates channel counts into pool/ReLU layers and validates the chain
  /// and weight sizes (weights may be empty until init_weights/load_weights).
  void resolve();

  bool has_weights() const;
};

/// Output extent of a conv/pool layer along one axis.
int conv_out_extent(int in, int k, int stride, int pad);

// JSON: {"input": [C,H,W], "layers": [{"kind":"conv","k":3,"cin":2,"cout":16,"stride":1}, ...]}
NetworkSpec parse_network_json(std::string_view text);
std::string write_network_json(const NetworkSpec& spec);

/// Uniform weights in [-s, s], s = sqrt(1 / (K^2 * Cin)). Biases are drawn
/// from the same range when `random_bias` is set and are zero otherwise.
void init_weights(NetworkSpec& spec, std::uint64_t seed, bool random_bias = false);

// WGT1: "WGT1", then per conv layer: layer index u32, value count u64
// (weights followed by biases), float32 values.
std::string write_weights(const NetworkSpec& spec);
void load_weights(NetworkSpec& spec, std::string_view bytes);

struct PresetOptions {
  int in_channels = 2;
  int height = 144;
  int width = 256;
  int base_width = 16;   // VGG block widths are base x {1, 2, 4, 8, 8}
  int head_outputs = 18; // anchors x (5 + classes)
};

/// Thirteen 3x3 conv+ReLU layers in VGG-16 blocks (2-2-3-3-3) with a 2x2
/// max-pool after each block, then a 1x1 conv detection head.
NetworkSpec preset_vgg16_yolo(const PresetOptions& opts);

/// vgg16-yolo behind a stem of two 3x3 conv+ReLU layers (4 x base width)
/// and a 2x2 max-pool, letting the same trunk take twice the input size.
NetworkSpec preset_vgg16_yolo_ext(const PresetOptions& opts);

/// "vgg16-yolo" or "vgg16-yolo-ext".
NetworkSpec make_preset(std::string_view name, const PresetOptions& opts);

}  // namespace evdet
