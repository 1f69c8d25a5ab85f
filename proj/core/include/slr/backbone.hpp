#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "slr/tensor.hpp"

namespace slr {

enum class LayerKind {
    kConv2d,
    kDepthwiseConv2d,
    kPointwiseConv2d,
    kRelu6,
    kGlobalAvgPool,
    kFlatten,
};

enum class Padding { kSame, kValid };

std::string layer_kind_name(LayerKind kind);

struct LayerSpec {
    LayerKind kind = LayerKind::kFlatten;
    int kernel_h = 1;
    int kernel_w = 1;
    int stride = 1;
    Padding padding = Padding::kSame;
    int out_channels = 0;  // conv2d / pointwise, before the width multiplier
    bool bias = true;      // conv2d / pointwise only; depthwise carries none

    bool operator==(const LayerSpec&) const = default;
};

// The frozen feature extractor as a declarative layer list. The last layer
// must be flatten; its output length is the bottleneck dimensionality.
struct BackboneSpec {
    int input_h = 0;
    int input_w = 0;
    int input_c = 0;
    double width_multiplier = 1.0;  // channel scaling, rounded, floor of 1
    std::vector<LayerSpec> layers;

    bool operator==(const BackboneSpec&) const = default;
};

// Output channel count of a conv-ish layer after the width multiplier:
// round to nearest (half away from zero), minimum 1.
int scaled_channels(const BackboneSpec& spec, int out_channels);

// Per-layer output extents {H, W, C}; flatten yields {1, 1, H*W*C}.
// Throws ShapeError on impossible shapes (e.g. valid padding with a kernel
// larger than its input).
std::vector<std::array<int, 3>> infer_shapes(const BackboneSpec& spec);

// Length of the final flattened output. Also validates the spec.
int bottleneck_dim(const BackboneSpec& spec);

struct LayerWeights {
    Tensor kernel;
    Tensor bias;  // empty when the layer has none
};

// Parameter tensors keyed by layer index into BackboneSpec::layers.
struct WeightSet {
    std::map<int, LayerWeights> layers;
};

// Kernel/bias views aligned with the spec's layer list (entries for
// non-parametric layers stay empty). This is the form `forward` consumes,
// so weights mapped from a model file are used in place.
struct LayerWeightsView {
    TensorView kernel;
    TensorView bias;
};

std::vector<LayerWeightsView> weight_views(const BackboneSpec& spec,
                                           const WeightSet& weights);

// --- layer kernels -------------------------------------------------------
//
// All convolutions are cross-correlations (no kernel flip), accumulate in
// float32 with one running sum per output element, and use a fixed
// kh -> kw -> cin accumulation order so results are bit-stable.
// `same` padding keeps H' = ceil(H / stride) and puts any odd padding on
// the bottom/right; `valid` gives H' = floor((H - Kh) / stride) + 1.

Tensor conv2d(const TensorView& input, const TensorView& kernel,
              std::span<const float> bias, int stride, Padding padding);

Tensor depthwise_conv2d(const TensorView& input, const TensorView& kernel,
                        int stride, Padding padding);

Tensor pointwise_conv2d(const TensorView& input, const TensorView& kernel,
                        std::span<const float> bias);

Tensor relu6(const TensorView& input);  // elementwise min(max(x, 0), 6)

Tensor global_avg_pool(const TensorView& input);  // per-channel spatial mean

// Output extent along one spatial axis.
int conv_output_extent(int input, int kernel, int stride, Padding padding);

// --- whole-backbone operations -------------------------------------------

// Pure function of (spec, weights, image): runs the layer stack and returns
// the flattened bottleneck vector. Throws ShapeError naming the layer when
// weights are missing or mis-shaped.
std::vector<float> forward(const BackboneSpec& spec,
                           std::span<const LayerWeightsView> weights,
                           const TensorView& image);
std::vector<float> forward(const BackboneSpec& spec, const WeightSet& weights,
                           const TensorView& image);

// Total kernel + bias element count after the width multiplier.
std::uint64_t param_count(const BackboneSpec& spec);

// Checks every parametric layer has a kernel (and bias where declared) of
// the expected shape without running anything. Throws ShapeError naming
// the first offending layer.
void validate_weights(const BackboneSpec& spec, const WeightSet& weights);

// He-style initialization: kernels are zero-mean gaussians with variance
// 2 / fan_in drawn from SplitMix64(seed) in layer order (row-major within
// each kernel), biases zero. fan_in is Kh*Kw*Cin for conv2d, Kh*Kw for
// depthwise, Cin for pointwise.
WeightSet init_weights(const BackboneSpec& spec, std::uint64_t seed);

// --- text form -------------------------------------------------------------
//
// Human-readable spec, one layer per line, e.g.
//   input h=28 w=28 c=1 alpha=1
//   conv2d k=3 s=2 pad=same out=8
//   relu6
//   depthwise_conv2d k=3 s=1 pad=same
//   pointwise_conv2d out=16
//   global_avg_pool
//   flatten
// `bias=0` marks a conv2d/pointwise layer without bias.

std::string format_backbone(const BackboneSpec& spec);
BackboneSpec parse_backbone(const std::string& text);

// Named presets: "flatten" is the identity backbone over 28x28x1 inputs;
// "desk" is a small stride-2 conv plus two depthwise-separable blocks,
// sized to run the whole pipeline in minutes on a laptop CPU.
BackboneSpec flatten_backbone();
BackboneSpec desk_backbone();

}  // namespace slr
