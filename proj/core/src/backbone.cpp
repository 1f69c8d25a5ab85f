#include "slr/backbone.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "slr/dataset.hpp"
#include "slr/error.hpp"
#include "slr/rng.hpp"

namespace slr {

std::string layer_kind_name(LayerKind kind) {
    switch (kind) {
        case LayerKind::kConv2d: return "conv2d";
        case LayerKind::kDepthwiseConv2d: return "depthwise_conv2d";
        case LayerKind::kPointwiseConv2d: return "pointwise_conv2d";
        case LayerKind::kRelu6: return "relu6";
        case LayerKind::kGlobalAvgPool: return "global_avg_pool";
        case LayerKind::kFlatten: return "flatten";
    }
    return "?";
}

int scaled_channels(const BackboneSpec& spec, int out_channels) {
    long scaled = std::lround(spec.width_multiplier * out_channels);
    return static_cast<int>(std::max(1L, scaled));
}

int conv_output_extent(int input, int kernel, int stride, Padding padding) {
    if (stride < 1 || kernel < 1 || input < 1) {
        throw ShapeError("conv extents must be >= 1");
    }
    if (padding == Padding::kSame) {
        return (input + stride - 1) / stride;
    }
    if (input < kernel) {
        throw ShapeError("valid padding needs input >= kernel (" +
                         std::to_string(input) + " < " + std::to_string(kernel) +
                         ")");
    }
    return (input - kernel) / stride + 1;
}

namespace {

// Zero padding ahead of the first row/column under `same`; any odd
// remainder goes on the bottom/right.
int pad_before(int input, int output, int kernel, int stride) {
    int total = std::max((output - 1) * stride + kernel - input, 0);
    return total / 2;
}

bool is_parametric(LayerKind kind) {
    return kind == LayerKind::kConv2d || kind == LayerKind::kDepthwiseConv2d ||
           kind == LayerKind::kPointwiseConv2d;
}

}  // namespace

std::vector<std::array<int, 3>> infer_shapes(const BackboneSpec& spec) {
    if (spec.input_h < 1 || spec.input_w < 1 || spec.input_c < 1) {
        throw ShapeError("backbone input extents must be >= 1");
    }
    if (spec.width_multiplier <= 0.0 || spec.width_multiplier > 1.0) {
        throw ShapeError("width multiplier must be in (0, 1]");
    }
    int h = spec.input_h, w = spec.input_w, c = spec.input_c;
    std::vector<std::array<int, 3>> shapes;
    shapes.reserve(spec.layers.size());
    for (const LayerSpec& layer : spec.layers) {
        switch (layer.kind) {
            case LayerKind::kConv2d:
                h = conv_output_extent(h, layer.kernel_h, layer.stride,
                                       layer.padding);
                w = conv_output_extent(w, layer.kernel_w, layer.stride,
                                       layer.padding);
                c = scaled_channels(spec, layer.out_channels);
                break;
            case LayerKind::kDepthwiseConv2d:
                h = conv_output_extent(h, layer.kernel_h, layer.stride,
                                       layer.padding);
                w = conv_output_extent(w, layer.kernel_w, layer.stride,
                                       layer.padding);
                break;
            case LayerKind::kPointwiseConv2d:
                c = scaled_channels(spec, layer.out_channels);
                break;
            case LayerKind::kRelu6:
                break;
            case LayerKind::kGlobalAvgPool:
                h = 1;
                w = 1;
                break;
            case LayerKind::kFlatten:
                c = h * w * c;
                h = 1;
                w = 1;
                break;
        }
        shapes.push_back({h, w, c});
    }
    return shapes;
}

int bottleneck_dim(const BackboneSpec& spec) {
    if (spec.layers.empty()) throw ShapeError("backbone has no layers");
    if (spec.layers.back().kind != LayerKind::kFlatten) {
        throw ShapeError("backbone must end with a flatten layer");
    }
    auto shapes = infer_shapes(spec);
    return shapes.back()[2];
}

std::vector<LayerWeightsView> weight_views(const BackboneSpec& spec,
                                           const WeightSet& weights) {
    std::vector<LayerWeightsView> views(spec.layers.size());
    for (const auto& [index, lw] : weights.layers) {
        if (index < 0 || index >= static_cast<int>(views.size())) {
            throw ShapeError("weight entry for nonexistent layer " +
                             std::to_string(index));
        }
        views[index].kernel = TensorView(lw.kernel);
        if (!lw.bias.empty()) views[index].bias = TensorView(lw.bias);
    }
    return views;
}

Tensor conv2d(const TensorView& input, const TensorView& kernel,
              std::span<const float> bias, int stride, Padding padding) {
    if (input.shape.size() != 3) throw ShapeError("conv2d input must be HxWxC");
    if (kernel.shape.size() != 4) {
        throw ShapeError("conv2d kernel must be KhxKwxCinxCout");
    }
    const int h = static_cast<int>(input.extent(0));
    const int w = static_cast<int>(input.extent(1));
    const int cin = static_cast<int>(input.extent(2));
    const int kh = static_cast<int>(kernel.extent(0));
    const int kw = static_cast<int>(kernel.extent(1));
    const int cout = static_cast<int>(kernel.extent(3));
    if (static_cast<int>(kernel.extent(2)) != cin) {
        throw ShapeError("conv2d channel mismatch: input C=" +
                         std::to_string(cin) + ", kernel Cin=" +
                         std::to_string(kernel.extent(2)));
    }
    if (!bias.empty() && static_cast<int>(bias.size()) != cout) {
        throw ShapeError("conv2d bias length must equal Cout");
    }
    const int oh = conv_output_extent(h, kh, stride, padding);
    const int ow = conv_output_extent(w, kw, stride, padding);
    const int ph = padding == Padding::kSame ? pad_before(h, oh, kh, stride) : 0;
    const int pw = padding == Padding::kSame ? pad_before(w, ow, kw, stride) : 0;

    const float* x = input.data.data();
    const float* k = kernel.data.data();
    Tensor out({static_cast<std::size_t>(oh), static_cast<std::size_t>(ow),
                static_cast<std::size_t>(cout)});
    float* y = out.data();
    for (int r = 0; r < oh; ++r) {
        for (int col = 0; col < ow; ++col) {
            for (int co = 0; co < cout; ++co) {
                float acc = 0.0f;
                for (int i = 0; i < kh; ++i) {
                    const int ir = r * stride + i - ph;
                    if (ir < 0 || ir >= h) continue;
                    for (int j = 0; j < kw; ++j) {
                        const int ic = col * stride + j - pw;
                        if (ic < 0 || ic >= w) continue;
                        const float* xrow = x + (std::size_t(ir) * w + ic) * cin;
                        const float* krow =
                            k + ((std::size_t(i) * kw + j) * cin) * cout + co;
                        for (int ci = 0; ci < cin; ++ci) {
                            acc += xrow[ci] * krow[std::size_t(ci) * cout];
                        }
                    }
                }
                if (!bias.empty()) acc += bias[co];
                y[(std::size_t(r) * ow + col) * cout + co] = acc;
            }
        }
    }
    return out;
}

Tensor depthwise_conv2d(const TensorView& input, const TensorView& kernel,
                        int stride, Padding padding) {
    if (input.shape.size() != 3) {
        throw ShapeError("depthwise input must be HxWxC");
    }
    if (kernel.shape.size() != 3) {
        throw ShapeError("depthwise kernel must be KhxKwxC");
    }
    const int h = static_cast<int>(input.extent(0));
    const int w = static_cast<int>(input.extent(1));
    const int c = static_cast<int>(input.extent(2));
    const int kh = static_cast<int>(kernel.extent(0));
    const int kw = static_cast<int>(kernel.extent(1));
    if (static_cast<int>(kernel.extent(2)) != c) {
        throw ShapeError("depthwise channel mismatch: input C=" +
                         std::to_string(c) + ", kernel C=" +
                         std::to_string(kernel.extent(2)));
    }
    const int oh = conv_output_extent(h, kh, stride, padding);
    const int ow = conv_output_extent(w, kw, stride, padding);
    const int ph = padding == Padding::kSame ? pad_before(h, oh, kh, stride) : 0;
    const int pw = padding == Padding::kSame ? pad_before(w, ow, kw, stride) : 0;

    const float* x = input.data.data();
    const float* k = kernel.data.data();
    Tensor out({static_cast<std::size_t>(oh), static_cast<std::size_t>(ow),
                static_cast<std::size_t>(c)});
    float* y = out.data();
    for (int r = 0; r < oh; ++r) {
        for (int col = 0; col < ow; ++col) {
            for (int ch = 0; ch < c; ++ch) {
                float acc = 0.0f;
                for (int i = 0; i < kh; ++i) {
                    const int ir = r * stride + i - ph;
                    if (ir < 0 || ir >= h) continue;
                    for (int j = 0; j < kw; ++j) {
                        const int ic = col * stride + j - pw;
                        if (ic < 0 || ic >= w) continue;
                        acc += x[(std::size_t(ir) * w + ic) * c + ch] *
                               k[(std::size_t(i) * kw + j) * c + ch];
                    }
                }
                y[(std::size_t(r) * ow + col) * c + ch] = acc;
            }
        }
    }
    return out;
}

Tensor pointwise_conv2d(const TensorView& input, const TensorView& kernel,
                        std::span<const float> bias) {
    if (kernel.shape.size() != 4 || kernel.extent(0) != 1 ||
        kernel.extent(1) != 1) {
        throw ShapeError("pointwise kernel must be 1x1xCinxCout");
    }
    return conv2d(input, kernel, bias, 1, Padding::kSame);
}

Tensor relu6(const TensorView& input) {
    std::vector<float> data(input.data.begin(), input.data.end());
    for (float& v : data) v = std::min(std::max(v, 0.0f), 6.0f);
    return Tensor(input.shape, std::move(data));
}

Tensor global_avg_pool(const TensorView& input) {
    if (input.shape.size() != 3) throw ShapeError("pool input must be HxWxC");
    const int h = static_cast<int>(input.extent(0));
    const int w = static_cast<int>(input.extent(1));
    const int c = static_cast<int>(input.extent(2));
    const float* x = input.data.data();
    Tensor out({1, 1, static_cast<std::size_t>(c)});
    float* y = out.data();
    const float inv = 1.0f / static_cast<float>(h * w);
    for (int ch = 0; ch < c; ++ch) {
        float acc = 0.0f;
        for (int p = 0; p < h * w; ++p) acc += x[std::size_t(p) * c + ch];
        y[ch] = acc * inv;
    }
    return out;
}

namespace {

void check_kernel_shape(int layer_index, LayerKind kind,
                        const TensorView& kernel,
                        std::span<const std::size_t> expected) {
    if (kernel.empty()) {
        throw ShapeError("layer " + std::to_string(layer_index) + " (" +
                         layer_kind_name(kind) + "): missing kernel weights");
    }
    if (!std::ranges::equal(kernel.shape, expected)) {
        throw ShapeError("layer " + std::to_string(layer_index) + " (" +
                         layer_kind_name(kind) + "): kernel shape " +
                         shape_to_string(kernel.shape) + ", expected " +
                         shape_to_string(expected));
    }
}

}  // namespace

std::vector<float> forward(const BackboneSpec& spec,
                           std::span<const LayerWeightsView> weights,
                           const TensorView& image) {
    bottleneck_dim(spec);  // validates the layer stack
    if (weights.size() != spec.layers.size()) {
        throw ShapeError("weight view list does not match layer count");
    }
    const std::vector<std::size_t> want{static_cast<std::size_t>(spec.input_h),
                                        static_cast<std::size_t>(spec.input_w),
                                        static_cast<std::size_t>(spec.input_c)};
    if (image.shape != want) {
        throw ShapeError("image shape " + shape_to_string(image.shape) +
                         " does not match backbone input " +
                         shape_to_string(want));
    }

    Tensor current(image.shape,
                   std::vector<float>(image.data.begin(), image.data.end()));
    int cin = spec.input_c;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& layer = spec.layers[i];
        const LayerWeightsView& lw = weights[i];
        const int li = static_cast<int>(i);
        switch (layer.kind) {
            case LayerKind::kConv2d: {
                const int cout = scaled_channels(spec, layer.out_channels);
                const std::size_t expect[] = {
                    static_cast<std::size_t>(layer.kernel_h),
                    static_cast<std::size_t>(layer.kernel_w),
                    static_cast<std::size_t>(cin),
                    static_cast<std::size_t>(cout)};
                check_kernel_shape(li, layer.kind, lw.kernel, expect);
                if (layer.bias && lw.bias.size() != std::size_t(cout)) {
                    throw ShapeError("layer " + std::to_string(li) +
                                     " (conv2d): bias length " +
                                     std::to_string(lw.bias.size()) +
                                     ", expected " + std::to_string(cout));
                }
                current = conv2d(current, lw.kernel,
                                 layer.bias ? lw.bias.data
                                            : std::span<const float>{},
                                 layer.stride, layer.padding);
                cin = cout;
                break;
            }
            case LayerKind::kDepthwiseConv2d: {
                const std::size_t expect[] = {
                    static_cast<std::size_t>(layer.kernel_h),
                    static_cast<std::size_t>(layer.kernel_w),
                    static_cast<std::size_t>(cin)};
                check_kernel_shape(li, layer.kind, lw.kernel, expect);
                current = depthwise_conv2d(current, lw.kernel, layer.stride,
                                           layer.padding);
                break;
            }
            case LayerKind::kPointwiseConv2d: {
                const int cout = scaled_channels(spec, layer.out_channels);
                const std::size_t expect[] = {1, 1,
                                              static_cast<std::size_t>(cin),
                                              static_cast<std::size_t>(cout)};
                check_kernel_shape(li, layer.kind, lw.kernel, expect);
                if (layer.bias && lw.bias.size() != std::size_t(cout)) {
                    throw ShapeError("layer " + std::to_string(li) +
                                     " (pointwise_conv2d): bias length " +
                                     std::to_string(lw.bias.size()) +
                                     ", expected " + std::to_string(cout));
                }
                current = pointwise_conv2d(current, lw.kernel,
                                           layer.bias
                                               ? lw.bias.data
                                               : std::span<const float>{});
                cin = cout;
                break;
            }
            case LayerKind::kRelu6:
                current = relu6(current);
                break;
            case LayerKind::kGlobalAvgPool:
                current = global_avg_pool(current);
                break;
            case LayerKind::kFlatten: {
                std::vector<float> flat(current.values().begin(),
                                        current.values().end());
                const std::size_t len = flat.size();
                current = Tensor({1, 1, len}, std::move(flat));
                break;
            }
        }
    }
    return std::vector<float>(current.values().begin(),
                              current.values().end());
}

std::vector<float> forward(const BackboneSpec& spec, const WeightSet& weights,
                           const TensorView& image) {
    return forward(spec, weight_views(spec, weights), image);
}

std::uint64_t param_count(const BackboneSpec& spec) {
    infer_shapes(spec);  // validates extents
    std::uint64_t total = 0;
    int cin = spec.input_c;
    for (const LayerSpec& layer : spec.layers) {
        switch (layer.kind) {
            case LayerKind::kConv2d: {
                const int cout = scaled_channels(spec, layer.out_channels);
                total += std::uint64_t(layer.kernel_h) * layer.kernel_w * cin *
                         cout;
                if (layer.bias) total += cout;
                cin = cout;
                break;
            }
            case LayerKind::kDepthwiseConv2d:
                total += std::uint64_t(layer.kernel_h) * layer.kernel_w * cin;
                break;
            case LayerKind::kPointwiseConv2d: {
                const int cout = scaled_channels(spec, layer.out_channels);
                total += std::uint64_t(cin) * cout;
                if (layer.bias) total += cout;
                cin = cout;
                break;
            }
            case LayerKind::kRelu6:
            case LayerKind::kGlobalAvgPool:
                break;
            case LayerKind::kFlatten:
                cin = 0;  // channel tracking ends; flatten must be last
                break;
        }
    }
    return total;
}

void validate_weights(const BackboneSpec& spec, const WeightSet& weights) {
    const auto views = weight_views(spec, weights);
    int cin = spec.input_c;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& layer = spec.layers[i];
        const int li = static_cast<int>(i);
        switch (layer.kind) {
            case LayerKind::kConv2d: {
                const int cout = scaled_channels(spec, layer.out_channels);
                const std::size_t expect[] = {
                    static_cast<std::size_t>(layer.kernel_h),
                    static_cast<std::size_t>(layer.kernel_w),
                    static_cast<std::size_t>(cin),
                    static_cast<std::size_t>(cout)};
                check_kernel_shape(li, layer.kind, views[i].kernel, expect);
                if (layer.bias && views[i].bias.size() != std::size_t(cout)) {
                    throw ShapeError("layer " + std::to_string(li) +
                                     " (conv2d): missing or mis-sized bias");
                }
                cin = cout;
                break;
            }
            case LayerKind::kDepthwiseConv2d: {
                const std::size_t expect[] = {
                    static_cast<std::size_t>(layer.kernel_h),
                    static_cast<std::size_t>(layer.kernel_w),
                    static_cast<std::size_t>(cin)};
                check_kernel_shape(li, layer.kind, views[i].kernel, expect);
                break;
            }
            case LayerKind::kPointwiseConv2d: {
                const int cout = scaled_channels(spec, layer.out_channels);
                const std::size_t expect[] = {1, 1,
                                              static_cast<std::size_t>(cin),
                                              static_cast<std::size_t>(cout)};
                check_kernel_shape(li, layer.kind, views[i].kernel, expect);
                if (layer.bias && views[i].bias.size() != std::size_t(cout)) {
                    throw ShapeError("layer " + std::to_string(li) +
                                     " (pointwise_conv2d): missing or "
                                     "mis-sized bias");
                }
                cin = cout;
                break;
            }
            default:
                break;
        }
    }
}

WeightSet init_weights(const BackboneSpec& spec, std::uint64_t seed) {
    infer_shapes(spec);
    SplitMix64 rng(seed);
    WeightSet ws;
    int cin = spec.input_c;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& layer = spec.layers[i];
        if (!is_parametric(layer.kind)) {
            if (layer.kind == LayerKind::kFlatten) cin = 0;
            continue;
        }
        std::vector<std::size_t> kshape;
        std::size_t fan_in = 0;
        int cout = cin;
        switch (layer.kind) {
            case LayerKind::kConv2d:
                cout = scaled_channels(spec, layer.out_channels);
                kshape = {static_cast<std::size_t>(layer.kernel_h),
                          static_cast<std::size_t>(layer.kernel_w),
                          static_cast<std::size_t>(cin),
                          static_cast<std::size_t>(cout)};
                fan_in = std::size_t(layer.kernel_h) * layer.kernel_w * cin;
                break;
            case LayerKind::kDepthwiseConv2d:
                kshape = {static_cast<std::size_t>(layer.kernel_h),
                          static_cast<std::size_t>(layer.kernel_w),
                          static_cast<std::size_t>(cin)};
                fan_in = std::size_t(layer.kernel_h) * layer.kernel_w;
                break;
            case LayerKind::kPointwiseConv2d:
                cout = scaled_channels(spec, layer.out_channels);
                kshape = {1, 1, static_cast<std::size_t>(cin),
                          static_cast<std::size_t>(cout)};
                fan_in = static_cast<std::size_t>(cin);
                break;
            default:
                break;
        }
        const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
        std::vector<float> kdata(shape_product(kshape));
        for (float& v : kdata) {
            v = static_cast<float>(rng.next_gaussian() * stddev);
        }
        LayerWeights lw;
        lw.kernel = Tensor(std::move(kshape), std::move(kdata));
        const bool has_bias = layer.bias &&
                              layer.kind != LayerKind::kDepthwiseConv2d;
        if (has_bias) {
            lw.bias = Tensor({static_cast<std::size_t>(cout)});
        }
        ws.layers.emplace(static_cast<int>(i), std::move(lw));
        cin = cout;
    }
    return ws;
}

namespace {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string format_backbone(const BackboneSpec& spec) {
    std::string out = "input h=" + std::to_string(spec.input_h) +
                      " w=" + std::to_string(spec.input_w) +
                      " c=" + std::to_string(spec.input_c) +
                      " alpha=" + format_double(spec.width_multiplier) + "\n";
    for (const LayerSpec& layer : spec.layers) {
        out += layer_kind_name(layer.kind);
        switch (layer.kind) {
            case LayerKind::kConv2d:
            case LayerKind::kDepthwiseConv2d:
                if (layer.kernel_h == layer.kernel_w) {
                    out += " k=" + std::to_string(layer.kernel_h);
                } else {
                    out += " kh=" + std::to_string(layer.kernel_h) +
                           " kw=" + std::to_string(layer.kernel_w);
                }
                out += " s=" + std::to_string(layer.stride);
                out += layer.padding == Padding::kSame ? " pad=same"
                                                       : " pad=valid";
                if (layer.kind == LayerKind::kConv2d) {
                    out += " out=" + std::to_string(layer.out_channels);
                    if (!layer.bias) out += " bias=0";
                }
                break;
            case LayerKind::kPointwiseConv2d:
                out += " out=" + std::to_string(layer.out_channels);
                if (!layer.bias) out += " bias=0";
                break;
            default:
                break;
        }
        out += '\n';
    }
    return out;
}

BackboneSpec parse_backbone(const std::string& text) {
    BackboneSpec spec;
    bool input_seen = false;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        std::istringstream ls(line);
        std::string kind;
        ls >> kind;
        std::map<std::string, std::string> kv;
        std::string token;
        while (ls >> token) {
            auto eq = token.find('=');
            if (eq == std::string::npos) {
                throw ParseError("backbone line " + std::to_string(line_no) +
                                 ": expected key=value, got `" + token + "`");
            }
            kv[token.substr(0, eq)] = token.substr(eq + 1);
        }
        auto take_int = [&](const std::string& key, int fallback,
                            bool required = false) {
            auto it = kv.find(key);
            if (it == kv.end()) {
                if (required) {
                    throw ParseError("backbone line " +
                                     std::to_string(line_no) + ": missing " +
                                     key + "=");
                }
                return fallback;
            }
            int v = 0;
            try {
                v = std::stoi(it->second);
            } catch (const std::logic_error&) {
                throw ParseError("backbone line " + std::to_string(line_no) +
                                 ": " + key + "= is not an integer");
            }
            kv.erase(it);
            return v;
        };
        auto finish_line = [&] {
            if (!kv.empty()) {
                throw ParseError("backbone line " + std::to_string(line_no) +
                                 ": unknown key `" + kv.begin()->first + "`");
            }
        };

        if (kind == "input") {
            spec.input_h = take_int("h", 0, true);
            spec.input_w = take_int("w", 0, true);
            spec.input_c = take_int("c", 0, true);
            if (auto it = kv.find("alpha"); it != kv.end()) {
                try {
                    spec.width_multiplier = std::stod(it->second);
                } catch (const std::logic_error&) {
                    throw ParseError("backbone line " +
                                     std::to_string(line_no) +
                                     ": alpha= is not a number");
                }
                kv.erase(it);
            }
            finish_line();
            input_seen = true;
            continue;
        }

        LayerSpec layer;
        if (kind == "conv2d" || kind == "depthwise_conv2d") {
            layer.kind = kind == "conv2d" ? LayerKind::kConv2d
                                          : LayerKind::kDepthwiseConv2d;
            int k = take_int("k", 0);
            layer.kernel_h = k > 0 ? k : take_int("kh", 1, k == 0);
            layer.kernel_w = k > 0 ? k : take_int("kw", 1, k == 0);
            layer.stride = take_int("s", 1);
            if (auto it = kv.find("pad"); it != kv.end()) {
                if (it->second == "same") {
                    layer.padding = Padding::kSame;
                } else if (it->second == "valid") {
                    layer.padding = Padding::kValid;
                } else {
                    throw ParseError("backbone line " +
                                     std::to_string(line_no) +
                                     ": pad must be same or valid");
                }
                kv.erase(it);
            }
            if (layer.kind == LayerKind::kConv2d) {
                layer.out_channels = take_int("out", 0, true);
                layer.bias = take_int("bias", 1) != 0;
            } else {
                layer.bias = false;
            }
        } else if (kind == "pointwise_conv2d") {
            layer.kind = LayerKind::kPointwiseConv2d;
            layer.out_channels = take_int("out", 0, true);
            layer.bias = take_int("bias", 1) != 0;
        } else if (kind == "relu6") {
            layer.kind = LayerKind::kRelu6;
            layer.bias = false;
        } else if (kind == "global_avg_pool") {
            layer.kind = LayerKind::kGlobalAvgPool;
            layer.bias = false;
        } else if (kind == "flatten") {
            layer.kind = LayerKind::kFlatten;
            layer.bias = false;
        } else {
            throw ParseError("backbone line " + std::to_string(line_no) +
                             ": unknown layer kind `" + kind + "`");
        }
        finish_line();
        spec.layers.push_back(layer);
    }
    if (!input_seen) {
        throw ParseError("backbone text is missing the input line");
    }
    bottleneck_dim(spec);  // validates
    return spec;
}

BackboneSpec flatten_backbone() {
    BackboneSpec spec;
    spec.input_h = kImageSide;
    spec.input_w = kImageSide;
    spec.input_c = 1;
    spec.layers.push_back({.kind = LayerKind::kFlatten, .bias = false});
    return spec;
}

BackboneSpec desk_backbone() {
    BackboneSpec spec;
    spec.input_h = kImageSide;
    spec.input_w = kImageSide;
    spec.input_c = 1;
    auto conv = [](int k, int s, int out) {
        return LayerSpec{.kind = LayerKind::kConv2d,
                         .kernel_h = k,
                         .kernel_w = k,
                         .stride = s,
                         .padding = Padding::kSame,
                         .out_channels = out};
    };
    auto depthwise = [](int k, int s) {
        return LayerSpec{.kind = LayerKind::kDepthwiseConv2d,
                         .kernel_h = k,
                         .kernel_w = k,
                         .stride = s,
                         .padding = Padding::kSame,
                         .bias = false};
    };
    auto pointwise = [](int out) {
        return LayerSpec{.kind = LayerKind::kPointwiseConv2d,
                         .out_channels = out};
    };
    auto act = [] { return LayerSpec{.kind = LayerKind::kRelu6, .bias = false}; };

    spec.layers = {conv(3, 2, 8),    act(),
                   depthwise(3, 1),  act(), pointwise(16), act(),
                   depthwise(3, 2),  act(), pointwise(32), act(),
                   LayerSpec{.kind = LayerKind::kGlobalAvgPool, .bias = false},
                   LayerSpec{.kind = LayerKind::kFlatten, .bias = false}};
    return spec;
}

}  // namespace slr
