#pragma once

#include <cstdint>
#include <vector>

#include "slr/head.hpp"
#include "slr/tensor.hpp"

namespace slr {

// 8-bit affine codes replacing a float32 tensor. The dequantized value of
// code q is scale * (q - zero_point); zero is always exactly representable.
struct QuantizedTensor {
    std::vector<std::size_t> shape;
    std::vector<std::uint8_t> codes;
    float scale = 1.0f;
    int zero_point = 0;  // in [0, 255]

    bool operator==(const QuantizedTensor&) const = default;
};

// Per-tensor affine scheme:
//   [lo, hi] = [min(x, 0), max(x, 0)]
//   scale = (hi - lo) / 255, or 1 when hi == lo
//   zero_point = round(-lo / scale) clamped to [0, 255]
//   code(x) = clamp(round(x / scale) + zero_point, 0, 255)
// with round = half away from zero. Max round-trip error is scale / 2.
// Throws on non-finite values.
QuantizedTensor quantize_tensor(const TensorView& tensor);

Tensor dequantize_tensor(const QuantizedTensor& q);

struct QuantizedHead {
    QuantizedTensor weights;  // D x N
    QuantizedTensor biases;   // N
    std::vector<std::string> label_names;
};

// Weights and biases quantized independently. Inference with a quantized
// head dequantizes first, so predictions are a pure function of the codes.
QuantizedHead quantize_head(const SoftmaxHead& head);
SoftmaxHead dequantize_head(const QuantizedHead& q);

struct SizeEstimate {
    std::uint64_t param_count = 0;
    int bits_per_param = 32;
    std::uint64_t total_bytes = 0;  // ceil(param_count * bits / 8)
};

// bits_per_param must be 8 or 32; 32 gives the classic 4 bytes/parameter.
SizeEstimate model_size_estimate(std::uint64_t param_count,
                                 int bits_per_param);

}  // namespace slr
