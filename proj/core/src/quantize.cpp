#include "slr/quantize.hpp"

#include <algorithm>
#include <cmath>

#include "slr/error.hpp"

namespace slr {

QuantizedTensor quantize_tensor(const TensorView& tensor) {
    if (tensor.empty()) throw Error("cannot quantize an empty tensor");

    float lo = 0.0f;
    float hi = 0.0f;
    for (float v : tensor.data) {
        if (!std::isfinite(v)) {
            throw Error("cannot quantize non-finite value");
        }
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }

    QuantizedTensor q;
    q.shape = tensor.shape;
    const double range = double(hi) - double(lo);
    q.scale = hi == lo ? 1.0f : static_cast<float>(range / 255.0);

    // -lo / scale, but computed from the exact ratio so the half-way case
    // (e.g. a symmetric range hitting 127.5) rounds the same everywhere.
    const double zp_real =
        hi == lo ? 0.0 : std::round(-double(lo) * 255.0 / range);
    q.zero_point = static_cast<int>(std::clamp(zp_real, 0.0, 255.0));

    const double scale = q.scale;

    q.codes.resize(tensor.size());
    for (std::size_t i = 0; i < tensor.size(); ++i) {
        const double code =
            std::round(double(tensor.data[i]) / scale) + q.zero_point;
        q.codes[i] =
            static_cast<std::uint8_t>(std::clamp(code, 0.0, 255.0));
    }
    return q;
}

Tensor dequantize_tensor(const QuantizedTensor& q) {
    std::vector<float> data(q.codes.size());
    for (std::size_t i = 0; i < q.codes.size(); ++i) {
        data[i] = q.scale * static_cast<float>(int(q.codes[i]) - q.zero_point);
    }
    return Tensor(q.shape, std::move(data));
}

QuantizedHead quantize_head(const SoftmaxHead& head) {
    QuantizedHead q;
    q.weights = quantize_tensor(TensorView(
        {head.dim, head.n_classes}, head.weights));
    q.biases = quantize_tensor(TensorView({head.n_classes}, head.biases));
    q.label_names = head.label_names;
    return q;
}

SoftmaxHead dequantize_head(const QuantizedHead& q) {
    SoftmaxHead head;
    head.dim = static_cast<std::uint32_t>(q.weights.shape[0]);
    head.n_classes = static_cast<std::uint32_t>(q.weights.shape[1]);
    const Tensor w = dequantize_tensor(q.weights);
    const Tensor b = dequantize_tensor(q.biases);
    head.weights.assign(w.values().begin(), w.values().end());
    head.biases.assign(b.values().begin(), b.values().end());
    head.label_names = q.label_names;
    return head;
}

SizeEstimate model_size_estimate(std::uint64_t param_count,
                                 int bits_per_param) {
    if (bits_per_param != 8 && bits_per_param != 32) {
        throw Error("bits_per_param must be 8 or 32");
    }
    SizeEstimate est;
    est.param_count = param_count;
    est.bits_per_param = bits_per_param;
    est.total_bytes = (param_count * bits_per_param + 7) / 8;
    return est;
}

}  // namespace slr
