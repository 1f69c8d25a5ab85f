#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "slr/error.hpp"

namespace slr {

std::size_t shape_product(std::span<const std::size_t> shape);
std::string shape_to_string(std::span<const std::size_t> shape);

// Dense row-major float32 tensor. Layout conventions:
//   activations        H x W x C
//   standard kernels   Kh x Kw x Cin x Cout
//   depthwise kernels  Kh x Kw x C
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);  // zero-filled
    Tensor(std::vector<std::size_t> shape, std::vector<float> data);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t extent(std::size_t axis) const { return shape_[axis]; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::span<const float> values() const { return data_; }
    std::span<float> values() { return data_; }
    const float* data() const { return data_.data(); }
    float* data() { return data_.data(); }

    bool operator==(const Tensor&) const = default;

  private:
    std::vector<std::size_t> shape_;
    std::vector<float> data_;
};

// Non-owning view over tensor data; kernels take views so weights mapped
// straight from a model file need no copy.
struct TensorView {
    std::vector<std::size_t> shape;
    std::span<const float> data;

    TensorView() = default;
    TensorView(std::vector<std::size_t> s, std::span<const float> d);
    TensorView(const Tensor& t) : shape(t.shape()), data(t.values()) {}

    std::size_t extent(std::size_t axis) const { return shape[axis]; }
    std::size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }
};

}  // namespace slr
