#include "slr/tensor.hpp"

#include <utility>

namespace slr {

std::size_t shape_product(std::span<const std::size_t> shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

std::string shape_to_string(std::span<const std::size_t> shape) {
    std::string s;
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += 'x';
        s += std::to_string(shape[i]);
    }
    return s;
}

namespace {

void check_shape(std::span<const std::size_t> shape, std::size_t data_len) {
    if (shape.empty()) throw ShapeError("tensor shape must not be empty");
    for (std::size_t e : shape) {
        if (e == 0) throw ShapeError("tensor extent must be >= 1");
    }
    if (shape_product(shape) != data_len) {
        throw ShapeError("tensor shape " +
                         shape_to_string(shape) + " does not match " +
                         std::to_string(data_len) + " values");
    }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
    if (shape_.empty()) throw ShapeError("tensor shape must not be empty");
    for (std::size_t e : shape_) {
        if (e == 0) throw ShapeError("tensor extent must be >= 1");
    }
    data_.assign(shape_product(shape_), 0.0f);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape(shape_, data_.size());
}

TensorView::TensorView(std::vector<std::size_t> s, std::span<const float> d)
    : shape(std::move(s)), data(d) {
    check_shape(shape, data.size());
}

}  // namespace slr
