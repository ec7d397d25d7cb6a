#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "infratl/error.hpp"

namespace infratl::nn {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& s);

/// Dense row-major tensor of up to four axes. Image batches are laid out
/// NHWC: (batch, altitude, range, channels).
template <typename T>
struct Tensor {
    Shape shape;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(Shape s, T fill = T(0)) : shape(std::move(s)), data(shape_size(shape), fill) {
        require(shape.size() <= 4, ErrorKind::shape, "tensors have at most 4 axes");
    }
    Tensor(Shape s, std::vector<T> values) : shape(std::move(s)), data(std::move(values)) {
        require(shape.size() <= 4, ErrorKind::shape, "tensors have at most 4 axes");
        require(data.size() == shape_size(shape), ErrorKind::shape,
                "tensor data does not match shape " + shape_string(shape));
    }

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t dim(std::size_t axis) const { return shape.at(axis); }

    T* ptr() { return data.data(); }
    const T* ptr() const { return data.data(); }
    std::span<T> span() { return data; }
    std::span<const T> span() const { return data; }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }

    Tensor reshaped(Shape s) const {
        require(shape_size(s) == size(), ErrorKind::shape,
                "cannot reshape " + shape_string(shape) + " to " + shape_string(s));
        return Tensor(std::move(s), data);
    }

    template <typename U>
    Tensor<U> cast() const {
        return Tensor<U>(shape, std::vector<U>(data.begin(), data.end()));
    }
};

/// Trainable tensor with its gradient accumulator.
template <typename T>
struct Param {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;

    Param() = default;
    Param(std::string n, Shape s) : name(std::move(n)), value(s), grad(s) {}
};

enum class Mode { train, infer };

}  // namespace infratl::nn
