//=======================================================================
// Copyright (c) 2026 the glaucnet authors
// Distributed under the terms of the MIT License.
// (See accompanying file LICENSE or copy at
//  http://opensource.org/licenses/MIT)
//=======================================================================

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "glaucnet/error.hpp"

namespace glaucnet {

inline std::string shape_to_string(const std::vector<std::size_t>& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + ")";
}

/// Dense row-major tensor. The scalar type is a template parameter:
/// float for training/inference, double for gradient checks.
template <typename T>
class tensor {
public:
    tensor() = default;

    explicit tensor(std::vector<std::size_t> shape)
            : shape_(std::move(shape)), data_(count(shape_), T(0)) {}

    tensor(std::initializer_list<std::size_t> shape)
            : tensor(std::vector<std::size_t>(shape)) {}

    static tensor zeros_like(const tensor& other) {
        return tensor(other.shape_);
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t extent(std::size_t axis) const { return shape_[axis]; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T*       data()       { return data_.data(); }
    const T* data() const { return data_.data(); }

    T&       operator[](std::size_t i)       { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    /// 3D access, shape (C, H, W).
    T& at(std::size_t c, std::size_t y, std::size_t x) {
        return data_[(c * shape_[1] + y) * shape_[2] + x];
    }
    const T& at(std::size_t c, std::size_t y, std::size_t x) const {
        return data_[(c * shape_[1] + y) * shape_[2] + x];
    }

    /// 2D access, shape (R, C).
    T& at(std::size_t r, std::size_t c) {
        return data_[r * shape_[1] + c];
    }
    const T& at(std::size_t r, std::size_t c) const {
        return data_[r * shape_[1] + c];
    }

    void fill(T value) {
        std::fill(data_.begin(), data_.end(), value);
    }

    bool same_shape(const tensor& other) const {
        return shape_ == other.shape_;
    }

    tensor& operator+=(const tensor& other) {
        if (!same_shape(other)) {
            throw shape_error("tensor +=: shape " + shape_string() + " vs " +
                              other.shape_string());
        }
        for (std::size_t i = 0; i < data_.size(); ++i) {
            data_[i] += other.data_[i];
        }
        return *this;
    }

    tensor& operator*=(T scalar) {
        for (T& v : data_) v *= scalar;
        return *this;
    }

    bool operator==(const tensor& other) const {
        return shape_ == other.shape_ && data_ == other.data_;
    }

    bool all_finite() const {
        for (const T v : data_) {
            if (!std::isfinite(static_cast<double>(v))) {
                return false;
            }
        }
        return true;
    }

    /// Converts the scalar type, e.g. float -> double for gradient checks.
    template <typename U>
    tensor<U> cast() const {
        tensor<U> out(shape_);
        for (std::size_t i = 0; i < data_.size(); ++i) {
            out[i] = static_cast<U>(data_[i]);
        }
        return out;
    }

    std::string shape_string() const {
        return shape_to_string(shape_);
    }

private:
    static std::size_t count(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (const std::size_t e : shape) n *= e;
        return shape.empty() ? 0 : n;
    }

    std::vector<std::size_t> shape_;
    std::vector<T> data_;
};

using tensor_f = tensor<float>;
using tensor_d = tensor<double>;

template <typename T>
void require_shape(const tensor<T>& t, const std::vector<std::size_t>& shape, const char* what) {
    if (t.shape() != shape) {
        throw shape_error(std::string(what) + ": expected shape " + shape_to_string(shape) +
                          ", got " + t.shape_string());
    }
}

} // namespace glaucnet
