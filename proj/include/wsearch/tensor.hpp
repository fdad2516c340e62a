#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "wsearch/errors.hpp"

namespace wsearch {

// Dense rank-4 tensor of 32- or 64-bit floats. Axis meaning depends on role:
// activations are (batch, height, width, channels), convolution kernels are
// (k1, k2, in_channels, out_channels), dense weights use (1, 1, in, out).
template <typename T>
class Tensor4 {
public:
    Tensor4() = default;

    Tensor4(std::size_t d0, std::size_t d1, std::size_t d2, std::size_t d3)
        : dims_{d0, d1, d2, d3}, data_(d0 * d1 * d2 * d3, T(0)) {
        if (d0 < 1 || d1 < 1 || d2 < 1 || d3 < 1)
            throw ShapeError("tensor dims must all be >= 1");
    }

    const std::array<std::size_t, 4>& dims() const { return dims_; }
    std::size_t dim(int i) const { return dims_[static_cast<std::size_t>(i)]; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
        return data_[((i * dims_[1] + j) * dims_[2] + k) * dims_[3] + l];
    }
    T operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
        return data_[((i * dims_[1] + j) * dims_[2] + k) * dims_[3] + l];
    }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    void fill(T v) { data_.assign(data_.size(), v); }

    bool same_shape(const Tensor4& o) const { return dims_ == o.dims_; }

    bool all_finite() const {
        for (T v : data_)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    template <typename U>
    Tensor4<U> cast() const {
        Tensor4<U> out(dims_[0], dims_[1], dims_[2], dims_[3]);
        for (std::size_t i = 0; i < data_.size(); ++i)
            out.data()[i] = static_cast<U>(data_[i]);
        return out;
    }

    std::string shape_str() const {
        return "(" + std::to_string(dims_[0]) + "," + std::to_string(dims_[1]) + "," +
               std::to_string(dims_[2]) + "," + std::to_string(dims_[3]) + ")";
    }

    bool operator==(const Tensor4& o) const { return dims_ == o.dims_ && data_ == o.data_; }

private:
    std::array<std::size_t, 4> dims_{0, 0, 0, 0};
    std::vector<T> data_;
};

}  // namespace wsearch
