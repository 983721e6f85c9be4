// Copyright (c) 2026 the silt authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace silt {

/// Dense n-dimensional tensor, row-major. Images are CHW, conv weights OIHW.
template <typename T>
struct Tensor {
    std::vector<int> shape;
    std::vector<T> v;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)), v(checked_size(shape), T(0)) {}
    Tensor(std::vector<int> s, T fill) : shape(std::move(s)), v(checked_size(shape), fill) {}

    static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
    static Tensor scalar(T x) {
        Tensor t({1});
        t.v[0] = x;
        return t;
    }

    int64_t numel() const { return static_cast<int64_t>(v.size()); }
    int ndim() const { return static_cast<int>(shape.size()); }
    int dim(int i) const { return shape[static_cast<size_t>(i)]; }

    T* data() { return v.data(); }
    const T* data() const { return v.data(); }

    // CHW access
    T& at(int c, int y, int x) { return v[(static_cast<size_t>(c) * shape[1] + y) * shape[2] + x]; }
    T at(int c, int y, int x) const { return v[(static_cast<size_t>(c) * shape[1] + y) * shape[2] + x]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out;
        out.shape = shape;
        out.v.resize(v.size());
        for (size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<U>(v[i]);
        return out;
    }

    static int64_t checked_size(const std::vector<int>& s) {
        int64_t n = 1;
        for (int d : s) {
            if (d < 0) throw std::invalid_argument("tensor dimension must be nonnegative");
            n *= d;
        }
        return n;
    }
};

inline std::string shape_string(const std::vector<int>& s) {
    std::string out = "(";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(s[i]);
    }
    return out + ")";
}

}  // namespace silt
