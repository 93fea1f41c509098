#pragma once

#include "diffscrub/common.hpp"
#include "diffscrub/rng.hpp"

#include <cstddef>
#include <cstring>
#include <initializer_list>
#include <numeric>
#include <vector>

namespace diffscrub {

// Dense row-major tensor. Rank <= 4 in practice ([C,H,W] images, [L,d]
// conditioning, [L,h,w] attention maps, [out,in] weights).
template <typename T>
struct Tensor {
    std::vector<int> shape;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        data.assign(numel_of(shape), T(0));
    }

    static size_t numel_of(const std::vector<int>& s) {
        size_t n = 1;
        for (int d : s) n *= static_cast<size_t>(d);
        return n;
    }

    size_t numel() const { return data.size(); }
    bool empty() const { return data.empty(); }
    int dim(int i) const { return shape[static_cast<size_t>(i)]; }
    int rank() const { return static_cast<int>(shape.size()); }

    T* ptr() { return data.data(); }
    const T* ptr() const { return data.data(); }

    T& operator[](size_t i) { return data[i]; }
    const T& operator[](size_t i) const { return data[i]; }

    T& at(int i, int j) { return data[static_cast<size_t>(i) * dim(1) + j]; }
    const T& at(int i, int j) const { return data[static_cast<size_t>(i) * dim(1) + j]; }
    T& at(int i, int j, int k) {
        return data[(static_cast<size_t>(i) * dim(1) + j) * dim(2) + k];
    }
    const T& at(int i, int j, int k) const {
        return data[(static_cast<size_t>(i) * dim(1) + j) * dim(2) + k];
    }

    void zero() { std::fill(data.begin(), data.end(), T(0)); }
    void fill(T v) { std::fill(data.begin(), data.end(), v); }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    void add_(const Tensor& o) {
        for (size_t i = 0; i < data.size(); i++) data[i] += o.data[i];
    }
    void scale_(T s) {
        for (auto& v : data) v *= s;
    }

    static Tensor randn(std::vector<int> s, Rng& rng, double std = 1.0) {
        Tensor t(std::move(s));
        for (auto& v : t.data) v = static_cast<T>(rng.normal() * std);
        return t;
    }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out;
        out.shape = shape;
        out.data.resize(data.size());
        for (size_t i = 0; i < data.size(); i++) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

using Tensorf = Tensor<float>;
using Tensord = Tensor<double>;

template <typename T>
inline void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
    if (!a.same_shape(b)) throw ShapeError(std::string("shape mismatch in ") + what);
}

template <typename T>
inline bool bit_equal(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape != b.shape) return false;
    return std::memcmp(a.ptr(), b.ptr(), a.numel() * sizeof(T)) == 0;
}

}  // namespace diffscrub
