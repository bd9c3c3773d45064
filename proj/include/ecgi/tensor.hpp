#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "ecgi/common.hpp"

namespace ecgi {

// Dense row-major double tensor, rank 0..3. Signal tensors use the layout
// (nodes, channels, time) with time fastest, which keeps per-node
// channel-time blocks contiguous for the convolution kernels.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> v;

    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
        v.assign(count(shape), 0.0);
    }

    static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }

    static Tensor scalar(double x) {
        Tensor t;
        t.v.assign(1, x);
        return t;
    }

    static std::size_t count(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (auto d : s) n *= d;
        return n;
    }

    std::size_t size() const { return v.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t dim(std::size_t i) const { return i < shape.size() ? shape[i] : 1; }

    double& operator()(std::size_t i) { return v[i]; }
    double operator()(std::size_t i) const { return v[i]; }
    double& operator()(std::size_t i, std::size_t j) { return v[i * dim(1) + j]; }
    double operator()(std::size_t i, std::size_t j) const { return v[i * dim(1) + j]; }
    double& operator()(std::size_t i, std::size_t j, std::size_t k) {
        return v[(i * dim(1) + j) * dim(2) + k];
    }
    double operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return v[(i * dim(1) + j) * dim(2) + k];
    }

    double* data() { return v.data(); }
    const double* data() const { return v.data(); }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    bool all_finite() const {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    }

    void fill(double x) { std::fill(v.begin(), v.end(), x); }

    std::string shape_str() const {
        std::string s = "(";
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape[i]);
        }
        return s + ")";
    }
};

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b))
        throw ValidationError(std::string(what) + ": shape mismatch " + a.shape_str() +
                              " vs " + b.shape_str());
}

}  // namespace ecgi
