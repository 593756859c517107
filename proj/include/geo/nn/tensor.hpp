#pragma once

#include <cstdint>
#include <vector>

#include "geo/common.hpp"

namespace geo::nn {

// Dense NCHW tensor. Vectors are (n, f, 1, 1).
template <class S>
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<S> data;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_, S fill = S(0))
        : n(n_), c(c_), h(h_), w(w_),
          data(static_cast<std::size_t>(n_) * c_ * h_ * w_, fill) {}

    static Tensor vec(int n_, int f) { return Tensor(n_, f, 1, 1); }

    std::int64_t size() const { return static_cast<std::int64_t>(n) * c * h * w; }
    std::int64_t plane() const { return static_cast<std::int64_t>(h) * w; }

    S* ptr(int ni, int ci) {
        return data.data() + (static_cast<std::size_t>(ni) * c + ci) * h * w;
    }
    const S* ptr(int ni, int ci) const {
        return data.data() + (static_cast<std::size_t>(ni) * c + ci) * h * w;
    }
    S& at(int ni, int ci, int y, int x) {
        return data[((static_cast<std::size_t>(ni) * c + ci) * h + y) * w + x];
    }
    S at(int ni, int ci, int y, int x) const {
        return data[((static_cast<std::size_t>(ni) * c + ci) * h + y) * w + x];
    }

    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }

    bool all_finite() const {
        for (S v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }
};

}  // namespace geo::nn
