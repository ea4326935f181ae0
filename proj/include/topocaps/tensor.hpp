#pragma once

#include <cstddef>
#include <numeric>
#include <vector>

#include "topocaps/errors.hpp"

namespace topocaps {

using Vec = std::vector<double>;

// Row-major n-dimensional array of doubles.
struct Tensor {
    std::vector<std::size_t> shape;
    Vec data;

    Tensor() = default;
    Tensor(std::vector<std::size_t> s, Vec d) : shape(std::move(s)), data(std::move(d)) {
        if (size() != data.size())
            throw DimensionError("tensor: shape/data size mismatch");
    }

    static Tensor zeros(std::vector<std::size_t> s) {
        std::size_t n = 1;
        for (auto e : s) n *= e;
        return Tensor(std::move(s), Vec(n, 0.0));
    }

    std::size_t size() const {
        std::size_t n = 1;
        for (auto e : shape) n *= e;
        return n;
    }

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }
};

}  // namespace topocaps
