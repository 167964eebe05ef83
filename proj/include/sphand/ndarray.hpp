#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "sphand/errors.hpp"

namespace sphand {

// Dense row-major array of doubles, last dimension fastest. This is the
// in-memory form of everything the binary container stores.
struct NdArray {
    std::vector<std::size_t> dims;
    std::vector<double> data;

    NdArray() = default;

    NdArray(std::vector<std::size_t> d, std::vector<double> values)
        : dims(std::move(d)), data(std::move(values)) {
        if (element_count(dims) != data.size())
            throw ShapeError("NdArray: payload size does not match dims");
    }

    static NdArray zeros(std::vector<std::size_t> d) {
        std::size_t n = element_count(d);
        return NdArray(std::move(d), std::vector<double>(n, 0.0));
    }

    static std::size_t element_count(const std::vector<std::size_t>& d) {
        std::size_t n = 1;
        for (std::size_t x : d) n *= x;
        return d.empty() ? 0 : n;
    }

    std::size_t size() const { return data.size(); }

    bool same_shape(const NdArray& other) const { return dims == other.dims; }
};

} // namespace sphand
