#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "forge/errors.hpp"

namespace forge {

// Dense row-major tensor of doubles with an optional gradient buffer.
// All engine math runs in double; the f32 precision flag only affects
// checkpoint serialization.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> values;
    std::vector<double> grad;  // empty, or same length as values

    static Tensor zeros(std::vector<std::size_t> shp);
    static Tensor scalar(double v);
    static Tensor row(std::vector<double> v);  // 1 x n

    std::size_t size() const { return values.size(); }
    std::size_t rank() const { return shape.size(); }

    // Rank-2 accessors.
    std::size_t rows() const;
    std::size_t cols() const;
    double& at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }

    void ensure_grad();        // allocate zeroed grad buffer if absent
    void zero_grad();
    bool all_finite() const;

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
    std::string shape_str() const;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);

}  // namespace forge
