#include "forge/tensor.hpp"

#include <cmath>
#include <sstream>

namespace forge {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

Tensor Tensor::zeros(std::vector<std::size_t> shp) {
    Tensor t;
    for (std::size_t e : shp)
        if (e == 0) throw ShapeError("tensor extent must be positive");
    t.values.assign(shape_product(shp), 0.0);
    t.shape = std::move(shp);
    return t;
}

Tensor Tensor::scalar(double v) {
    Tensor t;
    t.shape = {1};
    t.values = {v};
    return t;
}

Tensor Tensor::row(std::vector<double> v) {
    Tensor t;
    t.shape = {1, v.size()};
    t.values = std::move(v);
    return t;
}

std::size_t Tensor::rows() const {
    if (rank() != 2) throw ShapeError("rows() on tensor of rank " + std::to_string(rank()));
    return shape[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) throw ShapeError("cols() on tensor of rank " + std::to_string(rank()));
    return shape[1];
}

void Tensor::ensure_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
}

void Tensor::zero_grad() {
    grad.assign(values.size(), 0.0);
}

bool Tensor::all_finite() const {
    for (double v : values)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
    os << ']';
    return os.str();
}

}  // namespace forge
