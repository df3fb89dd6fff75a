#include "w4mu/tensor.hpp"

#include <cmath>
#include <numeric>

namespace w4mu {

static std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

Tensor::Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
    data.assign(shape_product(shape), 0.0);
}

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
    if (shape_product(shape) != data.size()) {
        throw DimensionError("tensor: shape " + shape_to_string(shape) + " does not match " +
                             std::to_string(data.size()) + " elements");
    }
}

Tensor Tensor::full(std::vector<std::size_t> shape, double v) {
    Tensor t(std::move(shape));
    for (auto& x : t.data) x = v;
    return t;
}

std::size_t Tensor::rows() const { return rank() == 2 ? shape[0] : 1; }

std::size_t Tensor::cols() const {
    if (rank() == 2) return shape[1];
    if (rank() == 1) return shape[0];
    return 1;
}

double Tensor::item() const {
    if (!is_scalar()) throw ContractError("item() on non-scalar tensor " + shape_str());
    return data[0];
}

std::string Tensor::shape_str() const { return shape_to_string(shape); }

bool Tensor::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

Tensor Tensor::row(std::size_t r) const {
    std::size_t c = cols();
    Tensor out({1, c});
    for (std::size_t j = 0; j < c; ++j) out.data[j] = data[r * c + j];
    return out;
}

std::string shape_to_string(const std::vector<std::size_t>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

Tensor gather_rows(const Tensor& src, const std::vector<std::size_t>& idx) {
    std::size_t c = src.cols();
    Tensor out({idx.size(), c});
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < c; ++j) out(i, j) = src(idx[i], j);
    return out;
}

}  // namespace w4mu
