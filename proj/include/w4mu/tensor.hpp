#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "w4mu/errors.hpp"

namespace w4mu {

/// Dense row-major tensor of 64-bit reals. Rank 1 ({n}) and rank 2 ({r,c})
/// cover everything the models need; a scalar is shape {1}.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor scalar(double v) { return Tensor({1}, {v}); }
    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<std::size_t> shape, double v);

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t rows() const;
    std::size_t cols() const;
    bool is_scalar() const { return data.size() == 1; }
    double item() const;

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }
    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    std::string shape_str() const;
    bool all_finite() const;

    /// Copy of row r as a {1,cols} tensor.
    Tensor row(std::size_t r) const;

    std::vector<std::size_t> shape;
    std::vector<double> data;
};

std::string shape_to_string(const std::vector<std::size_t>& shape);

/// Stack the given rows of `src` into a new {k, cols} tensor.
Tensor gather_rows(const Tensor& src, const std::vector<std::size_t>& idx);

}  // namespace w4mu
