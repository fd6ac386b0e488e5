#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace dcl {

// Dense row-major tensor of 64-bit reals. Values are immutable by convention
// once an operation has produced them; ops return fresh tensors.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;

    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor full(std::vector<std::size_t> shape, double value);
    static Tensor from(std::vector<std::size_t> shape, std::vector<double> values);

    std::size_t rank() const { return shape.size(); }
    std::size_t numel() const;
    bool same_shape(const Tensor& other) const { return shape == other.shape; }

    double& operator()(std::size_t i) { return data[i]; }
    double operator()(std::size_t i) const { return data[i]; }
    double& operator()(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }
    double& operator()(std::size_t i, std::size_t j, std::size_t k) {
        return data[(i * shape[1] + j) * shape[2] + k];
    }
    double operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return data[(i * shape[1] + j) * shape[2] + k];
    }

    bool operator==(const Tensor&) const = default;

    bool all_finite() const;
    // Throws NumericError naming `context` if any entry is NaN/Inf.
    void require_finite(const std::string& context) const;

    std::string shape_str() const;
};

// Temperature softmax along `axis`, max-subtracted for stability.
// Each slice of the output sums to 1; tau must be positive.
Tensor softmax_temp(const Tensor& logits, double tau, std::size_t axis);

// Normalizes the last axis to zero mean / unit population variance, then
// applies gain and bias. Zero-variance slices (under eps) map to the bias.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);

// Affine map y = x * W^T + b for x of rank 1 (vector) or rank 2 (rows of
// inputs); weight is (out x in), bias is (out).
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

} // namespace dcl
