#include "dualcausal/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dualcausal/errors.hpp"

namespace dcl {

namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

} // namespace

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    Tensor t;
    t.data.assign(product(shape), 0.0);
    t.shape = std::move(shape);
    return t;
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
    Tensor t;
    t.data.assign(product(shape), value);
    t.shape = std::move(shape);
    return t;
}

Tensor Tensor::from(std::vector<std::size_t> shape, std::vector<double> values) {
    if (product(shape) != values.size()) {
        throw ShapeError("Tensor::from: shape holds " + std::to_string(product(shape)) +
                         " elements but " + std::to_string(values.size()) + " values given");
    }
    Tensor t;
    t.shape = std::move(shape);
    t.data = std::move(values);
    return t;
}

std::size_t Tensor::numel() const { return product(shape); }

bool Tensor::all_finite() const {
    return std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::require_finite(const std::string& context) const {
    if (!all_finite()) throw NumericError(context + ": non-finite value in tensor " + shape_str());
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
    os << "]";
    return os.str();
}

Tensor softmax_temp(const Tensor& logits, double tau, std::size_t axis) {
    if (!(tau > 0.0)) throw InvalidArgumentError("softmax_temp: tau must be positive, got " + std::to_string(tau));
    if (axis >= logits.rank()) throw ShapeError("softmax_temp: axis " + std::to_string(axis) + " out of range for " + logits.shape_str());
    logits.require_finite("softmax_temp input");

    Tensor out = Tensor::zeros(logits.shape);
    const std::size_t extent = logits.shape[axis];
    std::size_t inner = 1;
    for (std::size_t a = axis + 1; a < logits.rank(); ++a) inner *= logits.shape[a];
    const std::size_t outer = logits.numel() / (extent * inner);
    const std::size_t stride = inner;

    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t in = 0; in < inner; ++in) {
            const std::size_t base = o * extent * inner + in;
            double mx = logits.data[base];
            for (std::size_t k = 1; k < extent; ++k) mx = std::max(mx, logits.data[base + k * stride]);
            double sum = 0.0;
            for (std::size_t k = 0; k < extent; ++k) {
                const double e = std::exp((logits.data[base + k * stride] - mx) / tau);
                out.data[base + k * stride] = e;
                sum += e;
            }
            for (std::size_t k = 0; k < extent; ++k) out.data[base + k * stride] /= sum;
        }
    }
    return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
    if (eps < 0.0) throw InvalidArgumentError("layer_norm: eps must be nonnegative");
    if (x.rank() == 0) throw ShapeError("layer_norm: scalar input");
    const std::size_t width = x.shape.back();
    if (gain.rank() != 1 || gain.shape[0] != width || bias.rank() != 1 || bias.shape[0] != width) {
        throw ShapeError("layer_norm: gain/bias must be vectors of length " + std::to_string(width) +
                         ", got " + gain.shape_str() + " and " + bias.shape_str());
    }
    Tensor out = Tensor::zeros(x.shape);
    const std::size_t rows = x.numel() / width;
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = &x.data[r * width];
        double mean = 0.0;
        for (std::size_t i = 0; i < width; ++i) mean += row[i];
        mean /= static_cast<double>(width);
        double var = 0.0;
        for (std::size_t i = 0; i < width; ++i) {
            const double d = row[i] - mean;
            var += d * d;
        }
        var /= static_cast<double>(width);
        const double denom = std::sqrt(var + eps);
        // Degenerate slice: normalized part defined as zero.
        const double inv = denom > 0.0 ? 1.0 / denom : 0.0;
        for (std::size_t i = 0; i < width; ++i) {
            out.data[r * width + i] = gain.data[i] * (row[i] - mean) * inv + bias.data[i];
        }
    }
    return out;
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    if (weight.rank() != 2) throw ShapeError("linear: weight must be rank 2, got " + weight.shape_str());
    const std::size_t out_dim = weight.shape[0];
    const std::size_t in_dim = weight.shape[1];
    if (bias.rank() != 1 || bias.shape[0] != out_dim) {
        throw ShapeError("linear: bias must be a vector of length " + std::to_string(out_dim));
    }
    if (x.rank() == 1) {
        if (x.shape[0] != in_dim) throw ShapeError("linear: input length " + x.shape_str() + " does not match weight " + weight.shape_str());
        Tensor y = Tensor::zeros({out_dim});
        for (std::size_t o = 0; o < out_dim; ++o) {
            double acc = bias.data[o];
            for (std::size_t i = 0; i < in_dim; ++i) acc += weight(o, i) * x.data[i];
            y.data[o] = acc;
        }
        return y;
    }
    if (x.rank() == 2) {
        if (x.shape[1] != in_dim) throw ShapeError("linear: input " + x.shape_str() + " does not match weight " + weight.shape_str());
        const std::size_t rows = x.shape[0];
        Tensor y = Tensor::zeros({rows, out_dim});
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t o = 0; o < out_dim; ++o) {
                double acc = bias.data[o];
                for (std::size_t i = 0; i < in_dim; ++i) acc += weight(o, i) * x(r, i);
                y(r, o) = acc;
            }
        }
        return y;
    }
    throw ShapeError("linear: input must be rank 1 or 2, got " + x.shape_str());
}

} // namespace dcl
