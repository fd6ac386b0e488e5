#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "dualcausal/tensor.hpp"

namespace dcl {

// Learnable tensor with its accumulated gradient.
struct Param {
    std::string name;
    Tensor value;
    Tensor grad;

    Param() = default;
    Param(std::string name_, Tensor value_)
        : name(std::move(name_)), value(std::move(value_)), grad(Tensor::zeros(value.shape)) {}

    void reset_grad() { grad = Tensor::zeros(value.shape); }
};

class Tape;

// Handle to a node on a tape. Cheap to copy; valid for the tape's lifetime.
struct Var {
    int id = -1;
};

// Recorded computation graph for reverse-mode gradient accumulation.
// Nodes are appended in evaluation order, so a single reverse sweep over the
// node list is a valid topological traversal. Building and differentiating a
// tape is single-threaded; the produced tensors are plain values.
class Tape {
public:
    Var leaf(Tensor value);
    // Registers the param's current value as a leaf; backward() adds the
    // accumulated node gradient into param.grad.
    Var input(Param& param);

    const Tensor& value(Var v) const { return nodes_[v.id].value; }
    const Tensor& grad(Var v) const { return nodes_[v.id].grad; }

    // Elementwise; shapes must match exactly.
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var a, double c);

    // a is (N x M), v is (M); adds v to every row.
    Var add_rowvec(Var a, Var v);

    Var matmul(Var a, Var b);
    Var transpose(Var a);

    Var softmax(Var logits, double tau, std::size_t axis);
    // Normalizes the last axis; gain/bias are vectors of that extent.
    Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);

    // Affine x * W^T + b with W (out x in), b (out); x rank 1 or 2.
    Var linear(Var x, Var weight, Var bias);

    Var concat_cols(Var a, Var b);
    Var slice_cols(Var a, std::size_t col_begin, std::size_t col_end);

    // out[c,l,d] = frames[l,d] * bank[c,d]; frames (L x D), bank (C x D).
    Var per_dim_logits(Var frames, Var bank);
    // out[c,d] = sum_l scores[c,l,d] * frames[l,d]; scores (C x L x D).
    Var frame_weighted_sum(Var scores, Var frames);

    Var mean_rows(Var a);                 // (N x D) -> (D)
    Var broadcast_rows(Var v, std::size_t rows); // (D) -> (rows x D)
    Var row_dot(Var a, Var b);            // (N x D), (N x D) -> (N)

    // Scalar losses (1-element tensors).
    Var cross_entropy_with_logits(Var logits, std::size_t target);
    Var binary_cross_entropy_with_logits(Var logits, const Tensor& targets);
    Var mean_of(const std::vector<Var>& terms);
    Var sum_squares(Var a);

    // Seeds d(out)/d(out) = 1 and sweeps the graph in reverse creation order,
    // then adds leaf gradients into their bound Params. `out` must be scalar.
    void backward(Var out);

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool grad_touched = false;
        std::function<void(Tape&, const Tensor&)> backward; // upstream grad -> parents
        Param* bound_param = nullptr;
    };

    std::vector<Node> nodes_;

    Var push(Tensor value, std::function<void(Tape&, const Tensor&)> backward);
    void accumulate(Var v, const Tensor& g);
    friend struct TapeTestAccess;
};

} // namespace dcl
