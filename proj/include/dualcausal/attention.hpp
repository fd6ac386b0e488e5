#pragma once

#include <string>

#include "dualcausal/rng.hpp"
#include "dualcausal/tape.hpp"

namespace dcl {

// One pre-normalization residual self-attention block over a frame sequence:
//   out = x + MultiHeadAttention(LayerNorm(x) + pos)
// Projections carry no biases; attention rows are softmax-normalized.
struct MhsaBlockParams {
    Param wq, wk, wv, wo; // each (D x D)
    Param ln_gain, ln_bias;

    static MhsaBlockParams init(std::size_t dim, Rng& rng, const std::string& prefix,
                                double weight_scale = 0.0);
    std::size_t dim() const { return wq.value.shape[0]; }
};

// Tape-level block; pos is an (L x D) node added to the normalized input.
Var mhsa_block(Tape& tape, Var x, MhsaBlockParams& params, Var pos, std::size_t heads);

// Value-level convenience wrapper (builds a throwaway tape).
Tensor mhsa_block(const Tensor& x, MhsaBlockParams& params, const Tensor& pos, std::size_t heads);

} // namespace dcl
