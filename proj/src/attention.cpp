#include "dualcausal/attention.hpp"

#include <cmath>

#include "dualcausal/errors.hpp"

namespace dcl {

MhsaBlockParams MhsaBlockParams::init(std::size_t dim, Rng& rng, const std::string& prefix,
                                      double weight_scale) {
    const double scale = weight_scale > 0.0 ? weight_scale : 1.0 / std::sqrt(static_cast<double>(dim));
    auto matrix = [&](const std::string& name) {
        Tensor w = Tensor::zeros({dim, dim});
        for (double& v : w.data) v = rng.normal() * scale;
        return Param(prefix + "." + name, std::move(w));
    };
    MhsaBlockParams p;
    p.wq = matrix("wq");
    p.wk = matrix("wk");
    p.wv = matrix("wv");
    p.wo = matrix("wo");
    p.ln_gain = Param(prefix + ".ln_gain", Tensor::full({dim}, 1.0));
    p.ln_bias = Param(prefix + ".ln_bias", Tensor::zeros({dim}));
    return p;
}

Var mhsa_block(Tape& tape, Var x, MhsaBlockParams& params, Var pos, std::size_t heads) {
    const Tensor& tx = tape.value(x);
    if (tx.rank() != 2) throw ShapeError("mhsa_block: input must be (L x D), got " + tx.shape_str());
    const std::size_t dim = tx.shape[1];
    if (heads == 0 || dim % heads != 0) {
        throw InvalidArgumentError("mhsa_block: feature dim " + std::to_string(dim) +
                                   " not divisible by heads " + std::to_string(heads));
    }
    if (params.dim() != dim) {
        throw ShapeError("mhsa_block: params built for dim " + std::to_string(params.dim()) +
                         ", input has dim " + std::to_string(dim));
    }
    const std::size_t head_dim = dim / heads;

    Var gain = tape.input(params.ln_gain);
    Var bias = tape.input(params.ln_bias);
    Var u = tape.add(tape.layer_norm(x, gain, bias), pos);

    Var q = tape.matmul(u, tape.transpose(tape.input(params.wq)));
    Var k = tape.matmul(u, tape.transpose(tape.input(params.wk)));
    Var v = tape.matmul(u, tape.transpose(tape.input(params.wv)));

    Var merged{-1};
    for (std::size_t h = 0; h < heads; ++h) {
        const std::size_t c0 = h * head_dim;
        const std::size_t c1 = c0 + head_dim;
        Var qh = tape.slice_cols(q, c0, c1);
        Var kh = tape.slice_cols(k, c0, c1);
        Var vh = tape.slice_cols(v, c0, c1);
        Var scores = tape.scale(tape.matmul(qh, tape.transpose(kh)),
                                1.0 / std::sqrt(static_cast<double>(head_dim)));
        Var weights = tape.softmax(scores, 1.0, 1);
        Var out_h = tape.matmul(weights, vh);
        merged = (h == 0) ? out_h : tape.concat_cols(merged, out_h);
    }
    Var projected = tape.matmul(merged, tape.transpose(tape.input(params.wo)));
    return tape.add(x, projected);
}

Tensor mhsa_block(const Tensor& x, MhsaBlockParams& params, const Tensor& pos, std::size_t heads) {
    Tape tape;
    Var out = mhsa_block(tape, tape.leaf(x), params, tape.leaf(pos), heads);
    return tape.value(out);
}

} // namespace dcl
