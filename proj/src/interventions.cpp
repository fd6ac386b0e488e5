#include "dualcausal/interventions.hpp"

#include "dualcausal/errors.hpp"

namespace dcl {

TextBank TextBank::init(const Tensor& prototypes, double tau) {
    if (prototypes.rank() != 2) throw ShapeError("TextBank: prototypes must be (K x D)");
    if (!(tau > 0.0)) throw InvalidArgumentError("TextBank: tau_text must be positive");
    TextBank bank;
    bank.t = Param("text.t", prototypes);
    bank.tau_text = tau;
    return bank;
}

ConcatAffine ConcatAffine::init_identity(std::size_t dim, PassThrough block, const std::string& name) {
    ConcatAffine map;
    Tensor w = Tensor::zeros({dim, 2 * dim});
    const std::size_t offset = block == PassThrough::first_block ? 0 : dim;
    for (std::size_t d = 0; d < dim; ++d) w(d, offset + d) = 1.0;
    map.weight = Param(name + ".weight", std::move(w));
    map.bias = Param(name + ".bias", Tensor::zeros({dim}));
    return map;
}

Var concat_affine(Tape& tape, ConcatAffine& map, Var first, Var second) {
    Var joined = tape.concat_cols(first, second);
    return tape.linear(joined, tape.input(map.weight), tape.input(map.bias));
}

Var bias_scores(Tape& tape, Var v_p, Var text, double tau_text) {
    if (!(tau_text > 0.0)) throw InvalidArgumentError("bias_scores: tau_text must be positive");
    Var logits = tape.matmul(text, tape.transpose(v_p)); // K x L
    return tape.softmax(logits, tau_text, 1);
}

Tensor bias_scores(const Tensor& v_p, const TextBank& text) {
    Tape tape;
    Var out = bias_scores(tape, tape.leaf(v_p), tape.leaf(text.t.value), text.tau_text);
    return tape.value(out);
}

Var bias_embeddings(Tape& tape, Var scores, Var v_p) {
    return tape.matmul(scores, v_p);
}

Tensor bias_embeddings(const Tensor& scores, const Tensor& v_p) {
    Tape tape;
    Var out = bias_embeddings(tape, tape.leaf(scores), tape.leaf(v_p));
    return tape.value(out);
}

Tensor debias(const TextBank& text, const Tensor& bias_embed, const ConcatAffine& h) {
    Tape tape;
    Var joined = tape.concat_cols(tape.leaf(text.t.value), tape.leaf(bias_embed));
    Var out = tape.linear(joined, tape.leaf(h.weight.value), tape.leaf(h.bias.value));
    return tape.value(out);
}

StaStack StaStack::init(std::size_t layers, std::size_t frames, std::size_t dim,
                        std::size_t heads, double tau, Rng& rng) {
    if (heads == 0 || dim % heads != 0) {
        throw InvalidArgumentError("StaStack: feature dim " + std::to_string(dim) +
                                   " not divisible by heads " + std::to_string(heads));
    }
    if (!(tau > 0.0)) throw InvalidArgumentError("StaStack: tau_vis must be positive");
    StaStack stack;
    stack.heads = heads;
    stack.tau_vis = tau;
    for (std::size_t h = 0; h < layers; ++h) {
        stack.blocks.push_back(MhsaBlockParams::init(dim, rng, "sta.block" + std::to_string(h)));
    }
    Tensor pos = Tensor::zeros({frames, dim});
    for (double& v : pos.data) v = rng.normal() * 0.1;
    stack.pos = Param("sta.pos", std::move(pos));
    return stack;
}

std::vector<Param*> StaStack::params() {
    std::vector<Param*> out;
    for (MhsaBlockParams& b : blocks) {
        out.push_back(&b.wq);
        out.push_back(&b.wk);
        out.push_back(&b.wv);
        out.push_back(&b.wo);
        out.push_back(&b.ln_gain);
        out.push_back(&b.ln_bias);
    }
    out.push_back(&pos);
    return out;
}

Var encode_sta(Tape& tape, Var v, StaStack& stack) {
    Var pos = tape.input(stack.pos);
    Var x = v;
    for (MhsaBlockParams& block : stack.blocks) {
        x = mhsa_block(tape, x, block, pos, stack.heads);
    }
    return x;
}

Tensor encode_sta(const Tensor& v, StaStack& stack) {
    Tape tape;
    Var out = encode_sta(tape, tape.leaf(v), stack);
    return tape.value(out);
}

Var fine_scores(Tape& tape, Var v_h, Var t_prime, double tau_vis) {
    if (!(tau_vis > 0.0)) throw InvalidArgumentError("fine_scores: tau_vis must be positive");
    Var logits = tape.per_dim_logits(v_h, t_prime); // K x L x D
    return tape.softmax(logits, tau_vis, 1);
}

Tensor fine_scores(const Tensor& v_h, const Tensor& t_prime, double tau_vis) {
    Tape tape;
    Var out = fine_scores(tape, tape.leaf(v_h), tape.leaf(t_prime), tau_vis);
    return tape.value(out);
}

Var emphasized(Tape& tape, Var scores, Var v_h) {
    return tape.frame_weighted_sum(scores, v_h);
}

Tensor emphasized(const Tensor& scores, const Tensor& v_h) {
    Tape tape;
    Var out = emphasized(tape, tape.leaf(scores), tape.leaf(v_h));
    return tape.value(out);
}

Tensor deconfound(const Tensor& t_prime, const Tensor& v_hat, const ConcatAffine& g) {
    Tape tape;
    Var joined = tape.concat_cols(tape.leaf(t_prime), tape.leaf(v_hat));
    Var out = tape.linear(joined, tape.leaf(g.weight.value), tape.leaf(g.bias.value));
    return tape.value(out);
}

} // namespace dcl
