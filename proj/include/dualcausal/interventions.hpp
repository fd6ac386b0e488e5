#pragma once

#include <string>
#include <vector>

#include "dualcausal/attention.hpp"
#include "dualcausal/tape.hpp"

namespace dcl {

// Learnable per-class text embeddings, initialized from the world's text
// prototypes to stand in for a pretrained VLM's label embeddings.
struct TextBank {
    Param t; // K x D
    double tau_text = 0.07;

    static TextBank init(const Tensor& prototypes, double tau);
    std::size_t classes() const { return t.value.shape[0]; }
    std::size_t dim() const { return t.value.shape[1]; }
};

// Affine map over the concatenation of two K x D banks, applied per class:
// out = [first, second] W^T + b. Initialized to pass one block through
// unchanged so an untrained intervention is a no-op.
struct ConcatAffine {
    Param weight; // D x 2D
    Param bias;   // D

    enum class PassThrough { first_block, second_block };
    static ConcatAffine init_identity(std::size_t dim, PassThrough block, const std::string& name);
};

Var concat_affine(Tape& tape, ConcatAffine& map, Var first, Var second);

// --- Textual intervention: back-door debiasing of the text bank ---

// s[c,l] = softmax over frames of (v_p[l] . t[c]) / tau; rows sum to 1.
Var bias_scores(Tape& tape, Var v_p, Var text, double tau_text);
Tensor bias_scores(const Tensor& v_p, const TextBank& text);

// b[c] = sum_l s[c,l] v_p[l]: the attention-pooled surrogate for the latent
// cross-modal bias, one embedding per class.
Var bias_embeddings(Tape& tape, Var scores, Var v_p);
Tensor bias_embeddings(const Tensor& scores, const Tensor& v_p);

// t'[c] = h([t[c], b[c]]): debiased text embeddings.
Tensor debias(const TextBank& text, const Tensor& bias_embed, const ConcatAffine& h);

// --- Visual intervention: front-door deconfounding of the visual stream ---

// H-layer residual attention encoder with one learned positional embedding
// shared by all blocks.
struct StaStack {
    std::vector<MhsaBlockParams> blocks;
    Param pos; // L x D
    std::size_t heads = 4;
    double tau_vis = 0.07;

    static StaStack init(std::size_t layers, std::size_t frames, std::size_t dim,
                         std::size_t heads, double tau, Rng& rng);
    std::vector<Param*> params();
};

Var encode_sta(Tape& tape, Var v, StaStack& stack);
Tensor encode_sta(const Tensor& v, StaStack& stack);

// s[c,l,d] = softmax over frames of v_h[l,d] * t'[c,d] / tau; each (c,d)
// fiber sums to 1.
Var fine_scores(Tape& tape, Var v_h, Var t_prime, double tau_vis);
Tensor fine_scores(const Tensor& v_h, const Tensor& t_prime, double tau_vis);

// v_hat[c,d] = sum_l s[c,l,d] v_h[l,d]: per-class emphasized features.
Var emphasized(Tape& tape, Var scores, Var v_h);
Tensor emphasized(const Tensor& scores, const Tensor& v_h);

// v'[c] = g([t'[c], v_hat[c]]): deconfounded visual embeddings.
Tensor deconfound(const Tensor& t_prime, const Tensor& v_hat, const ConcatAffine& g);

} // namespace dcl
