#pragma once

#include <string>

#include "dualcausal/rng.hpp"
#include "dualcausal/tape.hpp"

namespace dcl {

enum class LabelMode { single_label, multi_label };
std::string to_string(LabelMode mode);
LabelMode label_mode_from_string(const std::string& s);

// Per-class prediction head: logit[c] = sum_d w[c,d] * interaction[c,d] + b[c].
struct ClassifierHead {
    Param weight; // K x D
    Param bias;   // K
    LabelMode mode = LabelMode::single_label;

    static ClassifierHead init(std::size_t classes, std::size_t dim, LabelMode mode, Rng& rng,
                               double scale = 0.1);
    std::size_t classes() const { return weight.value.shape[0]; }
};

// Cross-modal interaction: per-class elementwise product.
Var interact(Tape& tape, Var t_prime, Var v_prime);
Tensor interact(const Tensor& t_prime, const Tensor& v_prime);

Var head_logits(Tape& tape, Var interaction, ClassifierHead& head);

// Single-label mode: softmax probabilities over classes.
// Multi-label mode: independent per-class logistic scores in [0,1].
Tensor predict(const Tensor& interaction, const ClassifierHead& head);
Tensor scores_from_logits(const Tensor& logits, LabelMode mode);

} // namespace dcl
