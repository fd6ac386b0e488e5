#include "dualcausal/classifier.hpp"

#include <cmath>

#include "dualcausal/errors.hpp"
#include "dualcausal/tensor.hpp"

namespace dcl {

std::string to_string(LabelMode mode) {
    return mode == LabelMode::single_label ? "single" : "multi";
}

LabelMode label_mode_from_string(const std::string& s) {
    if (s == "single") return LabelMode::single_label;
    if (s == "multi") return LabelMode::multi_label;
    throw ValidationError("mode must be \"single\" or \"multi\", got \"" + s + "\"");
}

ClassifierHead ClassifierHead::init(std::size_t classes, std::size_t dim, LabelMode mode, Rng& rng,
                                    double scale) {
    ClassifierHead head;
    Tensor w = Tensor::zeros({classes, dim});
    for (double& v : w.data) v = rng.normal() * scale;
    head.weight = Param("head.weight", std::move(w));
    head.bias = Param("head.bias", Tensor::zeros({classes}));
    head.mode = mode;
    return head;
}

Var interact(Tape& tape, Var t_prime, Var v_prime) {
    return tape.mul(t_prime, v_prime);
}

Tensor interact(const Tensor& t_prime, const Tensor& v_prime) {
    Tape tape;
    Var out = interact(tape, tape.leaf(t_prime), tape.leaf(v_prime));
    return tape.value(out);
}

Var head_logits(Tape& tape, Var interaction, ClassifierHead& head) {
    Var dots = tape.row_dot(interaction, tape.input(head.weight));
    return tape.add(dots, tape.input(head.bias));
}

Tensor scores_from_logits(const Tensor& logits, LabelMode mode) {
    if (logits.rank() != 1) throw ShapeError("scores_from_logits: expected a logit vector");
    if (mode == LabelMode::single_label) return softmax_temp(logits, 1.0, 0);
    Tensor out = Tensor::zeros(logits.shape);
    for (std::size_t i = 0; i < logits.data.size(); ++i) {
        out.data[i] = 1.0 / (1.0 + std::exp(-logits.data[i]));
    }
    out.require_finite("scores_from_logits");
    return out;
}

Tensor predict(const Tensor& interaction, const ClassifierHead& head) {
    Tape tape;
    Var dots = tape.row_dot(tape.leaf(interaction), tape.leaf(head.weight.value));
    Var logits = tape.add(dots, tape.leaf(head.bias.value));
    return scores_from_logits(tape.value(logits), head.mode);
}

} // namespace dcl
