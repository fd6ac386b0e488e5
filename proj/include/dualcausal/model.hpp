#pragma once

#include <string>
#include <vector>

#include "dualcausal/classifier.hpp"
#include "dualcausal/interventions.hpp"
#include "dualcausal/world.hpp"

namespace dcl {

enum class Variant { baseline, tci_only, vci_only, full };
std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct ModelConfig {
    Variant variant = Variant::full;
    LabelMode mode = LabelMode::single_label;
    std::size_t sta_layers = 6;
    std::size_t heads = 4;
    double tau_text = 0.07;
    double tau_vis = 0.07;
};

// The full cross-modal pipeline, gated by variant:
//   text side:   raw bank, or the debiased bank via the back-door module;
//   visual side: mean-pooled pretrained-channel features (v_p), or the
//                deconfounded per-class embeddings built from the independent
//                channel (v) through the attention encoder.
// Single-label mode classifies long-term classes; multi-label mode scores
// the atomic-action vocabulary.
class Model {
public:
    Model(const World& world, const ModelConfig& config, std::uint64_t init_seed);

    bool tci_active() const;
    bool vci_active() const;
    std::size_t num_labels() const { return head_.classes(); }
    const ModelConfig& config() const { return cfg_; }

    // Builds the per-class logits for one episode on the given tape.
    Var forward(Tape& tape, const Episode& ep);

    // Value-level per-class scores (softmax probabilities or logistic scores).
    Tensor scores(const Episode& ep);

    // The text bank the classifier actually uses for this episode (debiased
    // when the textual intervention is active). K x D.
    Tensor text_bank_values(const Episode& ep);

    // The model's frame-level visual representation: the pretrained channel
    // for variants without the visual intervention, the attention-encoded
    // independent channel otherwise. L x D.
    Tensor frame_embedding_values(const Episode& ep);

    // Parameters updated by training under the configured variant.
    std::vector<Param*> trainable_params();
    // Every parameter, in the fixed checkpoint order.
    std::vector<Param*> all_params();

    void save_checkpoint(const std::string& path) const;
    void load_checkpoint(const std::string& path);

private:
    ModelConfig cfg_;
    TextBank text_;
    ConcatAffine debias_map_;
    StaStack sta_;
    ConcatAffine deconfound_map_;
    ClassifierHead head_;

    Var text_bank_var(Tape& tape, Var v_p);
};

} // namespace dcl
