#include "dualcausal/model.hpp"

#include <fstream>

#include "dualcausal/errors.hpp"
#include "dualcausal/jsonio.hpp"

namespace dcl {

std::string to_string(Variant v) {
    switch (v) {
        case Variant::baseline: return "baseline";
        case Variant::tci_only: return "tci_only";
        case Variant::vci_only: return "vci_only";
        case Variant::full: return "full";
    }
    return "full";
}

Variant variant_from_string(const std::string& s) {
    if (s == "baseline") return Variant::baseline;
    if (s == "tci_only") return Variant::tci_only;
    if (s == "vci_only") return Variant::vci_only;
    if (s == "full") return Variant::full;
    throw ValidationError("variant must be one of baseline|tci_only|vci_only|full, got \"" + s + "\"");
}

Model::Model(const World& world, const ModelConfig& config, std::uint64_t init_seed) : cfg_(config) {
    const std::size_t dim = world.spec.feature_dim;
    const std::size_t frames = world.spec.frames_per_episode;
    const Tensor& prototypes = cfg_.mode == LabelMode::single_label
                                   ? world.class_text_prototypes
                                   : world.atomic_prototypes;
    text_ = TextBank::init(prototypes, cfg_.tau_text);
    debias_map_ = ConcatAffine::init_identity(dim, ConcatAffine::PassThrough::first_block, "debias");
    Rng rng(init_seed);
    sta_ = StaStack::init(cfg_.sta_layers, frames, dim, cfg_.heads, cfg_.tau_vis, rng);
    deconfound_map_ =
        ConcatAffine::init_identity(dim, ConcatAffine::PassThrough::second_block, "deconfound");
    head_ = ClassifierHead::init(prototypes.shape[0], dim, cfg_.mode, rng);
}

bool Model::tci_active() const {
    return cfg_.variant == Variant::tci_only || cfg_.variant == Variant::full;
}

bool Model::vci_active() const {
    return cfg_.variant == Variant::vci_only || cfg_.variant == Variant::full;
}

Var Model::text_bank_var(Tape& tape, Var v_p) {
    Var t = tape.input(text_.t);
    if (!tci_active()) return t;
    Var s = bias_scores(tape, v_p, t, text_.tau_text);
    Var b = bias_embeddings(tape, s, v_p);
    return concat_affine(tape, debias_map_, t, b);
}

Var Model::forward(Tape& tape, const Episode& ep) {
    Var v_p = tape.leaf(ep.v_p);
    Var bank = text_bank_var(tape, v_p);
    Var visual{-1};
    if (vci_active()) {
        Var v = tape.leaf(ep.v);
        Var v_h = encode_sta(tape, v, sta_);
        Var f = fine_scores(tape, v_h, bank, sta_.tau_vis);
        Var v_hat = emphasized(tape, f, v_h);
        visual = concat_affine(tape, deconfound_map_, bank, v_hat);
    } else {
        visual = tape.broadcast_rows(tape.mean_rows(v_p), num_labels());
    }
    Var inter = interact(tape, bank, visual);
    return head_logits(tape, inter, head_);
}

Tensor Model::scores(const Episode& ep) {
    Tape tape;
    Var logits = forward(tape, ep);
    return scores_from_logits(tape.value(logits), cfg_.mode);
}

Tensor Model::text_bank_values(const Episode& ep) {
    Tape tape;
    Var bank = text_bank_var(tape, tape.leaf(ep.v_p));
    return tape.value(bank);
}

Tensor Model::frame_embedding_values(const Episode& ep) {
    if (!vci_active()) return ep.v_p;
    Tape tape;
    Var v_h = encode_sta(tape, tape.leaf(ep.v), sta_);
    return tape.value(v_h);
}

std::vector<Param*> Model::trainable_params() {
    std::vector<Param*> out{&text_.t};
    if (tci_active()) {
        out.push_back(&debias_map_.weight);
        out.push_back(&debias_map_.bias);
    }
    if (vci_active()) {
        for (Param* p : sta_.params()) out.push_back(p);
        out.push_back(&deconfound_map_.weight);
        out.push_back(&deconfound_map_.bias);
    }
    out.push_back(&head_.weight);
    out.push_back(&head_.bias);
    return out;
}

std::vector<Param*> Model::all_params() {
    std::vector<Param*> out{&text_.t, &debias_map_.weight, &debias_map_.bias};
    for (Param* p : sta_.params()) out.push_back(p);
    out.push_back(&deconfound_map_.weight);
    out.push_back(&deconfound_map_.bias);
    out.push_back(&head_.weight);
    out.push_back(&head_.bias);
    return out;
}

void Model::save_checkpoint(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("save_checkpoint: cannot open " + path + " for writing");
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (Param* p : const_cast<Model*>(this)->all_params()) {
        nlohmann::ordered_json entry;
        entry["shape"] = p->value.shape;
        entry["data"] = p->value.data;
        params[p->name] = std::move(entry);
    }
    nlohmann::ordered_json doc;
    doc["variant"] = to_string(cfg_.variant);
    doc["mode"] = to_string(cfg_.mode);
    doc["params"] = std::move(params);
    jsonio::dump(doc, out);
    out << '\n';
    if (!out.good()) throw IoError("save_checkpoint: write failure on " + path);
}

void Model::load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_checkpoint: cannot open " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("checkpoint: ") + e.what());
    }
    if (!doc.contains("params") || !doc["params"].is_object()) {
        throw ParseError("checkpoint: missing params object");
    }
    const auto& params = doc["params"];
    for (Param* p : all_params()) {
        if (!params.contains(p->name)) throw ParseError("checkpoint: missing parameter " + p->name);
        const auto& entry = params[p->name];
        const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
        if (shape != p->value.shape) {
            throw ParseError("checkpoint: parameter " + p->name + " has shape mismatch");
        }
        const auto data = entry.at("data").get<std::vector<double>>();
        if (data.size() != p->value.data.size()) {
            throw ParseError("checkpoint: parameter " + p->name + " has wrong element count");
        }
        p->value.data = data;
        p->reset_grad();
    }
}

} // namespace dcl
