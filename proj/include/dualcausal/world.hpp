#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "dualcausal/rng.hpp"
#include "dualcausal/tensor.hpp"

namespace dcl {

// Ordering constraint within one class: every occurrence of `before` precedes
// every occurrence of `after`.
struct OrderRule {
    std::size_t cls = 0;
    std::size_t before = 0;
    std::size_t after = 0;

    bool operator==(const OrderRule&) const = default;
};

// A noncausal atomic action whose frames get pulled toward the text prototype
// of `spurious_class` in the pretrained-VLM channel.
struct ConfounderAction {
    std::size_t atomic = 0;
    std::size_t spurious_class = 0;

    bool operator==(const ConfounderAction&) const = default;
};

struct WorldSpec {
    std::size_t num_classes = 4;
    std::size_t num_atomic = 12;
    std::size_t frames_per_episode = 16;
    std::size_t feature_dim = 32;
    std::vector<int> exclusive_owner;                    // per atomic: -1 or owning class
    std::vector<OrderRule> order_rules;
    std::vector<std::vector<std::size_t>> cooccur_rules; // per class: atomic multiset
    std::vector<ConfounderAction> confounder_actions;
    double bias_strength = 0.0;
    double confounder_strength = 0.0;
    double noise_sigma = 0.1;
    std::size_t num_confounders = 2;   // distinct visual confounder values
    double confounder_prob = 0.5;      // insertion probability per confounder action
    double confounder_class_corr = 0.75; // P(z = y mod num_confounders)
    std::uint64_t seed = 0;

    // Throws SpecValidationError naming the violated rule.
    void validate() const;

    bool operator==(const WorldSpec&) const = default;
};

// One synthetic long-term-action sample. Both channels are built from the
// same atomic token sequence; v_p carries the injected cross-modal bias,
// v carries the visual confounder offset.
struct Episode {
    Tensor v_p;                          // L x D, simulated pretrained-VLM features
    Tensor v;                            // L x D, independent-encoder features
    std::size_t y = 0;                   // long-term class
    std::vector<std::uint8_t> atomic_labels; // multi-hot, length A
    std::vector<std::size_t> frame_atomics;  // per-frame atomic id, length L
    std::size_t confounder_id = 0;       // sampled visual confounder value

    bool operator==(const Episode&) const = default;
};

struct World {
    WorldSpec spec;
    Tensor atomic_prototypes;   // A x D, unit rows
    Tensor class_text_prototypes; // C x D, unit rows
    Tensor confounder_offsets;  // num_confounders x D, unit rows
    Tensor bias_directions;     // C x D, unit rows

    bool operator==(const World&) const = default;
};

World build_world(const WorldSpec& spec);

Episode sample_episode(const World& world, Rng& rng);
std::vector<Episode> sample_episodes(const World& world, std::size_t count, std::uint64_t seed);

// Row-normalized co-occurrence counts: entry (i,j) = episodes containing both
// i and j divided by episodes containing i; zero rows for unseen actions.
Tensor cooccurrence_matrix(const std::vector<Episode>& episodes, std::size_t num_atomic);

struct Dataset {
    WorldSpec spec;
    std::vector<Episode> episodes;
};

// Self-describing text document: header (spec echo, counts, dimensions) plus
// per-episode records; numbers carry 17 significant digits so that
// import(export(E)) == E exactly.
void export_dataset(const std::vector<Episode>& episodes, const WorldSpec& spec,
                    const std::string& path);
Dataset import_dataset(const std::string& path);

nlohmann::json world_spec_to_json(const WorldSpec& spec);
// Rejects unknown keys and wrongly typed fields; missing keys keep defaults.
WorldSpec world_spec_from_json(const nlohmann::json& j);
WorldSpec load_world_spec(const std::string& path);

} // namespace dcl
