#pragma once

#include <cstdint>
#include <vector>

#include "dualcausal/model.hpp"
#include "dualcausal/world.hpp"

namespace dcl {

struct MetricsReport {
    double acc_at_1 = 0.0;
    double acc_at_5 = 0.0;
    double map = 0.0;
    Tensor cooccurrence;      // A x A, from the evaluated episodes
    Tensor matching;          // A x C, single-label mode only
    Tensor coclassification;  // A x A, multi-label mode only
    std::vector<std::size_t> zero_positive_classes; // excluded from the mAP mean
    std::vector<std::size_t> never_predicted;       // flagged co-classification columns
    std::vector<double> loss_curve;
    std::uint64_t split_hash = 0;
    LabelMode mode = LabelMode::single_label;
};

// Fraction of episodes whose true label ranks in the top k scores
// (stable order breaks ties).
double accuracy_at_k(const std::vector<Tensor>& scores, const std::vector<std::size_t>& labels,
                     std::size_t k);

// Non-interpolated average precision over a score-ranked list: the mean of
// precision at each positive's rank; ties keep original order.
double average_precision(const std::vector<double>& scores, const std::vector<std::uint8_t>& positives);

// Mean AP over classes with at least one positive; zero-positive classes are
// excluded and reported.
double mean_average_precision(const std::vector<Tensor>& scores,
                              const std::vector<std::vector<std::uint8_t>>& positives_per_class,
                              std::vector<std::size_t>* zero_positive_classes);

// For each atomic action: softmax-normalized mean similarity between its
// frames' visual embeddings (under the model) and each class text embedding.
// Absent actions get zero rows and are flagged.
Tensor matching_stats(Model& model, const std::vector<Episode>& episodes, std::size_t num_atomic,
                      std::vector<std::size_t>* absent_actions = nullptr);

// entry (i,j) = P(action i predicted | action j predicted) at the given
// decision threshold; never-predicted actions give zero columns, flagged.
Tensor coclassification(Model& model, const std::vector<Episode>& episodes,
                        std::vector<std::size_t>* never_predicted = nullptr,
                        double threshold = 0.5);

MetricsReport evaluate(Model& model, const std::vector<Episode>& episodes, const WorldSpec& spec);

// Order-sensitive content hash of an episode list (split manifests).
std::uint64_t episodes_hash(const std::vector<Episode>& episodes);

} // namespace dcl
