#include "dualcausal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "dualcausal/errors.hpp"

namespace dcl {

double accuracy_at_k(const std::vector<Tensor>& scores, const std::vector<std::size_t>& labels,
                     std::size_t k) {
    if (scores.size() != labels.size()) throw ShapeError("accuracy_at_k: scores/labels size mismatch");
    if (scores.empty()) throw InvalidArgumentError("accuracy_at_k: empty evaluation set");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const Tensor& s = scores[i];
        const std::size_t classes = s.data.size();
        const std::size_t kk = std::min(k, classes);
        std::vector<std::size_t> idx(classes);
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t a, std::size_t b) { return s.data[a] > s.data[b]; });
        for (std::size_t r = 0; r < kk; ++r) {
            if (idx[r] == labels[i]) {
                ++hits;
                break;
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(scores.size());
}

double average_precision(const std::vector<double>& scores,
                         const std::vector<std::uint8_t>& positives) {
    if (scores.size() != positives.size()) throw ShapeError("average_precision: size mismatch");
    std::size_t num_pos = 0;
    for (std::uint8_t p : positives) num_pos += p;
    if (num_pos == 0) return 0.0;
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    double ap = 0.0;
    std::size_t seen_pos = 0;
    for (std::size_t rank = 0; rank < idx.size(); ++rank) {
        if (positives[idx[rank]]) {
            ++seen_pos;
            ap += static_cast<double>(seen_pos) / static_cast<double>(rank + 1);
        }
    }
    return ap / static_cast<double>(num_pos);
}

double mean_average_precision(const std::vector<Tensor>& scores,
                              const std::vector<std::vector<std::uint8_t>>& positives_per_class,
                              std::vector<std::size_t>* zero_positive_classes) {
    if (positives_per_class.empty()) throw InvalidArgumentError("mean_average_precision: no classes");
    double sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t c = 0; c < positives_per_class.size(); ++c) {
        const auto& pos = positives_per_class[c];
        std::size_t num_pos = 0;
        for (std::uint8_t p : pos) num_pos += p;
        if (num_pos == 0) {
            if (zero_positive_classes) zero_positive_classes->push_back(c);
            continue;
        }
        std::vector<double> col(scores.size());
        for (std::size_t i = 0; i < scores.size(); ++i) col[i] = scores[i].data[c];
        sum += average_precision(col, pos);
        ++counted;
    }
    return counted == 0 ? 0.0 : sum / static_cast<double>(counted);
}

Tensor matching_stats(Model& model, const std::vector<Episode>& episodes, std::size_t num_atomic,
                      std::vector<std::size_t>* absent_actions) {
    if (episodes.empty()) throw InvalidArgumentError("matching_stats: empty episode set");
    const std::size_t classes = model.num_labels();
    Tensor sums = Tensor::zeros({num_atomic, classes});
    std::vector<double> counts(num_atomic, 0.0);
    for (const Episode& ep : episodes) {
        const Tensor frames = model.frame_embedding_values(ep);
        const Tensor bank = model.text_bank_values(ep);
        for (std::size_t l = 0; l < frames.shape[0]; ++l) {
            const std::size_t a = ep.frame_atomics[l];
            counts[a] += 1.0;
            for (std::size_t c = 0; c < classes; ++c) {
                double dot = 0.0;
                for (std::size_t d = 0; d < frames.shape[1]; ++d) dot += frames(l, d) * bank(c, d);
                sums(a, c) += dot;
            }
        }
    }
    Tensor out = Tensor::zeros({num_atomic, classes});
    for (std::size_t a = 0; a < num_atomic; ++a) {
        if (counts[a] == 0.0) {
            if (absent_actions) absent_actions->push_back(a);
            continue;
        }
        Tensor row = Tensor::zeros({classes});
        for (std::size_t c = 0; c < classes; ++c) row.data[c] = sums(a, c) / counts[a];
        Tensor soft = softmax_temp(row, 1.0, 0);
        for (std::size_t c = 0; c < classes; ++c) out(a, c) = soft.data[c];
    }
    return out;
}

Tensor coclassification(Model& model, const std::vector<Episode>& episodes,
                        std::vector<std::size_t>* never_predicted, double threshold) {
    if (model.config().mode != LabelMode::multi_label) {
        throw InvalidArgumentError("coclassification: requires a multi-label model");
    }
    const std::size_t actions = model.num_labels();
    Tensor joint = Tensor::zeros({actions, actions});
    std::vector<double> predicted(actions, 0.0);
    for (const Episode& ep : episodes) {
        const Tensor s = model.scores(ep);
        std::vector<std::size_t> on;
        for (std::size_t a = 0; a < actions; ++a) {
            if (s.data[a] >= threshold) on.push_back(a);
        }
        for (std::size_t j : on) {
            predicted[j] += 1.0;
            for (std::size_t i : on) joint(i, j) += 1.0;
        }
    }
    for (std::size_t j = 0; j < actions; ++j) {
        if (predicted[j] == 0.0) {
            if (never_predicted) never_predicted->push_back(j);
            continue;
        }
        for (std::size_t i = 0; i < actions; ++i) joint(i, j) /= predicted[j];
    }
    return joint;
}

MetricsReport evaluate(Model& model, const std::vector<Episode>& episodes, const WorldSpec& spec) {
    if (episodes.empty()) throw InvalidArgumentError("evaluate: empty evaluation set");
    MetricsReport report;
    report.mode = model.config().mode;

    std::vector<Tensor> scores;
    scores.reserve(episodes.size());
    for (const Episode& ep : episodes) scores.push_back(model.scores(ep));

    report.cooccurrence = cooccurrence_matrix(episodes, spec.num_atomic);

    if (report.mode == LabelMode::single_label) {
        std::vector<std::size_t> labels;
        labels.reserve(episodes.size());
        for (const Episode& ep : episodes) labels.push_back(ep.y);
        report.acc_at_1 = accuracy_at_k(scores, labels, 1);
        report.acc_at_5 = accuracy_at_k(scores, labels, 5);
        std::vector<std::vector<std::uint8_t>> positives(model.num_labels());
        for (std::size_t c = 0; c < positives.size(); ++c) {
            positives[c].resize(episodes.size());
            for (std::size_t i = 0; i < episodes.size(); ++i) positives[c][i] = episodes[i].y == c;
        }
        report.map = mean_average_precision(scores, positives, &report.zero_positive_classes);
        report.matching = matching_stats(model, episodes, spec.num_atomic);
    } else {
        // Top-k accuracy against the atomic multi-hot: a hit when the best
        // ranked action is a true positive.
        std::size_t hits1 = 0, hits5 = 0;
        for (std::size_t i = 0; i < episodes.size(); ++i) {
            const Tensor& s = scores[i];
            std::vector<std::size_t> idx(s.data.size());
            std::iota(idx.begin(), idx.end(), 0);
            std::stable_sort(idx.begin(), idx.end(),
                             [&](std::size_t a, std::size_t b) { return s.data[a] > s.data[b]; });
            if (episodes[i].atomic_labels[idx[0]]) ++hits1;
            const std::size_t kk = std::min<std::size_t>(5, idx.size());
            for (std::size_t r = 0; r < kk; ++r) {
                if (episodes[i].atomic_labels[idx[r]]) {
                    ++hits5;
                    break;
                }
            }
        }
        report.acc_at_1 = static_cast<double>(hits1) / static_cast<double>(episodes.size());
        report.acc_at_5 = static_cast<double>(hits5) / static_cast<double>(episodes.size());
        std::vector<std::vector<std::uint8_t>> positives(model.num_labels());
        for (std::size_t c = 0; c < positives.size(); ++c) {
            positives[c].resize(episodes.size());
            for (std::size_t i = 0; i < episodes.size(); ++i) positives[c][i] = episodes[i].atomic_labels[c];
        }
        report.map = mean_average_precision(scores, positives, &report.zero_positive_classes);
        report.coclassification = coclassification(model, episodes, &report.never_predicted);
    }
    report.split_hash = episodes_hash(episodes);
    return report;
}

std::uint64_t episodes_hash(const std::vector<Episode>& episodes) {
    // FNV-1a over the episode contents, order sensitive.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&](const void* data, std::size_t bytes) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < bytes; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ULL;
        }
    };
    const std::size_t n = episodes.size();
    mix(&n, sizeof(n));
    for (const Episode& ep : episodes) {
        mix(&ep.y, sizeof(ep.y));
        mix(&ep.confounder_id, sizeof(ep.confounder_id));
        mix(ep.frame_atomics.data(), ep.frame_atomics.size() * sizeof(std::size_t));
        mix(ep.atomic_labels.data(), ep.atomic_labels.size());
        mix(ep.v.data.data(), ep.v.data.size() * sizeof(double));
        mix(ep.v_p.data.data(), ep.v_p.data.size() * sizeof(double));
    }
    return h;
}

} // namespace dcl
