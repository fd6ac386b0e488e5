#include "dualcausal/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "dualcausal/errors.hpp"
#include "dualcausal/jsonio.hpp"

namespace dcl {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

void normalize_rows(Tensor& m) {
    const std::size_t rows = m.shape[0], cols = m.shape[1];
    for (std::size_t r = 0; r < rows; ++r) {
        double norm = 0.0;
        for (std::size_t c = 0; c < cols; ++c) norm += m(r, c) * m(r, c);
        norm = std::sqrt(norm);
        if (norm == 0.0) throw NumericError("build_world: zero prototype row");
        for (std::size_t c = 0; c < cols; ++c) m(r, c) /= norm;
    }
}

// Random linear extension of the class's order rules: Kahn's algorithm with
// a uniform pick among currently available tokens. Rejection-free.
std::vector<std::size_t> shuffled_tokens(const WorldSpec& spec, std::size_t cls, Rng& rng) {
    std::map<std::size_t, std::size_t> remaining;
    for (std::size_t a : spec.cooccur_rules[cls]) ++remaining[a];

    std::set<std::pair<std::size_t, std::size_t>> edges;
    for (const OrderRule& rule : spec.order_rules) {
        if (rule.cls == cls) edges.insert({rule.before, rule.after});
    }
    std::map<std::size_t, std::vector<std::size_t>> successors;
    std::map<std::size_t, std::size_t> indegree;
    for (const auto& [type, cnt] : remaining) indegree[type] = 0;
    for (const auto& [a, b] : edges) {
        successors[a].push_back(b);
        ++indegree[b];
    }

    std::vector<std::size_t> seq;
    seq.reserve(spec.cooccur_rules[cls].size());
    while (!remaining.empty()) {
        std::size_t total_avail = 0;
        for (const auto& [type, cnt] : remaining) {
            if (indegree[type] == 0) total_avail += cnt;
        }
        if (total_avail == 0) {
            throw GenerationError("sample_episode: cyclic order rules for class " + std::to_string(cls));
        }
        std::size_t pick = rng.uniform_index(total_avail);
        std::size_t chosen = 0;
        for (const auto& [type, cnt] : remaining) {
            if (indegree[type] != 0) continue;
            if (pick < cnt) {
                chosen = type;
                break;
            }
            pick -= cnt;
        }
        seq.push_back(chosen);
        if (--remaining[chosen] == 0) {
            remaining.erase(chosen);
            for (std::size_t b : successors[chosen]) --indegree[b];
        }
    }
    return seq;
}

} // namespace

void WorldSpec::validate() const {
    auto fail = [](const std::string& rule) { throw SpecValidationError("world spec: " + rule); };
    if (num_classes < 1 || num_atomic < 1 || frames_per_episode < 1 || feature_dim < 1) {
        fail("num_classes, num_atomic, frames_per_episode, feature_dim must all be >= 1");
    }
    if (!exclusive_owner.empty() && exclusive_owner.size() != num_atomic) {
        fail("exclusive_owner must list one entry per atomic action");
    }
    if (cooccur_rules.size() != num_classes) {
        fail("cooccur_rules must list one multiset per class");
    }
    for (std::size_t c = 0; c < num_classes; ++c) {
        if (cooccur_rules[c].empty()) fail("class " + std::to_string(c) + " has an empty cooccur multiset");
        for (std::size_t a : cooccur_rules[c]) {
            if (a >= num_atomic) fail("class " + std::to_string(c) + " references atomic " + std::to_string(a) + " out of range");
        }
    }
    for (std::size_t a = 0; a < exclusive_owner.size(); ++a) {
        const int owner = exclusive_owner[a];
        if (owner < -1 || owner >= static_cast<int>(num_classes)) {
            fail("exclusive_owner[" + std::to_string(a) + "] out of range");
        }
        if (owner < 0) continue;
        std::size_t appearances = 0;
        for (std::size_t c = 0; c < num_classes; ++c) {
            const auto& ms = cooccur_rules[c];
            if (std::find(ms.begin(), ms.end(), a) != ms.end()) {
                ++appearances;
                if (c != static_cast<std::size_t>(owner)) {
                    fail("exclusive atomic " + std::to_string(a) + " appears in class " +
                         std::to_string(c) + " but is owned by class " + std::to_string(owner));
                }
            }
        }
        if (appearances != 1) {
            fail("exclusive atomic " + std::to_string(a) + " must appear in exactly one class's cooccur_rules");
        }
    }
    for (const OrderRule& r : order_rules) {
        if (r.cls >= num_classes) fail("order rule references class " + std::to_string(r.cls) + " out of range");
        if (r.before == r.after) fail("order rule with identical before/after atomic " + std::to_string(r.before));
        const auto& ms = cooccur_rules[r.cls];
        for (std::size_t a : {r.before, r.after}) {
            if (std::find(ms.begin(), ms.end(), a) == ms.end()) {
                fail("order rule for class " + std::to_string(r.cls) + " references atomic " +
                     std::to_string(a) + " absent from its cooccur_rules");
            }
        }
    }
    std::set<std::size_t> conf_seen;
    for (const ConfounderAction& ca : confounder_actions) {
        if (ca.atomic >= num_atomic) fail("confounder action atomic out of range");
        if (ca.spurious_class >= num_classes) fail("confounder action spurious_class out of range");
        if (!conf_seen.insert(ca.atomic).second) {
            fail("atomic " + std::to_string(ca.atomic) + " listed twice in confounder_actions");
        }
        for (std::size_t c = 0; c < num_classes; ++c) {
            const auto& ms = cooccur_rules[c];
            if (std::find(ms.begin(), ms.end(), ca.atomic) != ms.end()) {
                fail("confounder atomic " + std::to_string(ca.atomic) +
                     " must not appear in any cooccur_rules (it is noncausal)");
            }
        }
    }
    if (bias_strength < 0 || confounder_strength < 0 || noise_sigma < 0) {
        fail("bias_strength, confounder_strength, noise_sigma must be nonnegative");
    }
    if (num_confounders < 1) fail("num_confounders must be >= 1");
    if (confounder_prob < 0 || confounder_prob > 1) fail("confounder_prob must be in [0,1]");
    if (confounder_class_corr < 0 || confounder_class_corr > 1) fail("confounder_class_corr must be in [0,1]");
}

World build_world(const WorldSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    World w;
    w.spec = spec;

    w.atomic_prototypes = Tensor::zeros({spec.num_atomic, spec.feature_dim});
    for (double& v : w.atomic_prototypes.data) v = rng.normal();
    normalize_rows(w.atomic_prototypes);

    w.confounder_offsets = Tensor::zeros({spec.num_confounders, spec.feature_dim});
    for (double& v : w.confounder_offsets.data) v = rng.normal();
    normalize_rows(w.confounder_offsets);

    // Class text prototypes live in the same embedding space as the atomic
    // prototypes: the unit mean of the class's atomic content.
    w.class_text_prototypes = Tensor::zeros({spec.num_classes, spec.feature_dim});
    for (std::size_t c = 0; c < spec.num_classes; ++c) {
        for (std::size_t a : spec.cooccur_rules[c]) {
            for (std::size_t d = 0; d < spec.feature_dim; ++d) {
                w.class_text_prototypes(c, d) += w.atomic_prototypes(a, d);
            }
        }
    }
    normalize_rows(w.class_text_prototypes);
    w.bias_directions = w.class_text_prototypes;
    return w;
}

Episode sample_episode(const World& world, Rng& rng) {
    const WorldSpec& spec = world.spec;
    Episode ep;
    ep.y = rng.uniform_index(spec.num_classes);

    std::vector<std::size_t> seq = shuffled_tokens(spec, ep.y, rng);
    for (const ConfounderAction& ca : spec.confounder_actions) {
        if (rng.uniform() < spec.confounder_prob) {
            const std::size_t pos = rng.uniform_index(seq.size() + 1);
            seq.insert(seq.begin() + static_cast<std::ptrdiff_t>(pos), ca.atomic);
        }
    }
    const std::size_t L = spec.frames_per_episode;
    if (seq.size() > L) {
        throw GenerationError("sample_episode: " + std::to_string(seq.size()) +
                              " tokens exceed frames_per_episode " + std::to_string(L));
    }

    ep.frame_atomics.resize(L);
    for (std::size_t l = 0; l < L; ++l) ep.frame_atomics[l] = seq[l * seq.size() / L];

    ep.confounder_id = rng.uniform() < spec.confounder_class_corr
                           ? ep.y % spec.num_confounders
                           : rng.uniform_index(spec.num_confounders);

    std::map<std::size_t, std::size_t> spurious;
    for (const ConfounderAction& ca : spec.confounder_actions) spurious[ca.atomic] = ca.spurious_class;

    const std::size_t D = spec.feature_dim;
    ep.v = Tensor::zeros({L, D});
    ep.v_p = Tensor::zeros({L, D});
    for (std::size_t l = 0; l < L; ++l) {
        const std::size_t a = ep.frame_atomics[l];
        for (std::size_t d = 0; d < D; ++d) {
            ep.v(l, d) = world.atomic_prototypes(a, d) +
                         spec.confounder_strength * world.confounder_offsets(ep.confounder_id, d) +
                         spec.noise_sigma * rng.normal();
        }
        const auto spur = spurious.find(a);
        for (std::size_t d = 0; d < D; ++d) {
            double bias = 0.0;
            if (spur != spurious.end()) {
                bias = spec.bias_strength * world.bias_directions(spur->second, d);
            }
            ep.v_p(l, d) = world.atomic_prototypes(a, d) + bias + spec.noise_sigma * rng.normal();
        }
    }

    ep.atomic_labels.assign(spec.num_atomic, 0);
    for (std::size_t a : ep.frame_atomics) ep.atomic_labels[a] = 1;
    return ep;
}

std::vector<Episode> sample_episodes(const World& world, std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Episode> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(sample_episode(world, rng));
    return out;
}

Tensor cooccurrence_matrix(const std::vector<Episode>& episodes, std::size_t num_atomic) {
    if (num_atomic == 0) throw InvalidArgumentError("cooccurrence_matrix: empty atomic vocabulary");
    std::vector<double> contains(num_atomic, 0.0);
    Tensor both = Tensor::zeros({num_atomic, num_atomic});
    for (const Episode& ep : episodes) {
        for (std::size_t i = 0; i < num_atomic; ++i) {
            if (!ep.atomic_labels[i]) continue;
            contains[i] += 1.0;
            for (std::size_t j = 0; j < num_atomic; ++j) {
                if (ep.atomic_labels[j]) both(i, j) += 1.0;
            }
        }
    }
    for (std::size_t i = 0; i < num_atomic; ++i) {
        if (contains[i] == 0.0) continue;
        for (std::size_t j = 0; j < num_atomic; ++j) both(i, j) /= contains[i];
    }
    return both;
}

namespace {

ordered_json spec_to_ordered_json(const WorldSpec& spec) {
    ordered_json j;
    j["num_classes"] = spec.num_classes;
    j["num_atomic"] = spec.num_atomic;
    j["frames_per_episode"] = spec.frames_per_episode;
    j["feature_dim"] = spec.feature_dim;
    j["exclusive_owner"] = spec.exclusive_owner;
    ordered_json rules = ordered_json::array();
    for (const OrderRule& r : spec.order_rules) {
        rules.push_back(ordered_json{{"class", r.cls}, {"before", r.before}, {"after", r.after}});
    }
    j["order_rules"] = rules;
    j["cooccur_rules"] = spec.cooccur_rules;
    ordered_json confs = ordered_json::array();
    for (const ConfounderAction& c : spec.confounder_actions) {
        confs.push_back(ordered_json{{"atomic", c.atomic}, {"spurious_class", c.spurious_class}});
    }
    j["confounder_actions"] = confs;
    j["bias_strength"] = spec.bias_strength;
    j["confounder_strength"] = spec.confounder_strength;
    j["noise_sigma"] = spec.noise_sigma;
    j["num_confounders"] = spec.num_confounders;
    j["confounder_prob"] = spec.confounder_prob;
    j["confounder_class_corr"] = spec.confounder_class_corr;
    j["seed"] = spec.seed;
    return j;
}

ordered_json episode_to_json(const Episode& ep) {
    ordered_json j;
    j["y"] = ep.y;
    j["confounder_id"] = ep.confounder_id;
    j["frame_atomics"] = ep.frame_atomics;
    std::vector<int> labels(ep.atomic_labels.begin(), ep.atomic_labels.end());
    j["atomic_labels"] = labels;
    auto matrix = [](const Tensor& t) {
        ordered_json rows = ordered_json::array();
        for (std::size_t r = 0; r < t.shape[0]; ++r) {
            ordered_json row = ordered_json::array();
            for (std::size_t c = 0; c < t.shape[1]; ++c) row.push_back(t(r, c));
            rows.push_back(std::move(row));
        }
        return rows;
    };
    j["v_p"] = matrix(ep.v_p);
    j["v"] = matrix(ep.v);
    return j;
}

template <class J>
Tensor parse_matrix(const J& rows, std::size_t want_rows, std::size_t want_cols,
                    const std::string& field) {
    if (!rows.is_array() || rows.size() != want_rows) {
        throw ParseError("dataset: " + field + " has " + std::to_string(rows.size()) +
                         " rows, header says " + std::to_string(want_rows));
    }
    Tensor t = Tensor::zeros({want_rows, want_cols});
    for (std::size_t r = 0; r < want_rows; ++r) {
        const auto& row = rows[r];
        if (!row.is_array() || row.size() != want_cols) {
            throw ParseError("dataset: " + field + " row " + std::to_string(r) + " has " +
                             std::to_string(row.size()) + " values, header feature_dim is " +
                             std::to_string(want_cols));
        }
        for (std::size_t c = 0; c < want_cols; ++c) {
            if (!row[c].is_number()) throw ParseError("dataset: " + field + " holds a non-numeric entry");
            t(r, c) = row[c].template get<double>();
        }
    }
    return t;
}

} // namespace

void export_dataset(const std::vector<Episode>& episodes, const WorldSpec& spec,
                    const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("export_dataset: cannot open " + path + " for writing");
    ordered_json doc;
    ordered_json header;
    header["num_classes"] = spec.num_classes;
    header["num_atomic"] = spec.num_atomic;
    header["frames_per_episode"] = spec.frames_per_episode;
    header["feature_dim"] = spec.feature_dim;
    header["num_episodes"] = episodes.size();
    header["spec"] = spec_to_ordered_json(spec);
    doc["header"] = std::move(header);
    ordered_json eps = ordered_json::array();
    for (const Episode& ep : episodes) eps.push_back(episode_to_json(ep));
    doc["episodes"] = std::move(eps);
    jsonio::dump(doc, out);
    out << '\n';
    if (!out.good()) throw IoError("export_dataset: write failure on " + path);
}

Dataset import_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("import_dataset: cannot open " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("dataset: ") + e.what());
    }
    if (!doc.contains("header") || !doc.contains("episodes")) {
        throw ParseError("dataset: missing header or episodes section");
    }
    const json& header = doc["header"];
    for (const char* key : {"num_classes", "num_atomic", "frames_per_episode", "feature_dim",
                            "num_episodes", "spec"}) {
        if (!header.contains(key)) throw ParseError(std::string("dataset: header missing field ") + key);
    }
    Dataset ds;
    ds.spec = world_spec_from_json(header["spec"]);
    const std::size_t C = header["num_classes"].get<std::size_t>();
    const std::size_t A = header["num_atomic"].get<std::size_t>();
    const std::size_t L = header["frames_per_episode"].get<std::size_t>();
    const std::size_t D = header["feature_dim"].get<std::size_t>();
    if (C != ds.spec.num_classes || A != ds.spec.num_atomic || L != ds.spec.frames_per_episode ||
        D != ds.spec.feature_dim) {
        throw ParseError("dataset: header counts disagree with the embedded spec");
    }
    const json& eps = doc["episodes"];
    if (!eps.is_array()) throw ParseError("dataset: episodes must be an array");
    if (eps.size() != header["num_episodes"].get<std::size_t>()) {
        throw ParseError("dataset: header.num_episodes says " +
                         std::to_string(header["num_episodes"].get<std::size_t>()) + " but " +
                         std::to_string(eps.size()) + " episodes present");
    }
    for (std::size_t i = 0; i < eps.size(); ++i) {
        const json& e = eps[i];
        const std::string where = "episodes[" + std::to_string(i) + "]";
        for (const char* key : {"y", "confounder_id", "frame_atomics", "atomic_labels", "v_p", "v"}) {
            if (!e.contains(key)) throw ParseError("dataset: " + where + " missing field " + key);
        }
        Episode ep;
        ep.y = e["y"].get<std::size_t>();
        if (ep.y >= C) throw ParseError("dataset: " + where + ".y out of range");
        ep.confounder_id = e["confounder_id"].get<std::size_t>();
        if (ep.confounder_id >= ds.spec.num_confounders) {
            throw ParseError("dataset: " + where + ".confounder_id out of range");
        }
        ep.frame_atomics = e["frame_atomics"].get<std::vector<std::size_t>>();
        if (ep.frame_atomics.size() != L) {
            throw ParseError("dataset: " + where + ".frame_atomics length " +
                             std::to_string(ep.frame_atomics.size()) + ", header frames_per_episode is " +
                             std::to_string(L));
        }
        for (std::size_t a : ep.frame_atomics) {
            if (a >= A) throw ParseError("dataset: " + where + ".frame_atomics references atomic out of range");
        }
        const auto labels = e["atomic_labels"].get<std::vector<int>>();
        if (labels.size() != A) {
            throw ParseError("dataset: " + where + ".atomic_labels length mismatch with num_atomic");
        }
        ep.atomic_labels.assign(A, 0);
        for (std::size_t a = 0; a < A; ++a) {
            if (labels[a] != 0 && labels[a] != 1) {
                throw ParseError("dataset: " + where + ".atomic_labels must be 0/1");
            }
            ep.atomic_labels[a] = static_cast<std::uint8_t>(labels[a]);
        }
        std::vector<std::uint8_t> derived(A, 0);
        for (std::size_t a : ep.frame_atomics) derived[a] = 1;
        if (derived != ep.atomic_labels) {
            throw ParseError("dataset: " + where + ".atomic_labels inconsistent with frame_atomics");
        }
        ep.v_p = parse_matrix(e["v_p"], L, D, where + ".v_p");
        ep.v = parse_matrix(e["v"], L, D, where + ".v");
        ds.episodes.push_back(std::move(ep));
    }
    return ds;
}

nlohmann::json world_spec_to_json(const WorldSpec& spec) {
    return json::parse(spec_to_ordered_json(spec).dump());
}

WorldSpec world_spec_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("world spec: expected an object");
    static const std::set<std::string> known{
        "num_classes", "num_atomic", "frames_per_episode", "feature_dim", "exclusive_owner",
        "order_rules", "cooccur_rules", "confounder_actions", "bias_strength",
        "confounder_strength", "noise_sigma", "num_confounders", "confounder_prob",
        "confounder_class_corr", "seed"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.count(it.key())) throw ValidationError("world spec: unknown key \"" + it.key() + "\"");
    }
    WorldSpec spec;
    spec.exclusive_owner.clear();
    spec.cooccur_rules.clear();
    auto get_uint = [&](const char* key, std::size_t& out) {
        if (!j.contains(key)) return;
        if (!j[key].is_number_unsigned()) {
            throw ValidationError(std::string("world spec: field \"") + key + "\" must be a nonnegative integer");
        }
        out = j[key].get<std::size_t>();
    };
    auto get_double = [&](const char* key, double& out) {
        if (!j.contains(key)) return;
        if (!j[key].is_number()) {
            throw ValidationError(std::string("world spec: field \"") + key + "\" must be a number");
        }
        out = j[key].get<double>();
    };
    get_uint("num_classes", spec.num_classes);
    get_uint("num_atomic", spec.num_atomic);
    get_uint("frames_per_episode", spec.frames_per_episode);
    get_uint("feature_dim", spec.feature_dim);
    get_uint("num_confounders", spec.num_confounders);
    get_double("bias_strength", spec.bias_strength);
    get_double("confounder_strength", spec.confounder_strength);
    get_double("noise_sigma", spec.noise_sigma);
    get_double("confounder_prob", spec.confounder_prob);
    get_double("confounder_class_corr", spec.confounder_class_corr);
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) throw ValidationError("world spec: field \"seed\" must be a nonnegative integer");
        spec.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("exclusive_owner")) {
        if (!j["exclusive_owner"].is_array()) throw ValidationError("world spec: field \"exclusive_owner\" must be an array");
        spec.exclusive_owner = j["exclusive_owner"].get<std::vector<int>>();
    }
    if (j.contains("cooccur_rules")) {
        if (!j["cooccur_rules"].is_array()) throw ValidationError("world spec: field \"cooccur_rules\" must be an array of arrays");
        spec.cooccur_rules = j["cooccur_rules"].get<std::vector<std::vector<std::size_t>>>();
    }
    if (j.contains("order_rules")) {
        if (!j["order_rules"].is_array()) throw ValidationError("world spec: field \"order_rules\" must be an array");
        for (const auto& r : j["order_rules"]) {
            static const std::set<std::string> rule_keys{"class", "before", "after"};
            for (auto it = r.begin(); it != r.end(); ++it) {
                if (!rule_keys.count(it.key())) throw ValidationError("world spec: unknown key \"" + it.key() + "\" in order rule");
            }
            OrderRule rule;
            rule.cls = r.at("class").get<std::size_t>();
            rule.before = r.at("before").get<std::size_t>();
            rule.after = r.at("after").get<std::size_t>();
            spec.order_rules.push_back(rule);
        }
    }
    if (j.contains("confounder_actions")) {
        if (!j["confounder_actions"].is_array()) throw ValidationError("world spec: field \"confounder_actions\" must be an array");
        for (const auto& r : j["confounder_actions"]) {
            static const std::set<std::string> conf_keys{"atomic", "spurious_class"};
            for (auto it = r.begin(); it != r.end(); ++it) {
                if (!conf_keys.count(it.key())) throw ValidationError("world spec: unknown key \"" + it.key() + "\" in confounder action");
            }
            ConfounderAction ca;
            ca.atomic = r.at("atomic").get<std::size_t>();
            ca.spurious_class = r.at("spurious_class").get<std::size_t>();
            spec.confounder_actions.push_back(ca);
        }
    }
    spec.validate();
    return spec;
}

WorldSpec load_world_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_world_spec: cannot open " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("world spec: ") + e.what());
    }
    return world_spec_from_json(doc);
}

} // namespace dcl
