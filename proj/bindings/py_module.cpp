#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "dualcausal/ablation.hpp"
#include "dualcausal/config.hpp"
#include "dualcausal/errors.hpp"
#include "dualcausal/scm.hpp"
#include "dualcausal/tensor.hpp"

namespace py = pybind11;
using namespace dcl;

namespace {

py::array_t<double> to_numpy(const Tensor& t) {
    std::vector<py::ssize_t> shape(t.shape.begin(), t.shape.end());
    py::array_t<double> out(shape);
    std::copy(t.data.begin(), t.data.end(), out.mutable_data());
    return out;
}

Tensor from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    std::vector<std::size_t> shape(a.ndim());
    for (py::ssize_t i = 0; i < a.ndim(); ++i) shape[i] = static_cast<std::size_t>(a.shape(i));
    std::vector<double> data(a.data(), a.data() + a.size());
    return Tensor::from(std::move(shape), std::move(data));
}

scm::Evidence evidence_from_dict(const py::dict& d) {
    scm::Evidence e = scm::no_evidence();
    for (auto item : d) {
        const std::string name = py::cast<std::string>(item.first);
        const auto& names = scm::var_names();
        bool found = false;
        for (std::size_t i = 0; i < scm::kNumVars; ++i) {
            if (names[i] == name) {
                e[i] = py::cast<int>(item.second);
                found = true;
            }
        }
        if (!found) throw InvalidArgumentError("unknown SCM variable '" + name + "'");
    }
    return e;
}

py::dict episode_to_dict(const Episode& ep) {
    py::dict d;
    d["y"] = ep.y;
    d["confounder_id"] = ep.confounder_id;
    d["frame_atomics"] = ep.frame_atomics;
    std::vector<int> labels(ep.atomic_labels.begin(), ep.atomic_labels.end());
    d["atomic_labels"] = labels;
    d["v"] = to_numpy(ep.v);
    d["v_p"] = to_numpy(ep.v_p);
    return d;
}

py::dict report_to_dict(const MetricsReport& r) {
    py::dict d;
    d["acc1"] = r.acc_at_1;
    d["acc5"] = r.acc_at_5;
    d["map"] = r.map;
    d["loss_curve"] = r.loss_curve;
    d["cooccurrence"] = to_numpy(r.cooccurrence);
    if (r.mode == LabelMode::single_label) {
        d["matching"] = to_numpy(r.matching);
    } else {
        d["coclassification"] = to_numpy(r.coclassification);
    }
    return d;
}

TrainConfig train_config_from_string(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("train config: ") + e.what());
    }
    return train_config_from_json(doc);
}

} // namespace

PYBIND11_MODULE(dualcausal, m) {
    m.doc() = "Synthetic long-term action recognition lab with textual back-door and visual "
              "front-door causal interventions, exact discrete-SCM oracles, and a trainable "
              "cross-modal classifier.";

    py::register_exception<Error>(m, "Error");

    m.def(
        "softmax_temp",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x, double tau,
           std::size_t axis) { return to_numpy(softmax_temp(from_numpy(x), tau, axis)); },
        py::arg("x"), py::arg("tau") = 1.0, py::arg("axis") = 0,
        "Temperature softmax along an axis; every slice sums to 1.");

    m.def(
        "layer_norm",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& gain,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& bias, double eps) {
            return to_numpy(layer_norm(from_numpy(x), from_numpy(gain), from_numpy(bias), eps));
        },
        py::arg("x"), py::arg("gain"), py::arg("bias"), py::arg("eps") = 1e-5,
        "Normalize the last axis to zero mean / unit variance, then scale and shift.");

    py::class_<scm::DiscreteScm>(m, "Scm", "Discrete structural causal model over {B,Z,V,T,M,Y}.")
        .def_static("from_file", &scm::load_scm_file, py::arg("path"))
        .def_static("from_json", &scm::load_scm_json, py::arg("text"))
        .def("to_json", &scm::scm_to_json)
        .def("condition",
             [](const scm::DiscreteScm& s, const std::string& target, const py::dict& evidence) {
                 const auto& names = scm::var_names();
                 for (std::size_t i = 0; i < scm::kNumVars; ++i) {
                     if (names[i] == target) return scm::condition(s, i, evidence_from_dict(evidence)).p;
                 }
                 throw InvalidArgumentError("unknown SCM variable '" + target + "'");
             },
             py::arg("target"), py::arg("evidence"),
             "Exact conditional P(target | evidence) by joint enumeration.")
        .def("observational",
             [](const scm::DiscreteScm& s, std::size_t v, std::size_t t) {
                 return scm::observational(s, v, t).p;
             },
             py::arg("v"), py::arg("t"))
        .def("do_t_backdoor",
             [](const scm::DiscreteScm& s, std::size_t v, std::size_t t) {
                 return scm::do_t_backdoor(s, v, t).p;
             },
             py::arg("v"), py::arg("t"))
        .def("do_t_backdoor_marginal",
             [](const scm::DiscreteScm& s, std::size_t t) { return scm::do_t_backdoor_marginal(s, t).p; },
             py::arg("t"))
        .def("do_v_frontdoor",
             [](const scm::DiscreteScm& s, std::size_t v) { return scm::do_v_frontdoor(s, v).p; },
             py::arg("v"))
        .def("surgery_truth",
             [](const scm::DiscreteScm& s, const std::string& var, std::size_t value,
                const std::string& target, const py::dict& evidence) {
                 const auto& names = scm::var_names();
                 std::size_t var_id = scm::kNumVars, target_id = scm::kNumVars;
                 for (std::size_t i = 0; i < scm::kNumVars; ++i) {
                     if (names[i] == var) var_id = i;
                     if (names[i] == target) target_id = i;
                 }
                 if (var_id == scm::kNumVars || target_id == scm::kNumVars) {
                     throw InvalidArgumentError("unknown SCM variable name");
                 }
                 return scm::surgery_truth(s, var_id, value, target_id, evidence_from_dict(evidence)).p;
             },
             py::arg("var"), py::arg("value"), py::arg("target"),
             py::arg("evidence") = py::dict());

    py::class_<WorldSpec>(m, "WorldSpec", "Configuration of a synthetic confounded world.")
        .def_static("from_file", &load_world_spec, py::arg("path"))
        .def_static("from_json",
                    [](const std::string& text) {
                        nlohmann::json doc;
                        try {
                            doc = nlohmann::json::parse(text);
                        } catch (const nlohmann::json::parse_error& e) {
                            throw ParseError(std::string("world spec: ") + e.what());
                        }
                        return world_spec_from_json(doc);
                    },
                    py::arg("text"))
        .def("to_json", [](const WorldSpec& s) { return world_spec_to_json(s).dump(2); })
        .def_readonly("num_classes", &WorldSpec::num_classes)
        .def_readonly("num_atomic", &WorldSpec::num_atomic)
        .def_readonly("frames_per_episode", &WorldSpec::frames_per_episode)
        .def_readonly("feature_dim", &WorldSpec::feature_dim)
        .def_readonly("bias_strength", &WorldSpec::bias_strength)
        .def_readonly("confounder_strength", &WorldSpec::confounder_strength)
        .def_readonly("noise_sigma", &WorldSpec::noise_sigma)
        .def_readonly("seed", &WorldSpec::seed);

    py::class_<World>(m, "World", "Immutable realization of a world spec.")
        .def_readonly("spec", &World::spec)
        .def_property_readonly("atomic_prototypes",
                               [](const World& w) { return to_numpy(w.atomic_prototypes); })
        .def_property_readonly("class_text_prototypes",
                               [](const World& w) { return to_numpy(w.class_text_prototypes); })
        .def_property_readonly("confounder_offsets",
                               [](const World& w) { return to_numpy(w.confounder_offsets); })
        .def_property_readonly("bias_directions",
                               [](const World& w) { return to_numpy(w.bias_directions); });

    m.def("build_world", &build_world, py::arg("spec"));

    m.def(
        "sample_episodes",
        [](const World& w, std::size_t count, std::uint64_t seed) {
            py::list out;
            for (const Episode& ep : sample_episodes(w, count, seed)) out.append(episode_to_dict(ep));
            return out;
        },
        py::arg("world"), py::arg("count"), py::arg("seed"),
        "Deterministic episode stream; each episode is a dict with numpy feature channels.");

    m.def(
        "cooccurrence_matrix",
        [](const World& w, std::size_t count, std::uint64_t seed) {
            return to_numpy(cooccurrence_matrix(sample_episodes(w, count, seed), w.spec.num_atomic));
        },
        py::arg("world"), py::arg("count"), py::arg("seed"));

    m.def(
        "train_and_evaluate",
        [](const World& w, const std::string& train_config_json, std::size_t train_episodes,
           std::size_t eval_episodes) {
            TrainConfig cfg = train_config_from_string(train_config_json);
            const auto all = sample_episodes(w, train_episodes + eval_episodes,
                                             cfg.seed ^ 0x5b8dcafe1234beefULL);
            const std::vector<Episode> train_set(all.begin(),
                                                 all.begin() + static_cast<std::ptrdiff_t>(train_episodes));
            const std::vector<Episode> eval_set(all.begin() + static_cast<std::ptrdiff_t>(train_episodes),
                                                all.end());
            TrainResult result = train(w, train_set, cfg);
            MetricsReport report = evaluate(*result.model, eval_set, w.spec);
            report.loss_curve = result.loss_curve;
            return report_to_dict(report);
        },
        py::arg("world"), py::arg("train_config_json"), py::arg("train_episodes"),
        py::arg("eval_episodes"),
        "Train one model on a sampled split and return its evaluation report.");

    m.def(
        "run_ablation",
        [](const World& w, const std::string& train_config_json, std::size_t train_episodes,
           std::size_t eval_episodes) {
            TrainConfig cfg = train_config_from_string(train_config_json);
            AblationResult result = run_ablation(w, cfg, train_episodes, eval_episodes);
            py::list rows;
            for (const AblationRow& r : result.rows) {
                py::dict d;
                d["variant"] = r.variant;
                d["seed"] = r.seed;
                d["acc1"] = r.acc1;
                d["acc5"] = r.acc5;
                d["map"] = r.map;
                rows.append(d);
            }
            return rows;
        },
        py::arg("world"), py::arg("train_config_json"), py::arg("train_episodes"),
        py::arg("eval_episodes"),
        "Train all four variants on one shared split; Acc from the single-label models, mAP "
        "from the multi-label models.");
}
