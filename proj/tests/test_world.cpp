#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dualcausal/errors.hpp"
#include "dualcausal/world.hpp"

using namespace dcl;

namespace {

WorldSpec demo_spec() {
    WorldSpec spec;
    spec.num_classes = 3;
    spec.num_atomic = 8;
    spec.frames_per_episode = 12;
    spec.feature_dim = 16;
    spec.exclusive_owner = {0, 0, 1, 1, 2, 2, -1, -1};
    spec.cooccur_rules = {{0, 1, 6, 7}, {2, 3, 6, 7}, {4, 5, 6}};
    spec.order_rules = {{0, 0, 1}, {1, 3, 2}, {2, 4, 5}};
    spec.noise_sigma = 0.2;
    spec.seed = 7;
    return spec;
}

std::size_t first_frame_of(const Episode& ep, std::size_t atomic) {
    for (std::size_t l = 0; l < ep.frame_atomics.size(); ++l) {
        if (ep.frame_atomics[l] == atomic) return l;
    }
    return ep.frame_atomics.size();
}

} // namespace

TEST_CASE("build_world is deterministic and rows are unit norm") {
    WorldSpec spec = demo_spec();
    World a = build_world(spec);
    World b = build_world(spec);
    CHECK(a == b);

    for (const Tensor* m : {&a.atomic_prototypes, &a.class_text_prototypes,
                            &a.confounder_offsets, &a.bias_directions}) {
        for (std::size_t r = 0; r < m->shape[0]; ++r) {
            double norm = 0.0;
            for (std::size_t c = 0; c < m->shape[1]; ++c) norm += (*m)(r, c) * (*m)(r, c);
            CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("build_world: minimal one-class one-atomic world") {
    WorldSpec spec;
    spec.num_classes = 1;
    spec.num_atomic = 1;
    spec.frames_per_episode = 4;
    spec.feature_dim = 8;
    spec.cooccur_rules = {{0}};
    World w = build_world(spec);
    double norm = 0.0;
    for (std::size_t d = 0; d < 8; ++d) norm += w.atomic_prototypes(0, d) * w.atomic_prototypes(0, d);
    CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-12);
}

TEST_CASE("spec validation names the violated rule") {
    WorldSpec spec = demo_spec();
    spec.cooccur_rules[1].push_back(0); // exclusive atomic 0 owned by class 0
    CHECK_THROWS_WITH_AS(build_world(spec), doctest::Contains("exclusive"), SpecValidationError);

    WorldSpec missing = demo_spec();
    missing.order_rules.push_back({0, 4, 5}); // atomics absent from class 0's multiset
    CHECK_THROWS_WITH_AS(build_world(missing), doctest::Contains("absent"), SpecValidationError);

    WorldSpec conf = demo_spec();
    conf.confounder_actions.push_back({0, 1}); // causal atomic cannot be a confounder
    CHECK_THROWS_WITH_AS(build_world(conf), doctest::Contains("noncausal"), SpecValidationError);
}

TEST_CASE("sampling: order rules hold in every sampled episode") {
    World w = build_world(demo_spec());
    Rng rng(123);
    int class0_seen = 0;
    for (int i = 0; i < 3000 && class0_seen < 1000; ++i) {
        Episode ep = sample_episode(w, rng);
        if (ep.y == 0) {
            ++class0_seen;
            CHECK(first_frame_of(ep, 0) < first_frame_of(ep, 1));
        } else if (ep.y == 1) {
            CHECK(first_frame_of(ep, 3) < first_frame_of(ep, 2));
        }
    }
    CHECK(class0_seen == 1000);
}

TEST_CASE("sampling: exclusive actions never leak into other classes") {
    World w = build_world(demo_spec());
    Rng rng(321);
    for (int i = 0; i < 1000; ++i) {
        Episode ep = sample_episode(w, rng);
        for (std::size_t a = 0; a < w.spec.num_atomic; ++a) {
            const int owner = w.spec.exclusive_owner[a];
            if (owner >= 0 && ep.atomic_labels[a]) CHECK(ep.y == static_cast<std::size_t>(owner));
        }
    }
}

TEST_CASE("sampling: labels are consistent with the frame assignment") {
    WorldSpec spec = demo_spec();
    spec.confounder_actions = {{6, 0}};
    // atomic 6 must leave the cooccur multisets to act as a confounder
    spec.cooccur_rules = {{0, 1, 7}, {2, 3, 7}, {4, 5, 7}};
    World w = build_world(spec);
    Rng rng(55);
    for (int i = 0; i < 500; ++i) {
        Episode ep = sample_episode(w, rng);
        std::vector<std::uint8_t> derived(w.spec.num_atomic, 0);
        for (std::size_t a : ep.frame_atomics) derived[a] = 1;
        CHECK(derived == ep.atomic_labels);
    }
}

TEST_CASE("sampling: zero bias, confounder and noise make both channels equal") {
    WorldSpec spec = demo_spec();
    spec.noise_sigma = 0.0;
    spec.confounder_actions = {};
    spec.bias_strength = 0.0;
    spec.confounder_strength = 0.0;
    World w = build_world(spec);
    Rng rng(9);
    Episode ep = sample_episode(w, rng);
    CHECK(ep.v_p == ep.v);
}

TEST_CASE("sampling: cyclic order rules raise a generation error") {
    WorldSpec spec;
    spec.num_classes = 1;
    spec.num_atomic = 2;
    spec.frames_per_episode = 4;
    spec.feature_dim = 8;
    spec.cooccur_rules = {{0, 1}};
    spec.order_rules = {{0, 0, 1}, {0, 1, 0}};
    World w = build_world(spec);
    Rng rng(1);
    CHECK_THROWS_AS(sample_episode(w, rng), GenerationError);
}

TEST_CASE("sampling: token overflow raises a generation error") {
    WorldSpec spec = demo_spec();
    spec.frames_per_episode = 2; // every class multiset holds at least 3 tokens
    World w = build_world(spec);
    Rng rng(1);
    CHECK_THROWS_AS(sample_episode(w, rng), GenerationError);
}

TEST_CASE("sampling: identical (spec, seed) yields identical episode streams") {
    World w = build_world(demo_spec());
    auto a = sample_episodes(w, 50, 99);
    auto b = sample_episodes(w, 50, 99);
    CHECK(a == b);
}

TEST_CASE("cooccurrence_matrix: edge cases") {
    Tensor empty = cooccurrence_matrix({}, 4);
    for (double v : empty.data) CHECK(v == 0.0);

    Episode ep;
    ep.atomic_labels = {1, 1, 0, 0};
    ep.frame_atomics = {0, 1};
    Tensor m = cooccurrence_matrix({ep}, 4);
    CHECK(m(0, 0) == 1.0);
    CHECK(m(0, 1) == 1.0);
    CHECK(m(1, 0) == 1.0);
    CHECK(m(1, 1) == 1.0);
    CHECK(m(2, 2) == 0.0);
}

TEST_CASE("cooccurrence: within-class exclusive pairs dominate cross-class pairs") {
    WorldSpec spec = load_world_spec(std::string(DCL_DATA_DIR) + "/world_strong_bias.json");
    World w = build_world(spec);
    auto episodes = sample_episodes(w, 600, 31);
    Tensor m = cooccurrence_matrix(episodes, spec.num_atomic);
    // classes own exclusive pairs (0,1), (2,3), (4,5), (6,7)
    for (std::size_t c = 0; c < 4; ++c) {
        const std::size_t i = 2 * c, j = 2 * c + 1;
        const double within = m(i, j);
        for (std::size_t other = 0; other < 8; ++other) {
            if (other == i || other == j) continue;
            CHECK(within > m(i, other));
        }
    }
}

TEST_CASE("bias separability: nearest-prototype on the VLM channel errs more on confounded episodes") {
    WorldSpec spec = load_world_spec(std::string(DCL_DATA_DIR) + "/world_strong_bias.json");
    spec.noise_sigma = 0.25;
    spec.bias_strength = 5.0 * spec.noise_sigma;
    spec.confounder_strength = 0.0;
    spec.confounder_prob = 1.0;
    World w = build_world(spec);
    auto episodes = sample_episodes(w, 500, 77);

    auto nearest = [&](const Tensor& frames) {
        std::vector<double> mean(spec.feature_dim, 0.0);
        for (std::size_t l = 0; l < frames.shape[0]; ++l)
            for (std::size_t d = 0; d < spec.feature_dim; ++d) mean[d] += frames(l, d);
        std::size_t best = 0;
        double best_dot = -1e300;
        for (std::size_t c = 0; c < spec.num_classes; ++c) {
            double dot = 0.0;
            for (std::size_t d = 0; d < spec.feature_dim; ++d) dot += mean[d] * w.class_text_prototypes(c, d);
            if (dot > best_dot) {
                best_dot = dot;
                best = c;
            }
        }
        return best;
    };

    std::size_t n_conf = 0, err_vp = 0, err_v = 0;
    for (const Episode& ep : episodes) {
        const bool confounded = ep.atomic_labels[10] || ep.atomic_labels[11];
        if (!confounded) continue;
        ++n_conf;
        if (nearest(ep.v_p) != ep.y) ++err_vp;
        if (nearest(ep.v) != ep.y) ++err_v;
    }
    REQUIRE(n_conf >= 400);
    CHECK(err_vp > err_v);
}

TEST_CASE("dataset: export then import round-trips exactly") {
    World w = build_world(demo_spec());
    auto episodes = sample_episodes(w, 10, 5);
    const std::string path = "roundtrip_dataset.json";
    export_dataset(episodes, w.spec, path);
    Dataset ds = import_dataset(path);
    CHECK(ds.spec == w.spec);
    CHECK(ds.episodes == episodes);
    std::remove(path.c_str());
}

TEST_CASE("dataset: truncated file raises a parse error") {
    World w = build_world(demo_spec());
    auto episodes = sample_episodes(w, 3, 5);
    const std::string path = "truncated_dataset.json";
    export_dataset(episodes, w.spec, path);
    std::ifstream in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    in.close();
    std::string text = buf.str().substr(0, buf.str().size() / 2);
    std::ofstream out(path);
    out << text;
    out.close();
    CHECK_THROWS_AS(import_dataset(path), ParseError);
    std::remove(path.c_str());
}

TEST_CASE("dataset: shape mismatch between header and payload names the field") {
    World w = build_world(demo_spec());
    auto episodes = sample_episodes(w, 2, 5);
    episodes[1].v.shape = {12, 15};
    episodes[1].v.data.resize(12 * 15);
    const std::string path = "mismatch_dataset.json";
    export_dataset(episodes, w.spec, path);
    CHECK_THROWS_WITH_AS(import_dataset(path), doctest::Contains("episodes[1].v"), ParseError);
    std::remove(path.c_str());
}

TEST_CASE("dataset: missing file raises an I/O error") {
    CHECK_THROWS_AS(import_dataset("/nonexistent/dataset.json"), IoError);
}

TEST_CASE("world spec json: round-trip and unknown-key rejection") {
    WorldSpec spec = demo_spec();
    WorldSpec back = world_spec_from_json(world_spec_to_json(spec));
    CHECK(back == spec);

    nlohmann::json j = world_spec_to_json(spec);
    j["frames"] = 4;
    CHECK_THROWS_WITH_AS(world_spec_from_json(j), doctest::Contains("frames"), ValidationError);

    nlohmann::json bad_type = world_spec_to_json(spec);
    bad_type["noise_sigma"] = "high";
    CHECK_THROWS_WITH_AS(world_spec_from_json(bad_type), doctest::Contains("noise_sigma"), ValidationError);
}
