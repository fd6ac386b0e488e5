#include <doctest.h>

#include <cmath>
#include <limits>

#include "dualcausal/errors.hpp"
#include "dualcausal/rng.hpp"
#include "dualcausal/tensor.hpp"

using namespace dcl;

TEST_CASE("softmax_temp: equal logits give the uniform distribution") {
    Tensor x = Tensor::from({3}, {0.0, 0.0, 0.0});
    Tensor y = softmax_temp(x, 1.0, 0);
    for (double v : y.data) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("softmax_temp: closed form for [ln 2, 0]") {
    Tensor x = Tensor::from({2}, {std::log(2.0), 0.0});
    Tensor y = softmax_temp(x, 1.0, 0);
    CHECK(y.data[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(y.data[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("softmax_temp: shift invariance") {
    Tensor x = Tensor::from({3}, {1.0, 2.0, 3.0});
    Tensor shifted = Tensor::from({3}, {6.0, 7.0, 8.0});
    for (double tau : {0.5, 1.0, 3.0}) {
        Tensor a = softmax_temp(x, tau, 0);
        Tensor b = softmax_temp(shifted, tau, 0);
        for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(a.data[i] - b.data[i]) < 1e-12);
    }
}

TEST_CASE("softmax_temp: rejects bad tau and non-finite input") {
    Tensor x = Tensor::from({2}, {0.0, 1.0});
    CHECK_THROWS_AS(softmax_temp(x, 0.0, 0), InvalidArgumentError);
    CHECK_THROWS_AS(softmax_temp(x, -1.0, 0), InvalidArgumentError);
    Tensor bad = Tensor::from({2}, {0.0, std::numeric_limits<double>::quiet_NaN()});
    CHECK_THROWS_AS(softmax_temp(bad, 1.0, 0), NumericError);
    Tensor inf = Tensor::from({2}, {0.0, std::numeric_limits<double>::infinity()});
    CHECK_THROWS_AS(softmax_temp(inf, 1.0, 0), NumericError);
}

TEST_CASE("softmax_temp: 1000 random slices are probability vectors for tau in {0.05,1,20}") {
    Rng rng(41);
    for (double tau : {0.05, 1.0, 20.0}) {
        for (int iter = 0; iter < 1000; ++iter) {
            Tensor x = Tensor::zeros({8});
            for (double& v : x.data) v = (rng.uniform() * 2.0 - 1.0) * 50.0;
            Tensor y = softmax_temp(x, tau, 0);
            double sum = 0.0;
            for (double v : y.data) {
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
                sum += v;
            }
            CHECK(std::abs(sum - 1.0) < 1e-9);
        }
    }
}

TEST_CASE("softmax_temp: middle-axis softmax normalizes each fiber") {
    Rng rng(7);
    Tensor x = Tensor::zeros({3, 5, 4});
    for (double& v : x.data) v = rng.normal();
    Tensor y = softmax_temp(x, 0.7, 1);
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t d = 0; d < 4; ++d) {
            double sum = 0.0;
            for (std::size_t l = 0; l < 5; ++l) sum += y(c, l, d);
            CHECK(std::abs(sum - 1.0) < 1e-9);
        }
}

TEST_CASE("softmax_temp is deterministic") {
    Rng rng(99);
    Tensor x = Tensor::zeros({16});
    for (double& v : x.data) v = rng.normal() * 10.0;
    Tensor a = softmax_temp(x, 0.05, 0);
    Tensor b = softmax_temp(x, 0.05, 0);
    CHECK(a.data == b.data);
}

TEST_CASE("layer_norm: constant input maps to bias") {
    Tensor x = Tensor::from({3}, {4.2, 4.2, 4.2});
    Tensor gain = Tensor::full({3}, 1.0);
    Tensor bias = Tensor::zeros({3});
    Tensor y = layer_norm(x, gain, bias);
    for (double v : y.data) CHECK(v == 0.0);

    Tensor b2 = Tensor::from({3}, {1.0, 2.0, 3.0});
    Tensor y2 = layer_norm(x, gain, b2);
    CHECK(y2.data == b2.data);
}

TEST_CASE("layer_norm: zero-mean unit-variance input is unchanged at eps=0") {
    Tensor x = Tensor::from({2}, {1.0, -1.0});
    Tensor y = layer_norm(x, Tensor::full({2}, 1.0), Tensor::zeros({2}), 0.0);
    CHECK(y.data[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(y.data[1] == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("layer_norm: [2,4,6] against an independent scalar oracle") {
    // Oracle: recompute mean and population variance with plain scalar loops.
    const double vals[3] = {2.0, 4.0, 6.0};
    double mean = (vals[0] + vals[1] + vals[2]) / 3.0;
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    var /= 3.0;
    Tensor x = Tensor::from({3}, {2.0, 4.0, 6.0});
    Tensor y = layer_norm(x, Tensor::full({3}, 1.0), Tensor::zeros({3}), 0.0);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(y.data[i] == doctest::Approx((vals[i] - mean) / std::sqrt(var)).epsilon(1e-12));
    }
    CHECK(y.data[0] == doctest::Approx(-1.224744871391589).epsilon(1e-12));
    CHECK(y.data[1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(y.data[2] == doctest::Approx(1.224744871391589).epsilon(1e-12));
}

TEST_CASE("layer_norm: shape mismatch raises") {
    Tensor x = Tensor::from({4}, {1, 2, 3, 4});
    CHECK_THROWS_AS(layer_norm(x, Tensor::full({3}, 1.0), Tensor::zeros({4})), ShapeError);
    CHECK_THROWS_AS(layer_norm(x, Tensor::full({4}, 1.0), Tensor::zeros({3})), ShapeError);
}

TEST_CASE("layer_norm: per-slice mean below 1e-9 on random rows") {
    Rng rng(5);
    Tensor x = Tensor::zeros({20, 6});
    for (double& v : x.data) v = rng.normal() * 3.0 + 1.0;
    Tensor y = layer_norm(x, Tensor::full({6}, 1.0), Tensor::zeros({6}));
    for (std::size_t r = 0; r < 20; ++r) {
        double m = 0.0;
        for (std::size_t c = 0; c < 6; ++c) m += y(r, c);
        m /= 6.0;
        CHECK(std::abs(m) < 1e-9);
    }
}

TEST_CASE("linear: identity weight and zero bias reproduce the input") {
    Tensor w = Tensor::zeros({3, 3});
    for (std::size_t i = 0; i < 3; ++i) w(i, i) = 1.0;
    Tensor x = Tensor::from({3}, {0.5, -2.0, 7.0});
    Tensor y = linear(x, w, Tensor::zeros({3}));
    CHECK(y.data == x.data);
}

TEST_CASE("linear: zero weight broadcasts the bias") {
    Tensor w = Tensor::zeros({2, 3});
    Tensor b = Tensor::from({2}, {4.0, -1.0});
    Tensor x = Tensor::from({4, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
    Tensor y = linear(x, w, b);
    for (std::size_t r = 0; r < 4; ++r) {
        CHECK(y(r, 0) == 4.0);
        CHECK(y(r, 1) == -1.0);
    }
}

TEST_CASE("linear: hand matrix-product oracle") {
    Tensor w = Tensor::from({2, 2}, {1, 2, 3, 4});
    Tensor x = Tensor::from({2}, {1, 1});
    Tensor y = linear(x, w, Tensor::zeros({2}));
    // Oracle: y[o] = sum_i w[o][i] * x[i], by explicit loop.
    double expect[2] = {0, 0};
    for (int o = 0; o < 2; ++o)
        for (int i = 0; i < 2; ++i) expect[o] += w(o, i) * x.data[i];
    CHECK(y.data[0] == expect[0]);
    CHECK(y.data[1] == expect[1]);
    CHECK(y.data[0] == 3.0);
    CHECK(y.data[1] == 7.0);
}

TEST_CASE("linear: shape mismatch raises") {
    Tensor w = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
    CHECK_THROWS_AS(linear(Tensor::from({2}, {1, 2}), w, Tensor::zeros({2})), ShapeError);
    CHECK_THROWS_AS(linear(Tensor::from({3}, {1, 2, 3}), w, Tensor::zeros({3})), ShapeError);
}

TEST_CASE("Tensor::from validates element count") {
    CHECK_THROWS_AS(Tensor::from({2, 2}, {1.0, 2.0, 3.0}), ShapeError);
}
