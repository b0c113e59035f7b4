#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lwsm/errors.hpp"
#include "lwsm/gradcheck.hpp"
#include "lwsm/head.hpp"

using namespace lwsm;

TEST_CASE("zero weights: score is the final bias") {
    Rng rng(70);
    ParamStore store;
    PredictionHead head(store, "head.", {8, 3, 4}, rng);
    for (const auto& name : store.names())
        for (double& v : store.value(name).data) v = 0.0;
    store.value("head.fc2_b")(0) = 17.5;
    Tensor y = random_uniform({8, 11}, -1, 1, rng);
    PredictionHead::Cache cache;
    CHECK(head.forward(store, y, cache) == 17.5);
}

TEST_CASE("hand-set weights reproduce an arithmetic oracle") {
    // N=4: conv1 -> 2 channels, conv2 -> 1 channel, hidden 2.
    // All conv kernels pick the centre tap only, so convs act pointwise.
    ParamStore store;
    Rng rng(71);
    PredictionHead head(store, "h.", {4, 3, 2}, rng);
    auto clear = [&](const char* n) {
        for (double& v : store.value(std::string("h.") + n).data) v = 0.0;
    };
    for (const char* n : {"conv1_k", "conv1_b", "conv2_k", "conv2_b", "fc1_w", "fc1_b", "fc2_w", "fc2_b"}) clear(n);
    Tensor& k1 = store.value("h.conv1_k"); // [2,4,3]
    k1(0, 0, 1) = 1.0;                     // ch0 = x0
    k1(1, 1, 1) = 2.0;                     // ch1 = 2*x1
    Tensor& k2 = store.value("h.conv2_k"); // [1,2,3]
    k2(0, 0, 1) = 1.0;                     // out = ch0 + ch1
    k2(0, 1, 1) = 1.0;
    store.value("h.fc1_w")(0, 0) = 1.0; // hidden0 = pooled
    store.value("h.fc1_w")(1, 0) = -1.0;
    store.value("h.fc2_w")(0, 0) = 3.0;
    store.value("h.fc2_b")(0) = 0.25;

    // constant-in-time input: x0 = 1, x1 = 2 -> conv chain gives 1 + 4 = 5
    Tensor y = zeros({4, 5});
    for (std::size_t t = 0; t < 5; ++t) {
        y(0, t) = 1.0;
        y(1, t) = 2.0;
        y(2, t) = -7.0; // untouched channels must not matter
        y(3, t) = 0.5;
    }
    PredictionHead::Cache cache;
    // pooled = 5, hidden = (relu(5), relu(-5)) = (5, 0), score = 3*5 + 0.25
    CHECK(head.forward(store, y, cache) == doctest::Approx(15.25).epsilon(1e-14));
}

TEST_CASE("global pooling makes the score invariant to time permutation") {
    Rng rng(72);
    ParamStore store;
    PredictionHead head(store, "h.", {4, 1, 3}, rng); // width-1 convs: pointwise
    Tensor y = random_uniform({4, 6}, -1, 1, rng);
    const std::size_t perm[6] = {5, 2, 0, 4, 1, 3};
    Tensor yp({4, 6});
    for (std::size_t f = 0; f < 4; ++f)
        for (std::size_t t = 0; t < 6; ++t) yp(f, t) = y(f, perm[t]);
    PredictionHead::Cache c1, c2;
    CHECK(head.forward(store, y, c1) == doctest::Approx(head.forward(store, yp, c2)).epsilon(1e-13));
}

TEST_CASE("width must be a multiple of 4; input width checked") {
    Rng rng(73);
    ParamStore s1;
    CHECK_THROWS_AS(PredictionHead(s1, "h.", {6, 3, 4}, rng), ConfigError);
    ParamStore s2;
    PredictionHead head(s2, "h.", {8, 3, 4}, rng);
    PredictionHead::Cache cache;
    Tensor bad = zeros({5, 4});
    CHECK_THROWS_AS(head.forward(s2, bad, cache), DimensionError);
}

TEST_CASE("gradients pass grad_check") {
    Rng rng(74);
    Rng coord_rng(75);
    ParamStore store;
    PredictionHead head(store, "h.", {8, 3, 4}, rng);
    store.add("x", random_uniform({8, 9}, -1, 1, rng));
    auto f = [&](ParamStore& s, bool with_grad) {
        PredictionHead::Cache cache;
        double score = head.forward(s, s.value("x"), cache);
        double loss = 0.7 * score + 0.1 * score * score;
        if (with_grad) {
            Tensor dx = head.backward(s, cache, 0.7 + 0.2 * score);
            for (std::size_t i = 0; i < dx.numel(); ++i) s.grad("x")(i) += dx(i);
        }
        return loss;
    };
    auto report = grad_check(f, store, 1e-5, 16, coord_rng);
    for (const auto& e : report.entries) {
        INFO(e.name);
        CHECK(e.max_rel_err < 1e-5);
    }
}

TEST_CASE("reported scores clamp to the instrument range") {
    CHECK(clamp_report(70.0) == 63.0);
    CHECK(clamp_report(-2.0) == 0.0);
    CHECK(clamp_report(25.0) == 25.0);
    CHECK(clamp_report(0.0) == 0.0);
    CHECK(clamp_report(63.0) == 63.0);
}
