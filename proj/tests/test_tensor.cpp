#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lwsm/errors.hpp"
#include "lwsm/gradcheck.hpp"
#include "lwsm/ops.hpp"
#include "lwsm/param_store.hpp"
#include "lwsm/tensor.hpp"

using namespace lwsm;

namespace {

// independent naive triple-loop matmul oracle
Tensor naive_linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    Tensor y({w.rows(), x.cols()});
    for (std::size_t f = 0; f < w.rows(); ++f)
        for (std::size_t t = 0; t < x.cols(); ++t) {
            double acc = b(f);
            for (std::size_t k = 0; k < w.cols(); ++k) acc += w(f, k) * x(k, t);
            y(f, t) = acc;
        }
    return y;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) m = std::max(m, std::fabs(a(i) - b(i)));
    return m;
}

} // namespace

TEST_CASE("linear identity and zero cases") {
    Rng rng(1);
    Tensor w = random_uniform({3, 3}, -1, 1, rng);
    Tensor b = zeros({3});
    // identity column in x picks the corresponding column of w
    for (std::size_t k = 0; k < 3; ++k) {
        Tensor x = zeros({3, 1});
        x(k, 0) = 1.0;
        Tensor y = linear(x, w, b);
        for (std::size_t f = 0; f < 3; ++f) CHECK(y(f, 0) == doctest::Approx(w(f, k)).epsilon(1e-14));
    }
    // zero weights, constant bias
    Tensor w0 = zeros({2, 3});
    Tensor bc = full({2}, 7.5);
    Tensor x = random_uniform({3, 4}, -1, 1, rng);
    Tensor y = linear(x, w0, bc);
    for (double v : y.data) CHECK(v == 7.5);
}

TEST_CASE("linear matches naive matmul oracle") {
    Rng rng(2);
    Tensor x = random_uniform({2, 5}, -2, 2, rng);
    Tensor w = random_uniform({3, 2}, -2, 2, rng);
    Tensor b = random_uniform({3}, -1, 1, rng);
    CHECK(max_abs_diff(linear(x, w, b), naive_linear(x, w, b)) < 1e-12);
}

TEST_CASE("linear shape mismatch names both shapes") {
    Tensor x = zeros({3, 2}), w = zeros({4, 2}), b = zeros({4});
    CHECK_THROWS_WITH_AS(linear(x, w, b), doctest::Contains("[4x2]"), DimensionError);
}

TEST_CASE("conv1d identity kernel and zero input") {
    Rng rng(3);
    Tensor x = random_uniform({2, 6}, -1, 1, rng);
    Tensor k1 = full({2, 1}, 1.0);
    CHECK(max_abs_diff(conv1d_depthwise(x, k1, PadMode::Causal), x) == 0.0);
    CHECK(max_abs_diff(conv1d_depthwise(x, k1, PadMode::Same), x) == 0.0);
    Tensor x0 = zeros({2, 6});
    Tensor k = random_uniform({2, 3}, -1, 1, rng);
    Tensor y = conv1d_depthwise(x0, k, PadMode::Causal);
    for (double v : y.data) CHECK(v == 0.0);
}

TEST_CASE("conv1d causal hand-unrolled sliding window") {
    Tensor x({1, 4}, {1, 2, 3, 4});
    Tensor k({1, 2}, {1, 1});
    Tensor y = conv1d_depthwise(x, k, PadMode::Causal);
    CHECK(y(0, 0) == 1);
    CHECK(y(0, 1) == 3);
    CHECK(y(0, 2) == 5);
    CHECK(y(0, 3) == 7);
}

TEST_CASE("conv1d matches naive oracle on random shapes") {
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t c = 1 + rng.below(4), t = 1 + rng.below(8), w = 1 + rng.below(5);
        Tensor x = random_uniform({c, t}, -1, 1, rng);
        Tensor k = random_uniform({c, w}, -1, 1, rng);
        for (PadMode mode : {PadMode::Causal, PadMode::Same}) {
            const std::size_t pl = mode == PadMode::Causal ? w - 1 : (w - 1) / 2;
            Tensor want({c, t});
            for (std::size_t ch = 0; ch < c; ++ch)
                for (std::size_t j = 0; j < t; ++j) {
                    double acc = 0.0;
                    for (std::size_t kk = 0; kk < w; ++kk) {
                        const long s = static_cast<long>(j + kk) - static_cast<long>(pl);
                        if (s >= 0 && s < static_cast<long>(t)) acc += k(ch, kk) * x(ch, s);
                    }
                    want(ch, j) = acc;
                }
            CHECK(max_abs_diff(conv1d_depthwise(x, k, mode), want) < 1e-12);
        }
    }
}

TEST_CASE("activations basics") {
    Tensor x({1, 1}, {0.0});
    CHECK(sigmoid(x)(0) == 0.5);
    CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));

    Tensor c = full({5, 1}, 3.3);
    Tensor sm = softmax(c, 0);
    for (double v : sm.data) CHECK(v == doctest::Approx(0.2).epsilon(1e-14));

    // softmax sums to 1 and is non-negative
    Rng rng(5);
    Tensor r = random_uniform({4, 6}, -10, 10, rng);
    for (std::size_t axis : {std::size_t{0}, std::size_t{1}}) {
        Tensor y = softmax(r, axis);
        const std::size_t slices = axis == 0 ? y.cols() : y.rows();
        const std::size_t n = axis == 0 ? y.rows() : y.cols();
        for (std::size_t s = 0; s < slices; ++s) {
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double v = axis == 0 ? y(i, s) : y(s, i);
                CHECK(v >= 0.0);
                sum += v;
            }
            CHECK(std::fabs(sum - 1.0) < 1e-12);
        }
    }
    CHECK_THROWS_AS(softmax(r, 2), DimensionError);
}

TEST_CASE("layer_norm matches two-pass statistics oracle") {
    Tensor x({3, 1}, {1, 2, 3});
    Tensor gain = full({3}, 2.0), bias = zeros({3});
    LayerNormCache cache;
    Tensor y = layer_norm(x, 0, gain, bias, cache);
    // two-pass oracle
    const double mean = 2.0;
    const double var = (1.0 + 0.0 + 1.0) / 3.0;
    const double inv = 1.0 / std::sqrt(var + 1e-5);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(y(i, 0) == doctest::Approx(2.0 * (x(i, 0) - mean) * inv).epsilon(1e-14));
    double sum = 0.0;
    for (double v : y.data) sum += v;
    CHECK(std::fabs(sum) < 1e-12);
}

TEST_CASE("adam zero gradient leaves parameters unchanged") {
    ParamStore store;
    Rng rng(6);
    store.add("w", random_uniform({3, 3}, -1, 1, rng));
    Tensor before = store.value("w");
    AdamConfig cfg;
    store.adam_step(cfg);
    CHECK(max_abs_diff(store.value("w"), before) == 0.0);
}

TEST_CASE("adam first step magnitude equals lr for constant gradient") {
    ParamStore store;
    store.add("w", full({4}, 1.0));
    store.grad("w").fill(0.37);
    AdamConfig cfg;
    cfg.lr = 0.002;
    store.adam_step(cfg);
    // bias correction makes the first step lr*sign(g) up to eps
    for (double v : store.value("w").data) CHECK(v == doctest::Approx(1.0 - 0.002).epsilon(1e-5));
}

TEST_CASE("adam matches independent scalar recurrence over steps") {
    ParamStore store;
    store.add("w", full({1}, 0.5));
    AdamConfig cfg;
    cfg.lr = 0.01;
    // independent scalar oracle
    double w = 0.5, m = 0.0, v = 0.0;
    const double g = -1.25;
    for (int t = 1; t <= 5; ++t) {
        store.grad("w")(0) = g;
        store.adam_step(cfg);
        m = cfg.beta1 * m + (1 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1 - cfg.beta2) * g * g;
        const double mhat = m / (1 - std::pow(cfg.beta1, t));
        const double vhat = v / (1 - std::pow(cfg.beta2, t));
        w -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        CHECK(store.value("w")(0) == doctest::Approx(w).epsilon(1e-14));
    }
}

TEST_CASE("adam aborts on NaN gradient naming the parameter") {
    ParamStore store;
    store.add("layer.weight", full({1}, 0.0));
    store.grad("layer.weight")(0) = std::nan("");
    CHECK_THROWS_WITH_AS(store.adam_step(AdamConfig{}), doctest::Contains("layer.weight"), TrainingError);
}

TEST_CASE("grad_check on quadratic and linear+mse") {
    Rng rng(7);
    ParamStore store;
    store.add("w", random_uniform({3, 2}, -1, 1, rng));

    auto quad = [](ParamStore& s, bool with_grad) {
        double loss = 0.0;
        const Tensor& w = s.value("w");
        for (double v : w.data) loss += 0.5 * v * v;
        if (with_grad)
            for (std::size_t i = 0; i < w.numel(); ++i) s.grad("w")(i) += w(i);
        return loss;
    };
    Rng coord_rng(8);
    auto report = grad_check(quad, store, 1e-5, 16, coord_rng);
    CHECK(report.max_rel_err < 1e-7);

    // single linear layer + MSE against fixed targets
    ParamStore st2;
    st2.add("w", random_uniform({2, 3}, -1, 1, rng));
    st2.add("b", random_uniform({2}, -1, 1, rng));
    Tensor x = random_uniform({3, 4}, -1, 1, rng);
    Tensor target = random_uniform({2, 4}, -1, 1, rng);
    auto lin_mse = [&](ParamStore& s, bool with_grad) {
        Tensor y = linear(x, s.value("w"), s.value("b"));
        double loss = 0.0;
        Tensor dy = y;
        for (std::size_t i = 0; i < y.numel(); ++i) {
            const double e = y(i) - target(i);
            loss += e * e;
            dy(i) = 2.0 * e;
        }
        if (with_grad) linear_backward(x, s.value("w"), dy, s.grad("w"), s.grad("b"));
        return loss;
    };
    auto report2 = grad_check(lin_mse, st2, 1e-5, 32, coord_rng);
    CHECK(report2.max_rel_err < 1e-5);
}

TEST_CASE("op gradients pass finite differences") {
    Rng rng(9);
    Rng coord_rng(10);

    // depthwise conv, both pad modes, with bias
    for (PadMode mode : {PadMode::Causal, PadMode::Same}) {
        ParamStore store;
        store.add("k", random_uniform({2, 3}, -1, 1, rng));
        store.add("kb", random_uniform({2}, -1, 1, rng));
        store.add("x", random_uniform({2, 6}, -1, 1, rng));
        auto f = [&](ParamStore& s, bool with_grad) {
            Tensor y = conv1d_depthwise(s.value("x"), s.value("k"), mode, &s.value("kb"));
            double loss = 0.0;
            Tensor dy = y;
            for (std::size_t i = 0; i < y.numel(); ++i) {
                loss += 0.5 * y(i) * y(i);
                dy(i) = y(i);
            }
            if (with_grad) {
                Tensor dx = conv1d_depthwise_backward(s.value("x"), s.value("k"), mode, dy, s.grad("k"), &s.grad("kb"));
                for (std::size_t i = 0; i < dx.numel(); ++i) s.grad("x")(i) += dx(i);
            }
            return loss;
        };
        CHECK(grad_check(f, store, 1e-5, 40, coord_rng).max_rel_err < 1e-5);
    }

    // full conv with stride
    {
        ParamStore store;
        store.add("k", random_uniform({3, 2, 4}, -1, 1, rng));
        store.add("b", random_uniform({3}, -1, 1, rng));
        store.add("x", random_uniform({2, 9}, -1, 1, rng));
        auto f = [&](ParamStore& s, bool with_grad) {
            Tensor y = conv1d_full(s.value("x"), s.value("k"), s.value("b"), 2, PadMode::Same);
            double loss = 0.0;
            Tensor dy = y;
            for (std::size_t i = 0; i < y.numel(); ++i) {
                loss += 0.5 * y(i) * y(i);
                dy(i) = y(i);
            }
            if (with_grad) {
                Tensor dx = conv1d_full_backward(s.value("x"), s.value("k"), 2, PadMode::Same, dy, s.grad("k"), s.grad("b"));
                for (std::size_t i = 0; i < dx.numel(); ++i) s.grad("x")(i) += dx(i);
            }
            return loss;
        };
        CHECK(grad_check(f, store, 1e-5, 60, coord_rng).max_rel_err < 1e-5);
    }

    // layer_norm + softmax + sigmoid composite
    {
        ParamStore store;
        store.add("x", random_uniform({4, 3}, -1, 1, rng));
        store.add("gain", random_uniform({4}, 0.5, 1.5, rng));
        store.add("bias", random_uniform({4}, -0.5, 0.5, rng));
        Tensor weights = random_uniform({4, 3}, -1, 1, rng);
        auto f = [&](ParamStore& s, bool with_grad) {
            LayerNormCache cache;
            Tensor ln = layer_norm(s.value("x"), 0, s.value("gain"), s.value("bias"), cache);
            Tensor sm = softmax(ln, 0);
            Tensor sg = sigmoid(sm);
            double loss = 0.0;
            Tensor dsg = sg;
            for (std::size_t i = 0; i < sg.numel(); ++i) {
                loss += weights(i) * sg(i);
                dsg(i) = weights(i);
            }
            if (with_grad) {
                Tensor dsm = sigmoid_backward(sg, dsg);
                Tensor dln = softmax_backward(sm, dsm, 0);
                Tensor dx = layer_norm_backward(s.value("x"), 0, s.value("gain"), cache, dln, s.grad("gain"), s.grad("bias"));
                for (std::size_t i = 0; i < dx.numel(); ++i) s.grad("x")(i) += dx(i);
            }
            return loss;
        };
        CHECK(grad_check(f, store, 1e-5, 40, coord_rng).max_rel_err < 1e-5);
    }
}

TEST_CASE("ops are pure: repeated evaluation is bit-identical") {
    Rng rng(11);
    Tensor x = random_uniform({3, 5}, -1, 1, rng);
    Tensor w = random_uniform({4, 3}, -1, 1, rng);
    Tensor b = random_uniform({4}, -1, 1, rng);
    Tensor y1 = linear(x, w, b), y2 = linear(x, w, b);
    CHECK(y1.data == y2.data);
    Tensor s1 = softmax(x, 1), s2 = softmax(x, 1);
    CHECK(s1.data == s2.data);
}
