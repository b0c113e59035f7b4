#include "lwsm/head.hpp"

#include <algorithm>
#include <cmath>

#include "lwsm/errors.hpp"

namespace lwsm {

PredictionHead::PredictionHead(ParamStore& store, std::string prefix, PredictionHeadConfig cfg, Rng& rng)
    : prefix_(std::move(prefix)), cfg_(cfg) {
    if (cfg_.width < 4 || cfg_.width % 4 != 0)
        throw ConfigError("prediction head width must be a positive multiple of 4, got " +
                          std::to_string(cfg_.width));
    const std::size_t n = cfg_.width, h = n / 2, q = n / 4, w = cfg_.conv_width;
    const double s1 = 1.0 / std::sqrt(static_cast<double>(n * w));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(h * w));
    const double s3 = 1.0 / std::sqrt(static_cast<double>(q));
    const double s4 = 1.0 / std::sqrt(static_cast<double>(cfg_.hidden));
    // small positive biases keep the ReLU stages from starting dead (and off
    // the exact kink, where finite differences disagree with the analytic
    // one-sided derivative)
    store.add(p("conv1_k"), random_uniform({h, n, w}, -s1, s1, rng));
    store.add(p("conv1_b"), full({h}, 0.01));
    store.add(p("conv2_k"), random_uniform({q, h, w}, -s2, s2, rng));
    store.add(p("conv2_b"), full({q}, 0.01));
    store.add(p("fc1_w"), random_uniform({cfg_.hidden, q}, -s3, s3, rng));
    store.add(p("fc1_b"), full({cfg_.hidden}, 0.01));
    store.add(p("fc2_w"), random_uniform({1, cfg_.hidden}, -s4, s4, rng));
    store.add(p("fc2_b"), zeros({1}));
}

double PredictionHead::forward(const ParamStore& store, const Tensor& y, Cache& cache) const {
    if (y.rank() != 2 || y.rows() != cfg_.width)
        throw DimensionError("prediction head: input " + y.shape_str() + " vs width " +
                             std::to_string(cfg_.width));
    cache.input = y;
    cache.conv1_pre = conv1d_full(y, store.value(p("conv1_k")), store.value(p("conv1_b")), 1, PadMode::Same);
    cache.act1 = relu(cache.conv1_pre);
    cache.conv2_pre =
        conv1d_full(cache.act1, store.value(p("conv2_k")), store.value(p("conv2_b")), 1, PadMode::Same);
    cache.act2 = relu(cache.conv2_pre);
    Tensor mean = avg_pool(cache.act2, 1);
    cache.pooled = Tensor({mean.numel(), 1}, mean.data);
    cache.fc1_pre = linear(cache.pooled, store.value(p("fc1_w")), store.value(p("fc1_b")));
    cache.act3 = relu(cache.fc1_pre);
    Tensor out = linear(cache.act3, store.value(p("fc2_w")), store.value(p("fc2_b")));
    require_finite(out, "prediction head");
    return out(0, 0);
}

Tensor PredictionHead::backward(ParamStore& store, const Cache& cache, double dscore) const {
    Tensor dout({1, 1}, {dscore});
    Tensor dact3 =
        linear_backward(cache.act3, store.value(p("fc2_w")), dout, store.grad(p("fc2_w")), store.grad(p("fc2_b")));
    Tensor dfc1 = relu_backward(cache.fc1_pre, dact3);
    Tensor dpooled =
        linear_backward(cache.pooled, store.value(p("fc1_w")), dfc1, store.grad(p("fc1_w")), store.grad(p("fc1_b")));
    const std::size_t t = cache.act2.cols();
    Tensor dact2(cache.act2.shape);
    for (std::size_t f = 0; f < cache.act2.rows(); ++f)
        for (std::size_t j = 0; j < t; ++j) dact2(f, j) = dpooled(f, 0) / static_cast<double>(t);
    Tensor dconv2 = relu_backward(cache.conv2_pre, dact2);
    Tensor dact1 = conv1d_full_backward(cache.act1, store.value(p("conv2_k")), 1, PadMode::Same, dconv2,
                                        store.grad(p("conv2_k")), store.grad(p("conv2_b")));
    Tensor dconv1 = relu_backward(cache.conv1_pre, dact1);
    return conv1d_full_backward(cache.input, store.value(p("conv1_k")), 1, PadMode::Same, dconv1,
                                store.grad(p("conv1_k")), store.grad(p("conv1_b")));
}

double clamp_report(double score) { return std::clamp(score, 0.0, 63.0); }

} // namespace lwsm
