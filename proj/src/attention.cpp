#include "lwsm/attention.hpp"

#include <cmath>

#include "lwsm/errors.hpp"

namespace lwsm {

ExternalAttention::ExternalAttention(ParamStore& store, std::string prefix, ExternalAttentionConfig cfg, Rng& rng)
    : prefix_(std::move(prefix)), cfg_(cfg) {
    const std::size_t n = cfg_.width;
    const double s = 1.0 / std::sqrt(static_cast<double>(n));
    store.add(p("w_k"), random_uniform({n, n}, -s, s, rng));
    store.add(p("b_k"), zeros({n}));
    store.add(p("w_v"), random_uniform({n, n}, -s, s, rng));
    store.add(p("b_v"), zeros({n}));
}

Tensor ExternalAttention::forward(const ParamStore& store, const Tensor& y, Cache& cache) const {
    if (y.rank() != 2 || y.rows() != cfg_.width)
        throw DimensionError("external attention: input " + y.shape_str() + " vs width " +
                             std::to_string(cfg_.width));
    cache.input = y;
    cache.mk_pre = linear(y, store.value(p("w_k")), store.value(p("b_k")));
    cache.mk = relu(cache.mk_pre);
    cache.prod = hadamard(y, cache.mk);

    Tensor z;
    if (cfg_.softmax_placement == SoftmaxPlacement::TimePre) {
        cache.attn = softmax(cache.prod, 1); // weights over the time axis per feature
        cache.applied = hadamard(cache.attn, y);
        cache.mv = linear(cache.applied, store.value(p("w_v")), store.value(p("b_v")));
        z = cache.mv;
    } else {
        cache.attn = linear(cache.prod, store.value(p("w_v")), store.value(p("b_v")));
        cache.mv = softmax(cache.attn, 0); // over the feature axis per timestep
        z = cache.mv;
    }
    if (cfg_.residual) z = add(y, z);
    require_finite(z, "external attention");
    return z;
}

Tensor ExternalAttention::backward(ParamStore& store, const Cache& cache, const Tensor& dz) const {
    Tensor dy = cfg_.residual ? dz : zeros(dz.shape);
    Tensor dprod;
    if (cfg_.softmax_placement == SoftmaxPlacement::TimePre) {
        Tensor dapplied = linear_backward(cache.applied, store.value(p("w_v")), dz, store.grad(p("w_v")),
                                          store.grad(p("b_v")));
        Tensor dattn = hadamard(dapplied, cache.input);
        dy = add(dy, hadamard(dapplied, cache.attn));
        dprod = softmax_backward(cache.attn, dattn, 1);
    } else {
        Tensor dpre = softmax_backward(cache.mv, dz, 0);
        dprod = linear_backward(cache.prod, store.value(p("w_v")), dpre, store.grad(p("w_v")), store.grad(p("b_v")));
    }
    dy = add(dy, hadamard(dprod, cache.mk));
    Tensor dmk = hadamard(dprod, cache.input);
    Tensor dmk_pre = relu_backward(cache.mk_pre, dmk);
    dy = add(dy, linear_backward(cache.input, store.value(p("w_k")), dmk_pre, store.grad(p("w_k")),
                                 store.grad(p("b_k"))));
    return dy;
}

} // namespace lwsm
