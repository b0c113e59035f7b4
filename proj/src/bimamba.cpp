#include "lwsm/bimamba.hpp"

#include <cmath>

#include "lwsm/errors.hpp"

namespace lwsm {

BiMambaBlock::BiMambaBlock(ParamStore& store, std::string prefix, BiMambaConfig cfg, Rng& rng)
    : prefix_(std::move(prefix)), cfg_(cfg) {
    const std::size_t n = cfg_.width, e = 2 * n, w = cfg_.conv_width;
    const double s_in = 1.0 / std::sqrt(static_cast<double>(n));
    const double s_conv = 1.0 / std::sqrt(static_cast<double>(w));
    const double s_out = 1.0 / std::sqrt(static_cast<double>(e));

    store.add(p("w_i"), random_uniform({e, n}, -s_in, s_in, rng));
    store.add(p("b_i"), zeros({e}));
    store.add(p("w_z"), random_uniform({e, n}, -s_in, s_in, rng));
    store.add(p("b_z"), zeros({e}));
    store.add(p("conv_a"), random_uniform({e, w}, -s_conv, s_conv, rng));
    store.add(p("conv_a_b"), zeros({e}));
    store.add(p("conv_p"), random_uniform({e, w}, -s_conv, s_conv, rng));
    store.add(p("conv_p_b"), zeros({e}));
    ssm_a_ = SelectiveSsmLayer(store, prefix_ + "ssm_a.", {e, cfg_.state_dim}, rng);
    ssm_p_ = SelectiveSsmLayer(store, prefix_ + "ssm_p.", {e, cfg_.state_dim}, rng);
    store.add(p("w_o"), random_uniform({n, e}, -s_out, s_out, rng));
    store.add(p("b_o"), zeros({n}));
    store.add(p("ln_gain"), full({n}, 1.0));
    store.add(p("ln_bias"), zeros({n}));
}

Tensor BiMambaBlock::forward(const ParamStore& store, const Tensor& input, Cache& cache, bool use_scan) const {
    const std::size_t n = cfg_.width;
    if (input.rank() != 2 || input.rows() != n)
        throw DimensionError("bimamba: input " + input.shape_str() + " vs configured width " + std::to_string(n));

    cache.input = input;
    cache.i = linear(input, store.value(p("w_i")), store.value(p("b_i")));
    cache.z = linear(input, store.value(p("w_z")), store.value(p("b_z")));

    cache.g_a = sigmoid(conv1d_depthwise(cache.i, store.value(p("conv_a")), PadMode::Causal, &store.value(p("conv_a_b"))));
    cache.i_rev = reverse_time(cache.i);
    cache.g_p = sigmoid(conv1d_depthwise(cache.i_rev, store.value(p("conv_p")), PadMode::Causal, &store.value(p("conv_p_b"))));

    cache.sa = ssm_a_.forward(store, cache.g_a, cache.ssm_a, use_scan);
    cache.sp = ssm_p_.forward(store, cache.g_p, cache.ssm_p, use_scan);

    cache.gz_a = sigmoid(cache.z);
    cache.gz_p = sigmoid(reverse_time(cache.z));

    Tensor j_a = hadamard(cache.gz_a, cache.sa);
    Tensor j_p = hadamard(cache.gz_p, cache.sp);
    cache.fused = scale(add(j_a, reverse_time(j_p)), 0.5);

    cache.out_pre = linear(cache.fused, store.value(p("w_o")), store.value(p("b_o")));
    Tensor y = layer_norm(cache.out_pre, 0, store.value(p("ln_gain")), store.value(p("ln_bias")), cache.ln);
    if (cfg_.residual) y = add(input, y);
    require_finite(y, "bimamba " + prefix_);
    return y;
}

Tensor BiMambaBlock::backward(ParamStore& store, const Cache& cache, const Tensor& dy) const {
    require_same_shape(dy, cache.input, "bimamba backward dy");

    Tensor dout_pre = layer_norm_backward(cache.out_pre, 0, store.value(p("ln_gain")), cache.ln, dy,
                                          store.grad(p("ln_gain")), store.grad(p("ln_bias")));
    Tensor dfused = linear_backward(cache.fused, store.value(p("w_o")), dout_pre, store.grad(p("w_o")),
                                    store.grad(p("b_o")));

    Tensor dj_a = scale(dfused, 0.5);
    Tensor dj_p = reverse_time(dj_a); // same halves, swapped back to the posterior direction

    Tensor dsa = hadamard(dj_a, cache.gz_a);
    Tensor dgz_a = hadamard(dj_a, cache.sa);
    Tensor dsp = hadamard(dj_p, cache.gz_p);
    Tensor dgz_p = hadamard(dj_p, cache.sp);

    Tensor dz = add(sigmoid_backward(cache.gz_a, dgz_a), reverse_time(sigmoid_backward(cache.gz_p, dgz_p)));

    Tensor dg_a = ssm_a_.backward(store, cache.ssm_a, dsa);
    Tensor dg_p = ssm_p_.backward(store, cache.ssm_p, dsp);

    Tensor dca_pre = sigmoid_backward(cache.g_a, dg_a);
    Tensor di = conv1d_depthwise_backward(cache.i, store.value(p("conv_a")), PadMode::Causal, dca_pre,
                                          store.grad(p("conv_a")), &store.grad(p("conv_a_b")));
    Tensor dcp_pre = sigmoid_backward(cache.g_p, dg_p);
    Tensor di_rev = conv1d_depthwise_backward(cache.i_rev, store.value(p("conv_p")), PadMode::Causal, dcp_pre,
                                              store.grad(p("conv_p")), &store.grad(p("conv_p_b")));
    di = add(di, reverse_time(di_rev));

    Tensor dinput = linear_backward(cache.input, store.value(p("w_i")), di, store.grad(p("w_i")), store.grad(p("b_i")));
    dinput = add(dinput, linear_backward(cache.input, store.value(p("w_z")), dz, store.grad(p("w_z")),
                                         store.grad(p("b_z"))));
    if (cfg_.residual) dinput = add(dinput, dy);
    return dinput;
}

} // namespace lwsm
