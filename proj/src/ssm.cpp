#include "lwsm/ssm.hpp"

#include <cmath>

#include "lwsm/errors.hpp"
#include "lwsm/ops.hpp"

namespace lwsm {

namespace {

// G(delta, a) = (exp(delta*a)-1)/a, the ZOH input coefficient
double zoh_input_coeff(double a, double delta, double ahat) {
    if (a == 0.0) return delta;
    return (ahat - 1.0) / a;
}

// d/da of G(delta, a) = delta^2 * g(x), x = delta*a,
// g(x) = (x e^x - (e^x - 1)) / x^2, g(0) = 1/2
double zoh_input_coeff_da(double delta, double x, double ahat) {
    double g;
    if (std::fabs(x) < 1e-4) {
        g = 0.5 + x / 3.0 + x * x / 8.0;
    } else {
        g = (x * ahat - (ahat - 1.0)) / (x * x);
    }
    return delta * delta * g;
}

} // namespace

void discretize(double a, double b, double delta, double& ahat, double& bhat) {
    if (delta <= 0.0) throw ConfigError("discretize: step size must be positive, got " + std::to_string(delta));
    ahat = std::exp(delta * a);
    bhat = zoh_input_coeff(a, delta, ahat) * b;
}

std::pair<Tensor, Tensor> discretize(const Tensor& a, const Tensor& b, double delta) {
    require_same_shape(a, b, "discretize");
    Tensor ahat = a, bhat = b;
    for (std::size_t i = 0; i < a.numel(); ++i) discretize(a(i), b(i), delta, ahat(i), bhat(i));
    return {ahat, bhat};
}

void linear_recurrence(std::size_t n, const double* a, const double* b, double* s) {
    double h = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        h = a[i] * h + b[i];
        s[i] = h;
    }
}

void linear_scan(std::size_t n, const double* a, const double* b, double* s) {
    constexpr std::size_t kBlock = 64;
    double carry = 0.0;
    double cum_a[kBlock], cum_b[kBlock];
    for (std::size_t start = 0; start < n; start += kBlock) {
        const std::size_t m = std::min(kBlock, n - start);
        // compose the affine steps within the block: (a2,b2)∘(a1,b1) = (a2*a1, a2*b1+b2)
        cum_a[0] = a[start];
        cum_b[0] = b[start];
        for (std::size_t i = 1; i < m; ++i) {
            cum_a[i] = a[start + i] * cum_a[i - 1];
            cum_b[i] = a[start + i] * cum_b[i - 1] + b[start + i];
        }
        for (std::size_t i = 0; i < m; ++i) s[start + i] = cum_a[i] * carry + cum_b[i];
        carry = s[start + m - 1];
    }
}

namespace {

Tensor ssm_forward_impl(const Tensor& u, const Tensor& a, const Tensor& delta, const Tensor& b, const Tensor& c,
                        bool use_scan) {
    if (u.rank() != 1) throw DimensionError("ssm: u must be rank 1, got " + u.shape_str());
    const std::size_t t = u.numel();
    const std::size_t h = a.numel();
    require_shape(delta, {t}, "ssm delta");
    require_shape(b, {h, t}, "ssm B");
    require_shape(c, {h, t}, "ssm C");
    Tensor y({t});
    std::vector<double> ahat(t), binp(t), state(t);
    for (std::size_t n = 0; n < h; ++n) {
        const double an = a(n);
        for (std::size_t i = 0; i < t; ++i) {
            double av, bv;
            discretize(an, b(n, i), delta(i), av, bv);
            ahat[i] = av;
            binp[i] = bv * u(i);
        }
        if (use_scan)
            linear_scan(t, ahat.data(), binp.data(), state.data());
        else
            linear_recurrence(t, ahat.data(), binp.data(), state.data());
        for (std::size_t i = 0; i < t; ++i) y(i) += c(n, i) * state[i];
    }
    quantize(y);
    return y;
}

} // namespace

Tensor ssm_recurrence(const Tensor& u, const Tensor& a, const Tensor& delta, const Tensor& b, const Tensor& c) {
    return ssm_forward_impl(u, a, delta, b, c, false);
}

Tensor ssm_scan(const Tensor& u, const Tensor& a, const Tensor& delta, const Tensor& b, const Tensor& c) {
    return ssm_forward_impl(u, a, delta, b, c, true);
}

SelectiveSsmLayer::SelectiveSsmLayer(ParamStore& store, std::string prefix, SelectiveSsmConfig cfg, Rng& rng)
    : prefix_(std::move(prefix)), cfg_(cfg) {
    const std::size_t e = cfg_.channels, h = cfg_.state_dim;
    Tensor a({e, h});
    for (std::size_t i = 0; i < e; ++i)
        for (std::size_t n = 0; n < h; ++n) a(i, n) = -static_cast<double>(n + 1);
    store.add(p("A"), std::move(a));
    const double wscale = 1.0 / std::sqrt(static_cast<double>(e));
    store.add(p("w_delta"), random_uniform({e, e}, -wscale, wscale, rng));
    // bias so softplus(delta_pre) starts in [0.001, 0.1]
    const double lo = std::log(std::expm1(0.001)), hi = std::log(std::expm1(0.1));
    store.add(p("b_delta"), random_uniform({e}, lo, hi, rng));
    store.add(p("w_B"), random_uniform({h, e}, -wscale, wscale, rng));
    store.add(p("w_C"), random_uniform({h, e}, -wscale, wscale, rng));
}

Tensor SelectiveSsmLayer::forward(const ParamStore& store, const Tensor& u, Cache& cache, bool use_scan) const {
    const std::size_t e = cfg_.channels, h = cfg_.state_dim;
    if (u.rank() != 2 || u.rows() != e)
        throw DimensionError("selective ssm: input " + u.shape_str() + " vs channels " + std::to_string(e));
    const std::size_t v = u.cols();
    const Tensor& a = store.value(p("A"));
    const Tensor zb_e = zeros({e}), zb_h = zeros({h});

    cache.u = u;
    cache.delta = softplus(linear(u, store.value(p("w_delta")), store.value(p("b_delta"))));
    cache.bt = linear(u, store.value(p("w_B")), zb_h);
    cache.ct = linear(u, store.value(p("w_C")), zb_h);
    cache.ahat = Tensor({e, h, v});
    cache.state = Tensor({e, h, v});

    Tensor y({e, v});
    std::vector<double> binp(v);
    for (std::size_t ch = 0; ch < e; ++ch) {
        const double* dl = &cache.delta.data[ch * v];
        const double* ur = &u.data[ch * v];
        double* yr = &y.data[ch * v];
        for (std::size_t n = 0; n < h; ++n) {
            const double an = a(ch, n);
            double* ar = &cache.ahat.data[(ch * h + n) * v];
            double* sr = &cache.state.data[(ch * h + n) * v];
            for (std::size_t i = 0; i < v; ++i) {
                const double av = std::exp(dl[i] * an);
                ar[i] = av;
                binp[i] = zoh_input_coeff(an, dl[i], av) * cache.bt(n, i) * ur[i];
            }
            if (use_scan)
                linear_scan(v, ar, binp.data(), sr);
            else
                linear_recurrence(v, ar, binp.data(), sr);
            for (std::size_t i = 0; i < v; ++i) yr[i] += cache.ct(n, i) * sr[i];
        }
    }
    quantize(y);
    return y;
}

Tensor SelectiveSsmLayer::backward(ParamStore& store, const Cache& cache, const Tensor& dy) const {
    const std::size_t e = cfg_.channels, h = cfg_.state_dim;
    const std::size_t v = cache.u.cols();
    require_shape(dy, {e, v}, "selective ssm dy");

    const Tensor& a = store.value(p("A"));
    Tensor& da = store.grad(p("A"));
    Tensor du = zeros({e, v});
    Tensor ddelta = zeros({e, v});
    Tensor dbt = zeros({h, v});
    Tensor dct = zeros({h, v});

    std::vector<double> ds(h);
    for (std::size_t ch = 0; ch < e; ++ch) {
        std::fill(ds.begin(), ds.end(), 0.0);
        const double* dl = &cache.delta.data[ch * v];
        const double* ur = &cache.u.data[ch * v];
        const double* dyr = &dy.data[ch * v];
        double* dur = &du.data[ch * v];
        double* ddl = &ddelta.data[ch * v];
        for (std::size_t i = v; i-- > 0;) {
            const double g = dyr[i];
            for (std::size_t n = 0; n < h; ++n) {
                const double* sr = &cache.state.data[(ch * h + n) * v];
                const double ahat = cache.ahat.data[(ch * h + n) * v + i];
                const double an = a(ch, n);
                const double delta = dl[i];
                const double x = delta * an;
                const double gcoef = zoh_input_coeff(an, delta, ahat);

                ds[n] += cache.ct(n, i) * g;
                dct(n, i) += sr[i] * g;

                const double s_prev = i > 0 ? sr[i - 1] : 0.0;
                const double dahat = ds[n] * s_prev;
                const double dG = ds[n] * cache.bt(n, i) * ur[i];
                dbt(n, i) += ds[n] * gcoef * ur[i];
                dur[i] += ds[n] * gcoef * cache.bt(n, i);
                // dAhat/ddelta = a*ahat, dG/ddelta = ahat
                ddl[i] += dahat * an * ahat + dG * ahat;
                da(ch, n) += dahat * delta * ahat + dG * zoh_input_coeff_da(delta, x, ahat);
                ds[n] *= ahat;
            }
        }
        // softplus'(pre) = sigmoid(pre) = 1 - exp(-delta)
        for (std::size_t i = 0; i < v; ++i) ddl[i] *= 1.0 - std::exp(-dl[i]);
    }

    Tensor scratch_db_e = zeros({e}), scratch_db_h = zeros({h});
    du = add(du, linear_backward(cache.u, store.value(p("w_delta")), ddelta, store.grad(p("w_delta")),
                                 store.grad(p("b_delta"))));
    du = add(du, linear_backward(cache.u, store.value(p("w_B")), dbt, store.grad(p("w_B")), scratch_db_h));
    du = add(du, linear_backward(cache.u, store.value(p("w_C")), dct, store.grad(p("w_C")), scratch_db_h));
    quantize(du);
    return du;
}

} // namespace lwsm
