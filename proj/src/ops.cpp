#include "lwsm/ops.hpp"

#include <cmath>

#include "lwsm/errors.hpp"

namespace lwsm {

namespace {

void require_rank2(const Tensor& t, const char* what) {
    if (t.rank() != 2) throw DimensionError(std::string(what) + ": want rank 2, got " + t.shape_str());
}

// left padding for stride-1 modes
std::size_t pad_left_of(PadMode mode, std::size_t w) {
    return mode == PadMode::Causal ? w - 1 : (w - 1) / 2;
}

} // namespace

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    require_rank2(x, "linear x");
    require_rank2(w, "linear w");
    if (w.cols() != x.rows())
        throw DimensionError("linear: w " + w.shape_str() + " does not match x " + x.shape_str());
    if (b.rank() != 1 || b.rows() != w.rows())
        throw DimensionError("linear: bias " + b.shape_str() + " does not match w " + w.shape_str());
    const std::size_t fout = w.rows(), fin = w.cols(), t = x.cols();
    Tensor y({fout, t});
    for (std::size_t f = 0; f < fout; ++f) {
        double* yr = &y.data[f * t];
        for (std::size_t j = 0; j < t; ++j) yr[j] = b(f);
        for (std::size_t k = 0; k < fin; ++k) {
            const double wv = w(f, k);
            if (wv == 0.0) continue;
            const double* xr = &x.data[k * t];
            for (std::size_t j = 0; j < t; ++j) yr[j] += wv * xr[j];
        }
    }
    quantize(y);
    return y;
}

Tensor linear_backward(const Tensor& x, const Tensor& w, const Tensor& dy, Tensor& dw, Tensor& db) {
    const std::size_t fout = w.rows(), fin = w.cols(), t = x.cols();
    require_shape(dy, {fout, t}, "linear_backward dy");
    Tensor dx({fin, t});
    for (std::size_t f = 0; f < fout; ++f) {
        const double* dyr = &dy.data[f * t];
        double s = 0.0;
        for (std::size_t j = 0; j < t; ++j) s += dyr[j];
        db(f) += s;
        for (std::size_t k = 0; k < fin; ++k) {
            const double* xr = &x.data[k * t];
            double acc = 0.0;
            for (std::size_t j = 0; j < t; ++j) acc += dyr[j] * xr[j];
            dw(f, k) += acc;
            const double wv = w(f, k);
            double* dxr = &dx.data[k * t];
            for (std::size_t j = 0; j < t; ++j) dxr[j] += wv * dyr[j];
        }
    }
    quantize(dx);
    return dx;
}

Tensor conv1d_depthwise(const Tensor& x, const Tensor& kernel, PadMode mode, const Tensor* bias) {
    require_rank2(x, "conv1d x");
    require_rank2(kernel, "conv1d kernel");
    if (kernel.rows() != x.rows())
        throw DimensionError("conv1d: channels " + kernel.shape_str() + " vs " + x.shape_str());
    const std::size_t c = x.rows(), t = x.cols(), w = kernel.cols();
    if (w < 1) throw DimensionError("conv1d: empty kernel");
    if (w > t + (w - 1) + (mode == PadMode::Same ? w / 2 : 0))
        throw DimensionError("conv1d: kernel wider than padded input");
    const std::size_t pl = pad_left_of(mode, w);
    Tensor y({c, t});
    for (std::size_t ch = 0; ch < c; ++ch) {
        const double* xr = &x.data[ch * t];
        double* yr = &y.data[ch * t];
        const double b = bias ? (*bias)(ch) : 0.0;
        for (std::size_t j = 0; j < t; ++j) {
            double acc = b;
            for (std::size_t k = 0; k < w; ++k) {
                const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(j + k) - static_cast<std::ptrdiff_t>(pl);
                if (s >= 0 && s < static_cast<std::ptrdiff_t>(t)) acc += kernel(ch, k) * xr[s];
            }
            yr[j] = acc;
        }
    }
    quantize(y);
    return y;
}

Tensor conv1d_depthwise_backward(const Tensor& x, const Tensor& kernel, PadMode mode, const Tensor& dy,
                                 Tensor& dkernel, Tensor* dbias) {
    require_same_shape(dy, x, "conv1d_backward dy");
    const std::size_t c = x.rows(), t = x.cols(), w = kernel.cols();
    const std::size_t pl = pad_left_of(mode, w);
    Tensor dx({c, t});
    for (std::size_t ch = 0; ch < c; ++ch) {
        const double* xr = &x.data[ch * t];
        const double* dyr = &dy.data[ch * t];
        double* dxr = &dx.data[ch * t];
        if (dbias) {
            double s = 0.0;
            for (std::size_t j = 0; j < t; ++j) s += dyr[j];
            (*dbias)(ch) += s;
        }
        for (std::size_t j = 0; j < t; ++j) {
            const double g = dyr[j];
            for (std::size_t k = 0; k < w; ++k) {
                const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(j + k) - static_cast<std::ptrdiff_t>(pl);
                if (s >= 0 && s < static_cast<std::ptrdiff_t>(t)) {
                    dkernel(ch, k) += g * xr[s];
                    dxr[s] += g * kernel(ch, k);
                }
            }
        }
    }
    quantize(dx);
    return dx;
}

Tensor conv1d_full(const Tensor& x, const Tensor& kernel, const Tensor& bias, std::size_t stride, PadMode mode) {
    require_rank2(x, "conv1d_full x");
    if (kernel.rank() != 3) throw DimensionError("conv1d_full kernel: want rank 3, got " + kernel.shape_str());
    if (kernel.shape[1] != x.rows())
        throw DimensionError("conv1d_full: in channels " + kernel.shape_str() + " vs " + x.shape_str());
    if (stride < 1) throw DimensionError("conv1d_full: zero stride");
    if (mode == PadMode::Causal && stride != 1) throw DimensionError("conv1d_full: causal requires stride 1");
    const std::size_t cout = kernel.shape[0], cin = kernel.shape[1], w = kernel.shape[2], t = x.cols();
    const std::size_t tout = (t + stride - 1) / stride;
    std::size_t pl;
    if (mode == PadMode::Causal) {
        pl = w - 1;
    } else {
        const std::size_t span = (tout - 1) * stride + w;
        pl = (span > t ? span - t : 0) / 2;
    }
    Tensor y({cout, tout});
    for (std::size_t o = 0; o < cout; ++o) {
        for (std::size_t j = 0; j < tout; ++j) {
            double acc = bias(o);
            for (std::size_t c = 0; c < cin; ++c) {
                const double* xr = &x.data[c * t];
                for (std::size_t k = 0; k < w; ++k) {
                    const std::ptrdiff_t s =
                        static_cast<std::ptrdiff_t>(j * stride + k) - static_cast<std::ptrdiff_t>(pl);
                    if (s >= 0 && s < static_cast<std::ptrdiff_t>(t)) acc += kernel(o, c, k) * xr[s];
                }
            }
            y(o, j) = acc;
        }
    }
    quantize(y);
    return y;
}

Tensor conv1d_full_backward(const Tensor& x, const Tensor& kernel, std::size_t stride, PadMode mode,
                            const Tensor& dy, Tensor& dkernel, Tensor& dbias) {
    const std::size_t cout = kernel.shape[0], cin = kernel.shape[1], w = kernel.shape[2], t = x.cols();
    const std::size_t tout = (t + stride - 1) / stride;
    require_shape(dy, {cout, tout}, "conv1d_full_backward dy");
    std::size_t pl;
    if (mode == PadMode::Causal) {
        pl = w - 1;
    } else {
        const std::size_t span = (tout - 1) * stride + w;
        pl = (span > t ? span - t : 0) / 2;
    }
    Tensor dx({cin, t});
    for (std::size_t o = 0; o < cout; ++o) {
        for (std::size_t j = 0; j < tout; ++j) {
            const double g = dy(o, j);
            dbias(o) += g;
            if (g == 0.0) continue;
            for (std::size_t c = 0; c < cin; ++c) {
                const double* xr = &x.data[c * t];
                double* dxr = &dx.data[c * t];
                for (std::size_t k = 0; k < w; ++k) {
                    const std::ptrdiff_t s =
                        static_cast<std::ptrdiff_t>(j * stride + k) - static_cast<std::ptrdiff_t>(pl);
                    if (s >= 0 && s < static_cast<std::ptrdiff_t>(t)) {
                        dkernel(o, c, k) += g * xr[s];
                        dxr[s] += g * kernel(o, c, k);
                    }
                }
            }
        }
    }
    quantize(dx);
    return dx;
}

double sigmoid(double x) {
    if (x >= 0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

Tensor sigmoid(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.data) v = sigmoid(v);
    quantize(y);
    return y;
}

Tensor sigmoid_backward(const Tensor& y, const Tensor& dy) {
    require_same_shape(y, dy, "sigmoid_backward");
    Tensor dx = y;
    for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] = dy.data[i] * y.data[i] * (1.0 - y.data[i]);
    quantize(dx);
    return dx;
}

Tensor relu(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.data) v = v > 0.0 ? v : 0.0;
    return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& dy) {
    require_same_shape(x, dy, "relu_backward");
    Tensor dx = dy;
    for (std::size_t i = 0; i < dx.data.size(); ++i)
        if (x.data[i] <= 0.0) dx.data[i] = 0.0;
    return dx;
}

Tensor softplus(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.data) v = softplus(v);
    quantize(y);
    return y;
}

Tensor softplus_backward(const Tensor& x, const Tensor& dy) {
    require_same_shape(x, dy, "softplus_backward");
    Tensor dx = dy;
    for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] = dy.data[i] * sigmoid(x.data[i]);
    quantize(dx);
    return dx;
}

Tensor softmax(const Tensor& x, std::size_t axis) {
    require_rank2(x, "softmax");
    if (axis > 1) throw DimensionError("softmax: axis " + std::to_string(axis) + " out of range for rank 2");
    const std::size_t r = x.rows(), c = x.cols();
    Tensor y = x;
    const std::size_t slices = axis == 0 ? c : r;
    const std::size_t n = axis == 0 ? r : c;
    for (std::size_t s = 0; s < slices; ++s) {
        auto idx = [&](std::size_t i) { return axis == 0 ? i * c + s : s * c + i; };
        double mx = y.data[idx(0)];
        for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, y.data[idx(i)]);
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = std::exp(y.data[idx(i)] - mx);
            y.data[idx(i)] = e;
            sum += e;
        }
        for (std::size_t i = 0; i < n; ++i) y.data[idx(i)] /= sum;
    }
    quantize(y);
    return y;
}

Tensor softmax_backward(const Tensor& y, const Tensor& dy, std::size_t axis) {
    require_same_shape(y, dy, "softmax_backward");
    const std::size_t r = y.rows(), c = y.cols();
    Tensor dx = y;
    const std::size_t slices = axis == 0 ? c : r;
    const std::size_t n = axis == 0 ? r : c;
    for (std::size_t s = 0; s < slices; ++s) {
        auto idx = [&](std::size_t i) { return axis == 0 ? i * c + s : s * c + i; };
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += y.data[idx(i)] * dy.data[idx(i)];
        for (std::size_t i = 0; i < n; ++i) dx.data[idx(i)] = y.data[idx(i)] * (dy.data[idx(i)] - dot);
    }
    quantize(dx);
    return dx;
}

Tensor layer_norm(const Tensor& x, std::size_t axis, const Tensor& gain, const Tensor& bias, LayerNormCache& cache) {
    require_rank2(x, "layer_norm");
    if (axis > 1) throw DimensionError("layer_norm: axis out of range");
    const std::size_t r = x.rows(), c = x.cols();
    const std::size_t slices = axis == 0 ? c : r;
    const std::size_t n = axis == 0 ? r : c;
    if (gain.numel() != n || bias.numel() != n)
        throw DimensionError("layer_norm: gain/bias length vs normalized extent " + std::to_string(n));
    cache.mean = Tensor({slices});
    cache.invstd = Tensor({slices});
    Tensor y = x;
    for (std::size_t s = 0; s < slices; ++s) {
        auto idx = [&](std::size_t i) { return axis == 0 ? i * c + s : s * c + i; };
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += x.data[idx(i)];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = x.data[idx(i)] - mean;
            var += d * d;
        }
        var /= static_cast<double>(n);
        const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
        cache.mean(s) = mean;
        cache.invstd(s) = inv;
        for (std::size_t i = 0; i < n; ++i)
            y.data[idx(i)] = gain(i) * (x.data[idx(i)] - mean) * inv + bias(i);
    }
    quantize(y);
    return y;
}

Tensor layer_norm_backward(const Tensor& x, std::size_t axis, const Tensor& gain, const LayerNormCache& cache,
                           const Tensor& dy, Tensor& dgain, Tensor& dbias) {
    const std::size_t r = x.rows(), c = x.cols();
    const std::size_t slices = axis == 0 ? c : r;
    const std::size_t n = axis == 0 ? r : c;
    Tensor dx = x;
    for (std::size_t s = 0; s < slices; ++s) {
        auto idx = [&](std::size_t i) { return axis == 0 ? i * c + s : s * c + i; };
        const double mean = cache.mean(s), inv = cache.invstd(s);
        double m_dxhat = 0.0, m_dxhat_xhat = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double xhat = (x.data[idx(i)] - mean) * inv;
            const double dxhat = dy.data[idx(i)] * gain(i);
            dgain(i) += dy.data[idx(i)] * xhat;
            dbias(i) += dy.data[idx(i)];
            m_dxhat += dxhat;
            m_dxhat_xhat += dxhat * xhat;
        }
        m_dxhat /= static_cast<double>(n);
        m_dxhat_xhat /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double xhat = (x.data[idx(i)] - mean) * inv;
            const double dxhat = dy.data[idx(i)] * gain(i);
            dx.data[idx(i)] = inv * (dxhat - m_dxhat - xhat * m_dxhat_xhat);
        }
    }
    quantize(dx);
    return dx;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "hadamard");
    Tensor y = a;
    for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] *= b.data[i];
    quantize(y);
    return y;
}

Tensor avg_pool(const Tensor& x, std::size_t axis) {
    require_rank2(x, "avg_pool");
    if (axis > 1) throw DimensionError("avg_pool: axis out of range");
    const std::size_t r = x.rows(), c = x.cols();
    if (axis == 1) {
        Tensor y({r});
        for (std::size_t i = 0; i < r; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < c; ++j) s += x(i, j);
            y(i) = s / static_cast<double>(c);
        }
        quantize(y);
        return y;
    }
    Tensor y({c});
    for (std::size_t j = 0; j < c; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < r; ++i) s += x(i, j);
        y(j) = s / static_cast<double>(r);
    }
    quantize(y);
    return y;
}

Tensor reverse_time(const Tensor& x) {
    require_rank2(x, "reverse_time");
    const std::size_t r = x.rows(), c = x.cols();
    Tensor y({r, c});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) y(i, j) = x(i, c - 1 - j);
    return y;
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor y = a;
    for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += b.data[i];
    quantize(y);
    return y;
}

Tensor scale(const Tensor& a, double s) {
    Tensor y = a;
    for (double& v : y.data) v *= s;
    quantize(y);
    return y;
}

} // namespace lwsm
