#pragma once
#include "lwsm/tensor.hpp"

namespace lwsm {

enum class PadMode { Causal, Same };

// y[f,t] = sum_k w[f,k] x[k,t] + b[f]
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);
// returns dx; accumulates into dw, db
Tensor linear_backward(const Tensor& x, const Tensor& w, const Tensor& dy, Tensor& dw, Tensor& db);

// channel-wise sliding dot product, output length preserved
Tensor conv1d_depthwise(const Tensor& x, const Tensor& kernel, PadMode mode, const Tensor* bias = nullptr);
Tensor conv1d_depthwise_backward(const Tensor& x, const Tensor& kernel, PadMode mode, const Tensor& dy,
                                 Tensor& dkernel, Tensor* dbias = nullptr);

// channel-mixing conv with stride; kernel [Cout x Cin x W]
Tensor conv1d_full(const Tensor& x, const Tensor& kernel, const Tensor& bias, std::size_t stride, PadMode mode);
Tensor conv1d_full_backward(const Tensor& x, const Tensor& kernel, std::size_t stride, PadMode mode,
                            const Tensor& dy, Tensor& dkernel, Tensor& dbias);

Tensor sigmoid(const Tensor& x);
Tensor sigmoid_backward(const Tensor& y, const Tensor& dy); // y = sigmoid output
Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& dy);
Tensor softplus(const Tensor& x);
Tensor softplus_backward(const Tensor& x, const Tensor& dy);

double sigmoid(double x);
double softplus(double x);

// axis 0: normalize each column; axis 1: each row (rank-2 only)
Tensor softmax(const Tensor& x, std::size_t axis);
Tensor softmax_backward(const Tensor& y, const Tensor& dy, std::size_t axis);

struct LayerNormCache {
    Tensor mean;
    Tensor invstd;
};
inline constexpr double kLayerNormEps = 1e-5;
Tensor layer_norm(const Tensor& x, std::size_t axis, const Tensor& gain, const Tensor& bias, LayerNormCache& cache);
Tensor layer_norm_backward(const Tensor& x, std::size_t axis, const Tensor& gain, const LayerNormCache& cache,
                           const Tensor& dy, Tensor& dgain, Tensor& dbias);

Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor avg_pool(const Tensor& x, std::size_t axis); // mean along axis, rank-2 -> rank-1
Tensor reverse_time(const Tensor& x);               // rank-2, flips axis 1

Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);

} // namespace lwsm
