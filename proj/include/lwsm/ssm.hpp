#pragma once
#include <string>
#include <utility>

#include "lwsm/param_store.hpp"
#include "lwsm/rng.hpp"
#include "lwsm/tensor.hpp"

namespace lwsm {

// ZOH step for one diagonal state entry: ahat = exp(delta*a),
// bhat = (exp(delta*a)-1)/a * b, with the a -> 0 limit delta*b.
void discretize(double a, double b, double delta, double& ahat, double& bhat);
std::pair<Tensor, Tensor> discretize(const Tensor& a, const Tensor& b, double delta);

// s_t = a_t * s_{t-1} + b_t with s_0 = a_0 * 0 + b_0; inclusive states in s.
void linear_recurrence(std::size_t n, const double* a, const double* b, double* s);
// same result via blocked composition of the affine step operators
void linear_scan(std::size_t n, const double* a, const double* b, double* s);

// Single-channel selective SSM with per-step delta[T], B[H x T], C[H x T].
// The recurrence form is the permanent test oracle; scan is the fast path.
Tensor ssm_recurrence(const Tensor& u, const Tensor& a, const Tensor& delta, const Tensor& b, const Tensor& c);
Tensor ssm_scan(const Tensor& u, const Tensor& a, const Tensor& delta, const Tensor& b, const Tensor& c);

struct SelectiveSsmConfig {
    std::size_t channels = 1;  // E
    std::size_t state_dim = 16; // H
};

// E-channel selective SSM layer: delta/B/C are projections of the input at
// each timestep, A is per-channel diagonal (independent across channels).
class SelectiveSsmLayer {
public:
    SelectiveSsmLayer() = default;
    SelectiveSsmLayer(ParamStore& store, std::string prefix, SelectiveSsmConfig cfg, Rng& rng);

    struct Cache {
        Tensor u;     // [E,V]
        Tensor delta; // [E,V]
        Tensor bt;    // [H,V]
        Tensor ct;    // [H,V]
        Tensor ahat;  // [E,H,V]
        Tensor state; // [E,H,V]
    };

    Tensor forward(const ParamStore& store, const Tensor& u, Cache& cache, bool use_scan = true) const;
    // returns du; accumulates parameter gradients
    Tensor backward(ParamStore& store, const Cache& cache, const Tensor& dy) const;

    const SelectiveSsmConfig& config() const { return cfg_; }

private:
    std::string p(const char* n) const { return prefix_ + n; }
    std::string prefix_;
    SelectiveSsmConfig cfg_;
};

} // namespace lwsm
