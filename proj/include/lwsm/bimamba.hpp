#pragma once
#include <string>

#include "lwsm/ops.hpp"
#include "lwsm/param_store.hpp"
#include "lwsm/rng.hpp"
#include "lwsm/ssm.hpp"

namespace lwsm {

struct BiMambaConfig {
    std::size_t width = 16;      // N; expanded width E = 2N
    std::size_t conv_width = 4;  // depthwise causal conv
    std::size_t state_dim = 16;  // H per SSM
    bool residual = true;
};

// Bidirectional Mamba block: dual FC projections, gated anterior/posterior
// depthwise convolutions feeding selective SSMs, z-gating, swap-and-average
// fusion, output projection, layer norm, optional residual.
// The posterior path runs on the time-reversed stream and is swapped back.
class BiMambaBlock {
public:
    BiMambaBlock() = default;
    BiMambaBlock(ParamStore& store, std::string prefix, BiMambaConfig cfg, Rng& rng);

    struct Cache {
        Tensor input;          // [N,V]
        Tensor i, z;           // [E,V]
        Tensor i_rev;          // [E,V]
        Tensor g_a, g_p;       // sigmoid conv outputs
        Tensor gz_a, gz_p;     // sigmoid gates of z / reversed z
        Tensor sa, sp;         // SSM outputs
        Tensor fused;          // (j+ + swap(j-))/2
        Tensor out_pre;        // before layer norm
        SelectiveSsmLayer::Cache ssm_a, ssm_p;
        LayerNormCache ln;
    };

    Tensor forward(const ParamStore& store, const Tensor& input, Cache& cache, bool use_scan = true) const;
    Tensor backward(ParamStore& store, const Cache& cache, const Tensor& dy) const;

    const BiMambaConfig& config() const { return cfg_; }
    const std::string& prefix() const { return prefix_; }

private:
    std::string p(const char* n) const { return prefix_ + n; }
    std::string prefix_;
    BiMambaConfig cfg_;
    SelectiveSsmLayer ssm_a_, ssm_p_;
};

} // namespace lwsm
