#pragma once
#include <string>

#include "lwsm/ops.hpp"
#include "lwsm/param_store.hpp"

namespace lwsm {

enum class SoftmaxPlacement { TimePre, FeaturePost };

struct ExternalAttentionConfig {
    std::size_t width = 64; // N
    SoftmaxPlacement softmax_placement = SoftmaxPlacement::TimePre;
    bool residual = true;
};

// Temporal external attention: learned linear maps stand in for Keys and
// Values, the elementwise interaction of the input with the key map forms the
// attention weights.
class ExternalAttention {
public:
    ExternalAttention() = default;
    ExternalAttention(ParamStore& store, std::string prefix, ExternalAttentionConfig cfg, Rng& rng);

    struct Cache {
        Tensor input;   // Y [N,L]
        Tensor mk_pre;  // L_K(Y) before ReLU
        Tensor mk;      // relu output
        Tensor prod;    // Y ⊙ M_k
        Tensor attn;    // softmax weights (TimePre) or value pre-softmax (FeaturePost)
        Tensor applied; // attn ⊙ Y (TimePre only)
        Tensor mv;      // value map output
    };

    Tensor forward(const ParamStore& store, const Tensor& y, Cache& cache) const;
    Tensor backward(ParamStore& store, const Cache& cache, const Tensor& dz) const;

    const ExternalAttentionConfig& config() const { return cfg_; }

private:
    std::string p(const char* n) const { return prefix_ + n; }
    std::string prefix_;
    ExternalAttentionConfig cfg_;
};

} // namespace lwsm
