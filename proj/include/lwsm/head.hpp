#pragma once
#include <string>

#include "lwsm/ops.hpp"
#include "lwsm/param_store.hpp"

namespace lwsm {

struct PredictionHeadConfig {
    std::size_t width = 64;     // N; halved twice by the convs
    std::size_t conv_width = 3;
    std::size_t hidden = 32;    // FC bottleneck
};

// Two stride-1 convs that shrink the feature dimension, global average
// pooling over time, then a small FC stack producing one raw score.
class PredictionHead {
public:
    PredictionHead() = default;
    PredictionHead(ParamStore& store, std::string prefix, PredictionHeadConfig cfg, Rng& rng);

    struct Cache {
        Tensor input;
        Tensor conv1_pre, act1;
        Tensor conv2_pre, act2;
        Tensor pooled;   // [N/4, 1]
        Tensor fc1_pre, act3;
    };

    double forward(const ParamStore& store, const Tensor& y, Cache& cache) const;
    Tensor backward(ParamStore& store, const Cache& cache, double dscore) const;

    const PredictionHeadConfig& config() const { return cfg_; }
    std::string bias_name() const { return prefix_ + "fc2_b"; }

private:
    std::string p(const char* n) const { return prefix_ + n; }
    std::string prefix_;
    PredictionHeadConfig cfg_;
};

// scores are reported on the scale of the rating instrument
double clamp_report(double score);

} // namespace lwsm
