#pragma once
#include <vector>

#include "lwsm/attention.hpp"
#include "lwsm/config.hpp"
#include "lwsm/dualpath.hpp"
#include "lwsm/head.hpp"
#include "lwsm/param_store.hpp"

namespace lwsm {

// Encoder -> dual-path Bi-Mamba -> external attention -> prediction head.
// Owns the parameter store; one instance maps a mono sample buffer to a raw
// severity score.
class Model {
public:
    explicit Model(const ModelConfig& cfg);

    struct Cache {
        Encoder::Cache enc;
        DualPathModule::Cache dp;
        ExternalAttention::Cache ea;
        PredictionHead::Cache head;
    };

    double forward(const std::vector<double>& samples, Cache& cache, bool use_scan = true) const;
    double forward(const std::vector<double>& samples) const;
    void backward(const Cache& cache, double dscore);

    ParamStore& store() { return store_; }
    const ParamStore& store() const { return store_; }
    const ModelConfig& config() const { return cfg_; }
    const PredictionHead& head() const { return head_; }

private:
    ModelConfig cfg_;
    ParamStore store_;
    Encoder encoder_;
    DualPathModule dualpath_;
    ExternalAttention attention_;
    PredictionHead head_;
};

} // namespace lwsm
