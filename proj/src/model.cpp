#include "lwsm/model.hpp"

namespace lwsm {

namespace {

DualPathConfig dp_config(const ModelConfig& cfg) {
    DualPathConfig dp;
    dp.width = cfg.feature_dim;
    dp.chunk_len = cfg.chunk_len;
    dp.repeats = cfg.dp_repeats;
    dp.block.width = cfg.feature_dim;
    dp.block.conv_width = cfg.conv_width;
    dp.block.state_dim = cfg.state_dim;
    dp.block.residual = cfg.bimamba_residual;
    return dp;
}

} // namespace

Model::Model(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    set_precision(cfg_.precision == "f32" ? Precision::F32 : Precision::F64);
    Rng rng(cfg_.seed);
    encoder_ = Encoder(store_, "enc.", {cfg_.encoder_width, cfg_.encoder_stride, cfg_.feature_dim}, rng);
    dualpath_ = DualPathModule(store_, "dp.", dp_config(cfg_), rng);
    attention_ = ExternalAttention(store_, "ea.", {cfg_.feature_dim, cfg_.ea_softmax, cfg_.ea_residual}, rng);
    head_ = PredictionHead(store_, "head.", {cfg_.feature_dim, cfg_.head_conv_width, cfg_.head_hidden}, rng);
}

double Model::forward(const std::vector<double>& samples, Cache& cache, bool use_scan) const {
    Tensor enc = encoder_.forward(store_, samples, cache.enc);
    Tensor dp = dualpath_.forward(store_, enc, cache.dp, use_scan);
    Tensor ea = attention_.forward(store_, dp, cache.ea);
    return head_.forward(store_, ea, cache.head);
}

double Model::forward(const std::vector<double>& samples) const {
    Cache cache;
    return forward(samples, cache);
}

void Model::backward(const Cache& cache, double dscore) {
    Tensor dea = head_.backward(store_, cache.head, dscore);
    Tensor ddp = attention_.backward(store_, cache.ea, dea);
    Tensor denc = dualpath_.backward(store_, cache.dp, ddp);
    encoder_.backward(store_, cache.enc, denc);
}

} // namespace lwsm
