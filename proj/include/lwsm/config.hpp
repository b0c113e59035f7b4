#pragma once
#include <cstdint>
#include <string>

#include "lwsm/attention.hpp"

namespace lwsm {

// One flat key=value config covering the model and the trainer. Unknown keys
// are rejected so typos fail loudly.
struct ModelConfig {
    std::string precision = "f64"; // f64 | f32
    std::uint64_t seed = 1;
    std::size_t sample_rate = 8000;
    double window_s = 50.0; // segmentation window in seconds

    std::size_t encoder_width = 16;
    std::size_t encoder_stride = 8;
    std::size_t feature_dim = 64; // N
    std::size_t chunk_len = 244;  // K
    std::size_t dp_repeats = 1;   // R
    std::size_t conv_width = 4;   // Bi-Mamba depthwise conv
    std::size_t state_dim = 16;   // H
    bool bimamba_residual = true;
    SoftmaxPlacement ea_softmax = SoftmaxPlacement::TimePre;
    bool ea_residual = true;
    std::size_t head_conv_width = 3;
    std::size_t head_hidden = 32;

    double lr = 0.002;
    std::size_t epochs = 100;
    double grad_clip = 5.0;

    void validate() const; // throws ConfigError

    // canonical text: every key once, fixed order
    std::string serialize() const;
    // hash of the architecture-affecting keys only
    std::uint64_t fingerprint() const;

    static ModelConfig parse(const std::string& text);
    static ModelConfig load(const std::string& path);
};

} // namespace lwsm
