#pragma once
#include <string>
#include <vector>

#include "lwsm/bimamba.hpp"
#include "lwsm/ops.hpp"
#include "lwsm/param_store.hpp"

namespace lwsm {

// 3-D view [N x K x S] of a 2-D sequence, 50% overlapping chunks with zero
// tail padding.
struct ChunkedTensor {
    Tensor data;        // [N,K,S]
    std::size_t chunk_len = 0; // K
    std::size_t hop = 0;       // P
    std::size_t length = 0;    // original L
    std::size_t pad = 0;
};

ChunkedTensor segment(const Tensor& x, std::size_t chunk_len, std::size_t hop);
Tensor merge(const ChunkedTensor& c);

// adjoints for backprop
Tensor segment_backward(const ChunkedTensor& dchunks);             // -> d[N,L]
ChunkedTensor merge_backward(const Tensor& dx, const ChunkedTensor& like);

struct EncoderConfig {
    std::size_t width = 16;
    std::size_t stride = 8;
    std::size_t channels = 64; // N
};

// Conv front end mapping mono samples to the N x L feature sequence.
class Encoder {
public:
    Encoder() = default;
    Encoder(ParamStore& store, std::string prefix, EncoderConfig cfg, Rng& rng);

    struct Cache {
        Tensor input;    // [1,T]
        Tensor conv_out; // pre-ReLU
    };
    Tensor forward(const ParamStore& store, const std::vector<double>& samples, Cache& cache) const;
    void backward(ParamStore& store, const Cache& cache, const Tensor& dy) const;

    std::size_t output_length(std::size_t samples) const { return (samples + cfg_.stride - 1) / cfg_.stride; }
    const EncoderConfig& config() const { return cfg_; }

private:
    std::string p(const char* n) const { return prefix_ + n; }
    std::string prefix_;
    EncoderConfig cfg_;
};

struct DualPathConfig {
    std::size_t width = 64;     // N
    std::size_t chunk_len = 244; // K, even
    std::size_t repeats = 1;    // R
    BiMambaConfig block;        // width is overwritten with N
};

// Long-sequence modelling: segment, alternate intra-chunk and inter-chunk
// Bi-Mamba blocks, overlap-add merge. Output shape equals input shape.
class DualPathModule {
public:
    DualPathModule() = default;
    DualPathModule(ParamStore& store, std::string prefix, DualPathConfig cfg, Rng& rng);

    struct Cache {
        ChunkedTensor chunks; // segmentation result and metadata
        // per repeat: intra caches per chunk, inter caches per position
        std::vector<std::vector<BiMambaBlock::Cache>> intra, inter;
    };

    Tensor forward(const ParamStore& store, const Tensor& x, Cache& cache, bool use_scan = true) const;
    Tensor backward(ParamStore& store, const Cache& cache, const Tensor& dy) const;

    const DualPathConfig& config() const { return cfg_; }
    const BiMambaBlock& intra_block(std::size_t r) const { return intra_.at(r); }
    const BiMambaBlock& inter_block(std::size_t r) const { return inter_.at(r); }

private:
    DualPathConfig cfg_;
    std::vector<BiMambaBlock> intra_, inter_;
};

} // namespace lwsm
