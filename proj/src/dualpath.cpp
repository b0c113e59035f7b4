#include "lwsm/dualpath.hpp"

#include <cmath>

#include "lwsm/errors.hpp"

namespace lwsm {

namespace {

std::size_t padded_length(std::size_t l, std::size_t k, std::size_t p) {
    std::size_t lp = std::max(l, k);
    const std::size_t rem = (lp - k) % p;
    if (rem != 0) lp += p - rem;
    return lp;
}

Tensor chunk_slice(const Tensor& data, std::size_t s) { // [N,K,S] -> [N,K]
    const std::size_t n = data.shape[0], k = data.shape[1];
    Tensor out({n, k});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) out(i, j) = data(i, j, s);
    return out;
}

void chunk_store(Tensor& data, std::size_t s, const Tensor& v) {
    const std::size_t n = data.shape[0], k = data.shape[1];
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < k; ++j) data(i, j, s) = v(i, j);
}

Tensor position_slice(const Tensor& data, std::size_t k) { // [N,K,S] -> [N,S]
    const std::size_t n = data.shape[0], s = data.shape[2];
    Tensor out({n, s});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < s; ++j) out(i, j) = data(i, k, j);
    return out;
}

void position_store(Tensor& data, std::size_t k, const Tensor& v) {
    const std::size_t n = data.shape[0], s = data.shape[2];
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < s; ++j) data(i, k, j) = v(i, j);
}

} // namespace

ChunkedTensor segment(const Tensor& x, std::size_t chunk_len, std::size_t hop) {
    if (x.rank() != 2) throw DimensionError("segment: want rank 2, got " + x.shape_str());
    if (chunk_len < 2) throw ConfigError("segment: chunk length must be >= 2");
    if (chunk_len % 2 != 0) throw ConfigError("segment: chunk length must be even, got " + std::to_string(chunk_len));
    if (hop < 1 || hop > chunk_len) throw ConfigError("segment: hop must be in [1, K]");
    const std::size_t n = x.rows(), l = x.cols();
    const std::size_t lp = padded_length(l, chunk_len, hop);
    const std::size_t s = (lp - chunk_len) / hop + 1;

    ChunkedTensor c;
    c.chunk_len = chunk_len;
    c.hop = hop;
    c.length = l;
    c.pad = lp - l;
    c.data = Tensor({n, chunk_len, s});
    for (std::size_t ch = 0; ch < s; ++ch)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < chunk_len; ++j) {
                const std::size_t pos = ch * hop + j;
                c.data(i, j, ch) = pos < l ? x(i, pos) : 0.0;
            }
    return c;
}

Tensor merge(const ChunkedTensor& c) {
    const std::size_t n = c.data.shape[0], k = c.data.shape[1], s = c.data.shape[2];
    if (k != c.chunk_len || (s - 1) * c.hop + k != c.length + c.pad)
        throw DataError("merge: chunk metadata inconsistent with data shape " + c.data.shape_str());
    const std::size_t lp = c.length + c.pad;
    std::vector<double> count(lp, 0.0);
    for (std::size_t ch = 0; ch < s; ++ch)
        for (std::size_t j = 0; j < k; ++j) count[ch * c.hop + j] += 1.0;

    Tensor x({n, c.length});
    // fixed accumulation order keeps the merge bit-reproducible
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t ch = 0; ch < s; ++ch)
            for (std::size_t j = 0; j < k; ++j) {
                const std::size_t pos = ch * c.hop + j;
                if (pos < c.length) x(i, pos) += c.data(i, j, ch);
            }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t pos = 0; pos < c.length; ++pos) x(i, pos) /= count[pos];
    quantize(x);
    return x;
}

Tensor segment_backward(const ChunkedTensor& dchunks) {
    const std::size_t n = dchunks.data.shape[0], k = dchunks.data.shape[1], s = dchunks.data.shape[2];
    Tensor dx({n, dchunks.length});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t ch = 0; ch < s; ++ch)
            for (std::size_t j = 0; j < k; ++j) {
                const std::size_t pos = ch * dchunks.hop + j;
                if (pos < dchunks.length) dx(i, pos) += dchunks.data(i, j, ch);
            }
    return dx;
}

ChunkedTensor merge_backward(const Tensor& dx, const ChunkedTensor& like) {
    const std::size_t n = like.data.shape[0], k = like.data.shape[1], s = like.data.shape[2];
    const std::size_t lp = like.length + like.pad;
    std::vector<double> count(lp, 0.0);
    for (std::size_t ch = 0; ch < s; ++ch)
        for (std::size_t j = 0; j < k; ++j) count[ch * like.hop + j] += 1.0;

    ChunkedTensor dc = like;
    dc.data.fill(0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t ch = 0; ch < s; ++ch)
            for (std::size_t j = 0; j < k; ++j) {
                const std::size_t pos = ch * like.hop + j;
                if (pos < like.length) dc.data(i, j, ch) = dx(i, pos) / count[pos];
            }
    return dc;
}

Encoder::Encoder(ParamStore& store, std::string prefix, EncoderConfig cfg, Rng& rng)
    : prefix_(std::move(prefix)), cfg_(cfg) {
    // sized for roughly unit-variance activations at typical speech levels
    // (sample RMS ~0.1), so the residual path competes with layer-normed
    // block outputs downstream
    constexpr double kAudioRms = 0.1;
    const double s = std::sqrt(3.0 / static_cast<double>(cfg_.width)) / kAudioRms;
    store.add(p("kernel"), random_uniform({cfg_.channels, 1, cfg_.width}, -s, s, rng));
    store.add(p("bias"), zeros({cfg_.channels}));
}

Tensor Encoder::forward(const ParamStore& store, const std::vector<double>& samples, Cache& cache) const {
    if (samples.empty()) throw DataError("encoder: empty sample array");
    cache.input = Tensor({1, samples.size()}, samples);
    cache.conv_out = conv1d_full(cache.input, store.value(p("kernel")), store.value(p("bias")), cfg_.stride,
                                 PadMode::Same);
    Tensor y = relu(cache.conv_out);
    require_finite(y, "encoder");
    return y;
}

void Encoder::backward(ParamStore& store, const Cache& cache, const Tensor& dy) const {
    Tensor dconv = relu_backward(cache.conv_out, dy);
    conv1d_full_backward(cache.input, store.value(p("kernel")), cfg_.stride, PadMode::Same, dconv,
                         store.grad(p("kernel")), store.grad(p("bias")));
}

DualPathModule::DualPathModule(ParamStore& store, std::string prefix, DualPathConfig cfg, Rng& rng) : cfg_(cfg) {
    if (cfg_.repeats < 1) throw ConfigError("dualpath: repeats must be >= 1");
    cfg_.block.width = cfg_.width;
    for (std::size_t r = 0; r < cfg_.repeats; ++r) {
        intra_.emplace_back(store, prefix + "r" + std::to_string(r) + ".intra.", cfg_.block, rng);
        inter_.emplace_back(store, prefix + "r" + std::to_string(r) + ".inter.", cfg_.block, rng);
    }
}

Tensor DualPathModule::forward(const ParamStore& store, const Tensor& x, Cache& cache, bool use_scan) const {
    if (x.rank() != 2 || x.rows() != cfg_.width)
        throw DimensionError("dualpath: input " + x.shape_str() + " vs width " + std::to_string(cfg_.width));
    cache.chunks = segment(x, cfg_.chunk_len, cfg_.chunk_len / 2);
    Tensor data = cache.chunks.data;
    const std::size_t k = data.shape[1], s = data.shape[2];

    cache.intra.assign(cfg_.repeats, {});
    cache.inter.assign(cfg_.repeats, {});
    for (std::size_t r = 0; r < cfg_.repeats; ++r) {
        cache.intra[r].resize(s);
        for (std::size_t ch = 0; ch < s; ++ch)
            chunk_store(data, ch, intra_[r].forward(store, chunk_slice(data, ch), cache.intra[r][ch], use_scan));
        cache.inter[r].resize(k);
        for (std::size_t pos = 0; pos < k; ++pos)
            position_store(data, pos, inter_[r].forward(store, position_slice(data, pos), cache.inter[r][pos], use_scan));
    }
    ChunkedTensor out = cache.chunks;
    out.data = std::move(data);
    return merge(out);
}

Tensor DualPathModule::backward(ParamStore& store, const Cache& cache, const Tensor& dy) const {
    ChunkedTensor dc = merge_backward(dy, cache.chunks);
    Tensor ddata = std::move(dc.data);
    const std::size_t k = cache.chunks.data.shape[1], s = cache.chunks.data.shape[2];

    for (std::size_t r = cfg_.repeats; r-- > 0;) {
        for (std::size_t pos = k; pos-- > 0;)
            position_store(ddata, pos, inter_[r].backward(store, cache.inter[r][pos], position_slice(ddata, pos)));
        for (std::size_t ch = s; ch-- > 0;)
            chunk_store(ddata, ch, intra_[r].backward(store, cache.intra[r][ch], chunk_slice(ddata, ch)));
    }
    ChunkedTensor dseg = cache.chunks;
    dseg.data = std::move(ddata);
    return segment_backward(dseg);
}

} // namespace lwsm
