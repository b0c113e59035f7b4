#include "lwsm/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "lwsm/errors.hpp"

namespace lwsm {

namespace {

constexpr char kMagic[4] = {'L', 'W', 'S', 'M'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

void write_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    write_u64(out, bits);
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw CheckpointError("truncated checkpoint");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t read_u64(std::istream& in) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw CheckpointError("truncated checkpoint");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

double read_f64(std::istream& in) {
    const std::uint64_t bits = read_u64(in);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

} // namespace

void save_checkpoint(const std::string& path, const Model& model) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot open for writing: " + path);
    out.write(kMagic, 4);
    write_u32(out, kVersion);
    write_u64(out, model.config().fingerprint());
    const std::string cfg = model.config().serialize();
    write_u32(out, static_cast<std::uint32_t>(cfg.size()));
    out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));

    const ParamStore& store = model.store();
    write_u32(out, static_cast<std::uint32_t>(store.size()));
    for (const auto& name : store.names()) {
        const Tensor& t = store.value(name);
        write_u32(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_u32(out, static_cast<std::uint32_t>(t.rank()));
        for (std::size_t e : t.shape) write_u64(out, e);
        for (double v : t.data) write_f64(out, v);
    }
    if (!out) throw CheckpointError("write failed: " + path);
}

Model load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open: " + path);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw CheckpointError("bad magic in " + path);
    const std::uint32_t version = read_u32(in);
    if (version != kVersion)
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    const std::uint64_t fp = read_u64(in);
    const std::uint32_t cfg_len = read_u32(in);
    std::string cfg_text(cfg_len, '\0');
    if (!in.read(cfg_text.data(), cfg_len)) throw CheckpointError("truncated checkpoint");
    const ModelConfig cfg = ModelConfig::parse(cfg_text);
    if (cfg.fingerprint() != fp)
        throw CheckpointError("config fingerprint mismatch in " + path);

    Model model(cfg);
    ParamStore& store = model.store();
    const std::uint32_t count = read_u32(in);
    if (count != store.size())
        throw CheckpointError("parameter count mismatch: file has " + std::to_string(count) + ", model expects " +
                              std::to_string(store.size()));
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = read_u32(in);
        std::string name(name_len, '\0');
        if (!in.read(name.data(), name_len)) throw CheckpointError("truncated checkpoint");
        if (!store.has(name)) throw CheckpointError("unknown parameter in checkpoint: " + name);
        Tensor& t = store.value(name);
        const std::uint32_t rank = read_u32(in);
        if (rank != t.rank()) throw CheckpointError("rank mismatch for parameter " + name);
        for (std::size_t d = 0; d < rank; ++d)
            if (read_u64(in) != t.shape[d]) throw CheckpointError("shape mismatch for parameter " + name);
        for (double& v : t.data) v = read_f64(in);
    }
    return model;
}

} // namespace lwsm
