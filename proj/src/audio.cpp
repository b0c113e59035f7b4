#include "lwsm/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>

#include "lwsm/errors.hpp"

namespace lwsm {

namespace {

std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError("truncated WAV header");
    return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint16_t read_u16(std::istream& in) {
    unsigned char b[2];
    if (!in.read(reinterpret_cast<char*>(b), 2)) throw FormatError("truncated WAV header");
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u16(std::ostream& out, std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
    out.write(reinterpret_cast<const char*>(b), 2);
}

// I0 Bessel series for the Kaiser window
double bessel_i0(double x) {
    double sum = 1.0, term = 1.0;
    for (int k = 1; k < 64; ++k) {
        term *= (x / (2.0 * k)) * (x / (2.0 * k));
        sum += term;
        if (term < 1e-16 * sum) break;
    }
    return sum;
}

} // namespace

AudioBuffer read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open WAV file: " + path);
    char tag[4];
    if (!in.read(tag, 4) || std::memcmp(tag, "RIFF", 4) != 0) throw FormatError("not a RIFF file: " + path);
    read_u32(in); // riff size
    if (!in.read(tag, 4) || std::memcmp(tag, "WAVE", 4) != 0) throw FormatError("not a WAVE file: " + path);

    std::uint16_t channels = 0, bits = 0;
    std::uint32_t rate = 0;
    bool have_fmt = false;
    AudioBuffer buf;
    while (in.read(tag, 4)) {
        const std::uint32_t size = read_u32(in);
        if (std::memcmp(tag, "fmt ", 4) == 0) {
            const std::uint16_t format = read_u16(in);
            channels = read_u16(in);
            rate = read_u32(in);
            read_u32(in); // byte rate
            read_u16(in); // block align
            bits = read_u16(in);
            if (size > 16) in.ignore(size - 16);
            if (format != 1) throw FormatError("only PCM WAV is supported: " + path);
            if (bits != 16) throw FormatError("only 16-bit WAV is supported: " + path);
            if (channels == 0 || channels > 2) throw FormatError("unsupported channel count: " + path);
            have_fmt = true;
        } else if (std::memcmp(tag, "data", 4) == 0) {
            if (!have_fmt) throw FormatError("WAV data chunk precedes fmt chunk: " + path);
            const std::size_t frames = size / (2u * channels);
            buf.samples.resize(frames);
            std::vector<char> raw(size);
            if (!in.read(raw.data(), size)) throw FormatError("truncated WAV data: " + path);
            for (std::size_t i = 0; i < frames; ++i) {
                double acc = 0.0;
                for (std::uint16_t c = 0; c < channels; ++c) {
                    const std::size_t off = 2 * (i * channels + c);
                    const std::int16_t s = static_cast<std::int16_t>(
                        static_cast<unsigned char>(raw[off]) | (static_cast<unsigned char>(raw[off + 1]) << 8));
                    acc += s;
                }
                buf.samples[i] = acc / (channels * 32768.0);
            }
            buf.sample_rate = rate;
            return buf;
        } else {
            in.ignore(size + (size & 1));
        }
    }
    throw FormatError("WAV file has no data chunk: " + path);
}

void write_wav(const std::string& path, const std::vector<double>& samples, std::size_t sample_rate) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open WAV file for writing: " + path);
    const std::uint32_t data_size = static_cast<std::uint32_t>(samples.size() * 2);
    out.write("RIFF", 4);
    write_u32(out, 36 + data_size);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    write_u32(out, 16);
    write_u16(out, 1); // PCM
    write_u16(out, 1); // mono
    write_u32(out, static_cast<std::uint32_t>(sample_rate));
    write_u32(out, static_cast<std::uint32_t>(sample_rate * 2));
    write_u16(out, 2);
    write_u16(out, 16);
    out.write("data", 4);
    write_u32(out, data_size);
    for (double v : samples) {
        // the 1/32768 read scaling makes this an exact inverse for int16 data
        const double scaled = std::clamp(std::round(v * 32768.0), -32768.0, 32767.0);
        const std::int16_t s = static_cast<std::int16_t>(scaled);
        write_u16(out, static_cast<std::uint16_t>(s));
    }
    if (!out) throw DataError("WAV write failed: " + path);
}

std::vector<double> resample(const std::vector<double>& samples, std::size_t from_rate, std::size_t to_rate) {
    if (from_rate == 0 || to_rate == 0) throw DataError("resample: zero sample rate");
    if (from_rate == to_rate) return samples;

    constexpr int kHalfTaps = 32; // 64-tap kernel
    constexpr double kBeta = 8.6;
    const double ratio = static_cast<double>(to_rate) / static_cast<double>(from_rate);
    const double cutoff = std::min(1.0, ratio); // anti-alias when downsampling
    const double i0_beta = bessel_i0(kBeta);

    const std::size_t out_len = static_cast<std::size_t>(
        std::ceil(static_cast<double>(samples.size()) * ratio));
    std::vector<double> out(out_len, 0.0);
    for (std::size_t i = 0; i < out_len; ++i) {
        const double centre = static_cast<double>(i) / ratio;
        const long first = static_cast<long>(std::floor(centre)) - kHalfTaps + 1;
        double acc = 0.0, wsum = 0.0;
        for (long j = first; j < first + 2 * kHalfTaps; ++j) {
            const double x = (centre - static_cast<double>(j)) * cutoff;
            const double sinc = x == 0.0 ? 1.0 : std::sin(M_PI * x) / (M_PI * x);
            const double frac = (centre - static_cast<double>(j)) / kHalfTaps;
            if (std::fabs(frac) >= 1.0) continue;
            const double window = bessel_i0(kBeta * std::sqrt(1.0 - frac * frac)) / i0_beta;
            const double w = sinc * window * cutoff;
            wsum += w;
            if (j >= 0 && j < static_cast<long>(samples.size())) acc += w * samples[static_cast<std::size_t>(j)];
        }
        // normalizing by the tap sum pins DC gain to exactly 1
        out[i] = wsum != 0.0 ? acc / wsum : 0.0;
    }
    return out;
}

} // namespace lwsm
