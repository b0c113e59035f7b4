#include "lwsm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "lwsm/audio.hpp"
#include "lwsm/dataset.hpp"
#include "lwsm/errors.hpp"
#include "lwsm/rng.hpp"

namespace lwsm {

std::vector<double> synth_recording(std::uint64_t seed, std::uint64_t subject, std::uint64_t index, double score,
                                    double duration_s, std::size_t sample_rate) {
    Rng rng(Rng::mix(Rng::mix(seed, subject), index));
    const std::size_t n = static_cast<std::size_t>(duration_s * static_cast<double>(sample_rate) + 0.5);
    std::vector<double> out(n, 0.0);

    const double sev = score / 63.0;
    // higher severity: longer pauses, quieter voice, slower syllable rate,
    // duller spectrum
    const double pause_ratio = 0.1 + 0.7 * sev;
    const double loudness = 0.6 - 0.45 * sev;
    const double am_rate = 5.0 - 2.5 * sev;
    const double tilt = 0.55 + 0.35 * sev; // one-pole lowpass coefficient
    const double burst_mean = 0.3;         // seconds of voicing per burst
    const double pause_mean = burst_mean * pause_ratio / (1.0 - pause_ratio);

    std::size_t i = 0;
    double lp = 0.0;
    bool speaking = true;
    while (i < n) {
        const double mean = speaking ? burst_mean : pause_mean;
        const double dur = mean * (0.5 + rng.uniform());
        const std::size_t len = std::max<std::size_t>(1, static_cast<std::size_t>(dur * sample_rate));
        if (speaking) {
            const double phase = rng.uniform() * 2.0 * M_PI;
            for (std::size_t j = 0; j < len && i < n; ++j, ++i) {
                const double noise = 2.0 * rng.uniform() - 1.0;
                lp = tilt * lp + (1.0 - tilt) * noise;
                const double t = static_cast<double>(j) / static_cast<double>(sample_rate);
                const double env = 0.5 * (1.0 - std::cos(2.0 * M_PI * am_rate * t + phase));
                out[i] = loudness * env * lp / (1.0 - tilt); // undo lowpass gain loss
            }
        } else {
            for (std::size_t j = 0; j < len && i < n; ++j, ++i)
                out[i] = 0.002 * (2.0 * rng.uniform() - 1.0); // room noise floor
        }
        speaking = !speaking;
    }
    for (double& v : out) v = std::clamp(v, -0.999, 0.999);
    return out;
}

std::string synth_corpus(const SynthSpec& spec) {
    namespace fs = std::filesystem;
    if (spec.out_dir.empty()) throw ConfigError("synth: output directory required");
    fs::create_directories(spec.out_dir);

    std::vector<RecordingMeta> manifest;
    std::uint64_t subject = 0;
    auto emit = [&](const std::string& split, std::size_t count) {
        for (std::size_t k = 0; k < count; ++k, ++subject) {
            // spread labels across the full scale within each split
            const double score =
                count == 1 ? 31.5 : std::round(63.0 * static_cast<double>(k) / static_cast<double>(count - 1));
            std::ostringstream id;
            id << split << "_" << k;
            auto samples = synth_recording(spec.seed, subject, k, score, spec.duration_s, spec.sample_rate);
            const std::string file = id.str() + ".wav";
            write_wav((fs::path(spec.out_dir) / file).string(), samples, spec.sample_rate);
            RecordingMeta m;
            m.id = id.str();
            m.path = file;
            m.subject = "subj_" + std::to_string(subject);
            m.split = split;
            m.bdi = score;
            m.duration_s = spec.duration_s;
            manifest.push_back(std::move(m));
        }
    };
    emit("train", spec.train);
    emit("dev", spec.dev);
    emit("test", spec.test);

    const std::string manifest_path = (fs::path(spec.out_dir) / "manifest.csv").string();
    write_manifest(manifest_path, manifest);
    return manifest_path;
}

} // namespace lwsm
