#pragma once
#include <cstdint>
#include <string>
#include <vector>

namespace lwsm {

struct SynthSpec {
    std::string out_dir;
    std::size_t train = 10;
    std::size_t dev = 4;
    std::size_t test = 4;
    double duration_s = 60.0;
    std::size_t sample_rate = 8000;
    std::uint64_t seed = 1;
};

// One speech-like recording whose pause ratio, syllable rate and spectral
// tilt all track the severity score.
std::vector<double> synth_recording(std::uint64_t seed, std::uint64_t subject, std::uint64_t index, double score,
                                    double duration_s, std::size_t sample_rate);

// writes WAV files plus manifest.csv; returns the manifest path
std::string synth_corpus(const SynthSpec& spec);

} // namespace lwsm
