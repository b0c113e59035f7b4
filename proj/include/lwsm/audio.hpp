#pragma once
#include <cstddef>
#include <string>
#include <vector>

namespace lwsm {

struct AudioBuffer {
    std::vector<double> samples; // mono, [-1, 1)
    std::size_t sample_rate = 0;
};

// 16-bit PCM RIFF only; stereo is downmixed by averaging.
AudioBuffer read_wav(const std::string& path);
void write_wav(const std::string& path, const std::vector<double>& samples, std::size_t sample_rate);

// windowed-sinc rate conversion; pass-through when the rates match
std::vector<double> resample(const std::vector<double>& samples, std::size_t from_rate, std::size_t to_rate);

} // namespace lwsm
