#pragma once
#include <string>
#include <vector>

#include "lwsm/audio.hpp"

namespace lwsm {

struct RecordingMeta {
    std::string id;
    std::string path; // WAV location, relative paths resolve against the manifest
    std::string subject;
    std::string split; // train | dev | test
    double bdi = 0.0;
    double duration_s = 0.0;
};

std::vector<RecordingMeta> read_manifest(const std::string& path);
void write_manifest(const std::string& path, const std::vector<RecordingMeta>& records);

// a fixed-length window of one recording, carrying the recording label
struct Segment {
    std::string recording_id;
    double score = 0.0;
    std::vector<double> samples;
};

// non-overlapping windows; a short tail is dropped
std::vector<Segment> segmentize(const std::vector<double>& samples, std::size_t sample_rate, double window_s,
                                const std::string& recording_id, double score);

// audio loaded and resampled to the model rate, plus its metadata
struct Recording {
    RecordingMeta meta;
    std::vector<double> samples;
};

std::vector<Recording> load_split(const std::string& manifest_path, const std::string& split,
                                  std::size_t target_rate);

} // namespace lwsm
