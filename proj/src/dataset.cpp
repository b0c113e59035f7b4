#include "lwsm/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lwsm/errors.hpp"

namespace lwsm {

namespace {

constexpr const char* kHeader = "id,path,subject,split,bdi,duration_s";

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_num(const std::string& what, const std::string& v, std::size_t lineno) {
    try {
        std::size_t pos = 0;
        const double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw FormatError("manifest line " + std::to_string(lineno) + ": bad " + what + " '" + v + "'");
    }
}

} // namespace

std::vector<RecordingMeta> read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest: " + path);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty manifest: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kHeader)
        throw FormatError("manifest header mismatch, expected '" + std::string(kHeader) + "', got '" + line + "'");

    std::vector<RecordingMeta> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != 6)
            throw FormatError("manifest line " + std::to_string(lineno) + ": expected 6 fields, got " +
                              std::to_string(f.size()));
        RecordingMeta r;
        r.id = f[0];
        r.path = f[1];
        r.subject = f[2];
        r.split = f[3];
        r.bdi = parse_num("bdi", f[4], lineno);
        r.duration_s = parse_num("duration_s", f[5], lineno);
        if (r.split != "train" && r.split != "dev" && r.split != "test")
            throw FormatError("manifest line " + std::to_string(lineno) + ": unknown split '" + r.split + "'");
        out.push_back(std::move(r));
    }
    return out;
}

void write_manifest(const std::string& path, const std::vector<RecordingMeta>& records) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open manifest for writing: " + path);
    out << kHeader << "\n";
    for (const auto& r : records) {
        std::ostringstream line;
        line.precision(17);
        line << r.id << ',' << r.path << ',' << r.subject << ',' << r.split << ',' << r.bdi << ','
             << r.duration_s;
        out << line.str() << "\n";
    }
    if (!out) throw DataError("manifest write failed: " + path);
}

std::vector<Segment> segmentize(const std::vector<double>& samples, std::size_t sample_rate, double window_s,
                                const std::string& recording_id, double score) {
    if (sample_rate == 0 || window_s <= 0) throw DataError("segmentize: bad window parameters");
    const std::size_t window = static_cast<std::size_t>(window_s * static_cast<double>(sample_rate) + 0.5);
    if (window == 0) throw DataError("segmentize: window shorter than one sample");
    std::vector<Segment> out;
    for (std::size_t start = 0; start + window <= samples.size(); start += window) {
        Segment s;
        s.recording_id = recording_id;
        s.score = score;
        s.samples.assign(samples.begin() + static_cast<long>(start),
                         samples.begin() + static_cast<long>(start + window));
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<Recording> load_split(const std::string& manifest_path, const std::string& split,
                                  std::size_t target_rate) {
    const auto base = std::filesystem::path(manifest_path).parent_path();
    std::vector<Recording> out;
    for (const auto& meta : read_manifest(manifest_path)) {
        if (!split.empty() && meta.split != split) continue;
        std::filesystem::path wav(meta.path);
        if (wav.is_relative()) wav = base / wav;
        AudioBuffer buf = read_wav(wav.string());
        Recording rec;
        rec.meta = meta;
        rec.samples = resample(buf.samples, buf.sample_rate, target_rate);
        out.push_back(std::move(rec));
    }
    return out;
}

} // namespace lwsm
