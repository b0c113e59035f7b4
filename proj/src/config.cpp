#include "lwsm/config.hpp"

#include <fstream>
#include <sstream>

#include "lwsm/errors.hpp"

namespace lwsm {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::size_t to_size(const std::string& k, const std::string& v) {
    try {
        std::size_t pos = 0;
        const unsigned long long r = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return static_cast<std::size_t>(r);
    } catch (const std::exception&) {
        throw ConfigError("key '" + k + "': expected a non-negative integer, got '" + v + "'");
    }
}

double to_double(const std::string& k, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ConfigError("key '" + k + "': expected a number, got '" + v + "'");
    }
}

bool to_bool(const std::string& k, const std::string& v) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw ConfigError("key '" + k + "': expected true or false, got '" + v + "'");
}

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

} // namespace

void ModelConfig::validate() const {
    if (precision != "f64" && precision != "f32")
        throw ConfigError("precision must be f64 or f32, got '" + precision + "'");
    if (sample_rate == 0) throw ConfigError("sample_rate must be positive");
    if (window_s <= 0) throw ConfigError("window_s must be positive");
    if (encoder_width == 0 || encoder_stride == 0) throw ConfigError("encoder width and stride must be positive");
    if (feature_dim < 4 || feature_dim % 4 != 0)
        throw ConfigError("feature_dim must be a positive multiple of 4, got " + std::to_string(feature_dim));
    if (chunk_len < 2 || chunk_len % 2 != 0)
        throw ConfigError("chunk_len must be even and at least 2, got " + std::to_string(chunk_len));
    if (dp_repeats == 0) throw ConfigError("dp_repeats must be positive");
    if (conv_width == 0) throw ConfigError("conv_width must be positive");
    if (state_dim == 0) throw ConfigError("state_dim must be positive");
    if (head_conv_width == 0 || head_hidden == 0) throw ConfigError("head sizes must be positive");
    if (lr <= 0) throw ConfigError("lr must be positive");
    if (epochs == 0) throw ConfigError("epochs must be positive");
}

std::string ModelConfig::serialize() const {
    std::ostringstream os;
    os << "precision=" << precision << "\n"
       << "seed=" << seed << "\n"
       << "sample_rate=" << sample_rate << "\n"
       << "window_s=" << fmt_double(window_s) << "\n"
       << "encoder_width=" << encoder_width << "\n"
       << "encoder_stride=" << encoder_stride << "\n"
       << "feature_dim=" << feature_dim << "\n"
       << "chunk_len=" << chunk_len << "\n"
       << "dp_repeats=" << dp_repeats << "\n"
       << "conv_width=" << conv_width << "\n"
       << "state_dim=" << state_dim << "\n"
       << "bimamba_residual=" << (bimamba_residual ? "true" : "false") << "\n"
       << "ea_softmax=" << (ea_softmax == SoftmaxPlacement::TimePre ? "time_pre" : "feature_post") << "\n"
       << "ea_residual=" << (ea_residual ? "true" : "false") << "\n"
       << "head_conv_width=" << head_conv_width << "\n"
       << "head_hidden=" << head_hidden << "\n"
       << "lr=" << fmt_double(lr) << "\n"
       << "epochs=" << epochs << "\n"
       << "grad_clip=" << fmt_double(grad_clip) << "\n";
    return os.str();
}

std::uint64_t ModelConfig::fingerprint() const {
    std::ostringstream os;
    os << precision << '|' << encoder_width << '|' << encoder_stride << '|' << feature_dim << '|' << chunk_len
       << '|' << dp_repeats << '|' << conv_width << '|' << state_dim << '|' << bimamba_residual << '|'
       << (ea_softmax == SoftmaxPlacement::TimePre ? 0 : 1) << '|' << ea_residual << '|' << head_conv_width << '|'
       << head_hidden;
    // FNV-1a
    std::uint64_t h = 1469598103934665603ull;
    for (char c : os.str()) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

ModelConfig ModelConfig::parse(const std::string& text) {
    ModelConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key=value, got '" + line + "'");
        const std::string k = trim(line.substr(0, eq));
        const std::string v = trim(line.substr(eq + 1));
        if (k == "precision") cfg.precision = v;
        else if (k == "seed") cfg.seed = to_size(k, v);
        else if (k == "sample_rate") cfg.sample_rate = to_size(k, v);
        else if (k == "window_s") cfg.window_s = to_double(k, v);
        else if (k == "encoder_width") cfg.encoder_width = to_size(k, v);
        else if (k == "encoder_stride") cfg.encoder_stride = to_size(k, v);
        else if (k == "feature_dim") cfg.feature_dim = to_size(k, v);
        else if (k == "chunk_len") cfg.chunk_len = to_size(k, v);
        else if (k == "dp_repeats") cfg.dp_repeats = to_size(k, v);
        else if (k == "conv_width") cfg.conv_width = to_size(k, v);
        else if (k == "state_dim") cfg.state_dim = to_size(k, v);
        else if (k == "bimamba_residual") cfg.bimamba_residual = to_bool(k, v);
        else if (k == "ea_softmax") {
            if (v == "time_pre") cfg.ea_softmax = SoftmaxPlacement::TimePre;
            else if (v == "feature_post") cfg.ea_softmax = SoftmaxPlacement::FeaturePost;
            else throw ConfigError("key 'ea_softmax': expected time_pre or feature_post, got '" + v + "'");
        } else if (k == "ea_residual") cfg.ea_residual = to_bool(k, v);
        else if (k == "head_conv_width") cfg.head_conv_width = to_size(k, v);
        else if (k == "head_hidden") cfg.head_hidden = to_size(k, v);
        else if (k == "lr") cfg.lr = to_double(k, v);
        else if (k == "epochs") cfg.epochs = to_size(k, v);
        else if (k == "grad_clip") cfg.grad_clip = to_double(k, v);
        else throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + k + "'");
    }
    cfg.validate();
    return cfg;
}

ModelConfig ModelConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

} // namespace lwsm
