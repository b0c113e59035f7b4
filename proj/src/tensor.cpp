#include "lwsm/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "lwsm/errors.hpp"

namespace lwsm {

namespace {
Precision g_precision = Precision::F64;

std::size_t shape_numel(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t e : s) n *= e;
    return n;
}
} // namespace

void set_precision(Precision p) { g_precision = p; }
Precision precision() { return g_precision; }

Tensor::Tensor(std::vector<std::size_t> s) : shape(std::move(s)), data(shape_numel(shape), 0.0) {
    for (std::size_t e : shape)
        if (e == 0) throw DimensionError("zero extent in shape " + shape_str());
}

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    if (shape_numel(shape) != data.size())
        throw DimensionError("shape " + shape_str() + " does not match data length " + std::to_string(data.size()));
}

std::size_t Tensor::numel() const { return shape_numel(shape); }

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
    os << "]";
    return os.str();
}

void Tensor::fill(double v) { std::fill(data.begin(), data.end(), v); }

bool Tensor::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

Tensor full(std::vector<std::size_t> shape, double v) {
    Tensor t(std::move(shape));
    t.fill(v);
    return t;
}

Tensor random_uniform(std::vector<std::size_t> shape, double lo, double hi, Rng& rng) {
    Tensor t(std::move(shape));
    for (double& v : t.data) v = rng.uniform(lo, hi);
    quantize(t);
    return t;
}

double quantize(double v) {
    if (g_precision == Precision::F32) return static_cast<double>(static_cast<float>(v));
    return v;
}

void quantize(Tensor& t) {
    if (g_precision == Precision::F32)
        for (double& v : t.data) v = static_cast<double>(static_cast<float>(v));
}

void require_shape(const Tensor& t, const std::vector<std::size_t>& shape, const std::string& what) {
    if (t.shape != shape) {
        Tensor want(shape, std::vector<double>(shape_numel(shape), 0.0));
        throw DimensionError(what + ": got " + t.shape_str() + ", want " + want.shape_str());
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const std::string& what) {
    if (a.shape != b.shape)
        throw DimensionError(what + ": shapes " + a.shape_str() + " vs " + b.shape_str());
}

void require_finite(const Tensor& t, const std::string& layer) {
    if (!t.all_finite()) throw InferenceError("non-finite activation in " + layer);
}

} // namespace lwsm
