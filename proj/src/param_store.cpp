#include "lwsm/param_store.hpp"

#include <cmath>

#include "lwsm/errors.hpp"

namespace lwsm {

Tensor& ParamStore::add(const std::string& name, Tensor init) {
    if (has(name)) throw ConfigError("duplicate parameter " + name);
    Entry e;
    e.grad = zeros(init.shape);
    e.m = zeros(init.shape);
    e.v = zeros(init.shape);
    e.value = std::move(init);
    order_.push_back(name);
    return entries_.emplace(name, std::move(e)).first->second.value;
}

ParamStore::Entry& ParamStore::entry(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ConfigError("unknown parameter " + name);
    return it->second;
}

const ParamStore::Entry& ParamStore::entry(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ConfigError("unknown parameter " + name);
    return it->second;
}

Tensor& ParamStore::value(const std::string& name) { return entry(name).value; }
const Tensor& ParamStore::value(const std::string& name) const { return entry(name).value; }
Tensor& ParamStore::grad(const std::string& name) { return entry(name).grad; }

void ParamStore::zero_grad() {
    for (auto& name : order_) entries_.at(name).grad.fill(0.0);
}

double ParamStore::grad_norm() const {
    double sq = 0.0;
    for (auto& name : order_)
        for (double g : entries_.at(name).grad.data) sq += g * g;
    return std::sqrt(sq);
}

void ParamStore::clip_grad(double max_norm) {
    if (max_norm <= 0.0) return;
    const double norm = grad_norm();
    if (norm <= max_norm) return;
    const double s = max_norm / norm;
    for (auto& name : order_)
        for (double& g : entries_.at(name).grad.data) g *= s;
}

void ParamStore::adam_step(const AdamConfig& cfg) {
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step_));
    for (auto& name : order_) {
        Entry& e = entries_.at(name);
        for (std::size_t i = 0; i < e.value.data.size(); ++i) {
            const double g = e.grad.data[i];
            if (!std::isfinite(g)) throw TrainingError("NaN gradient in parameter " + name);
            e.m.data[i] = cfg.beta1 * e.m.data[i] + (1.0 - cfg.beta1) * g;
            e.v.data[i] = cfg.beta2 * e.v.data[i] + (1.0 - cfg.beta2) * g * g;
            const double mhat = e.m.data[i] / bc1;
            const double vhat = e.v.data[i] / bc2;
            e.value.data[i] = quantize(e.value.data[i] - cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
        }
        e.grad.fill(0.0);
    }
}

} // namespace lwsm
