#pragma once
#include <string>
#include <unordered_map>
#include <vector>

#include "lwsm/tensor.hpp"

namespace lwsm {

struct AdamConfig {
    double lr = 0.002;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Named parameters with gradient accumulators and Adam moments.
// Registration order is preserved; it fixes checkpoint layout and update order.
class ParamStore {
public:
    Tensor& add(const std::string& name, Tensor init);
    bool has(const std::string& name) const { return entries_.count(name) != 0; }

    Tensor& value(const std::string& name);
    const Tensor& value(const std::string& name) const;
    Tensor& grad(const std::string& name);

    const std::vector<std::string>& names() const { return order_; }
    std::size_t size() const { return order_.size(); }
    long step() const { return step_; }

    void zero_grad();
    double grad_norm() const;
    void clip_grad(double max_norm); // no-op when max_norm <= 0
    void adam_step(const AdamConfig& cfg);

private:
    struct Entry {
        Tensor value, grad, m, v;
    };
    Entry& entry(const std::string& name);
    const Entry& entry(const std::string& name) const;

    std::vector<std::string> order_;
    std::unordered_map<std::string, Entry> entries_;
    long step_ = 0;
};

} // namespace lwsm
