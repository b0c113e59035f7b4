#pragma once
#include <functional>
#include <string>
#include <vector>

#include "lwsm/param_store.hpp"
#include "lwsm/rng.hpp"

namespace lwsm {

struct GradCheckEntry {
    std::string name;
    double max_rel_err = 0.0;
    std::size_t coords_checked = 0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double max_rel_err = 0.0;
    bool pass(double tol) const { return max_rel_err < tol; }
};

// f(store, with_grad): returns the scalar loss; when with_grad it must also
// accumulate analytic gradients into the store (grads are zeroed beforehand).
// Central differences on up to max_coords coordinates per parameter.
GradCheckReport grad_check(const std::function<double(ParamStore&, bool)>& f, ParamStore& store,
                           double epsilon, std::size_t max_coords, Rng& rng);

} // namespace lwsm
