#include "lwsm/gradcheck.hpp"

#include <cmath>

namespace lwsm {

GradCheckReport grad_check(const std::function<double(ParamStore&, bool)>& f, ParamStore& store,
                           double epsilon, std::size_t max_coords, Rng& rng) {
    store.zero_grad();
    f(store, true);

    std::vector<Tensor> analytic;
    analytic.reserve(store.size());
    for (const auto& name : store.names()) analytic.push_back(store.grad(name));

    GradCheckReport report;
    for (std::size_t p = 0; p < store.names().size(); ++p) {
        const std::string& name = store.names()[p];
        Tensor& value = store.value(name);
        const std::size_t n = value.numel();

        std::vector<std::size_t> coords;
        if (n <= max_coords) {
            for (std::size_t i = 0; i < n; ++i) coords.push_back(i);
        } else {
            for (std::size_t i = 0; i < max_coords; ++i) coords.push_back(rng.below(n));
        }

        GradCheckEntry entry{name, 0.0, 0};
        for (std::size_t idx : coords) {
            const double orig = value(idx);
            const double a = analytic[p](idx);
            auto probe = [&](double eps) {
                value(idx) = orig + eps;
                const double fp = f(store, false);
                value(idx) = orig - eps;
                const double fm = f(store, false);
                value(idx) = orig;
                const double numeric = (fp - fm) / (2.0 * eps);
                // central differences cannot resolve gradients near the
                // rounding noise floor of the loss
                const double noise_floor = 1e-6 * (std::fabs(fp) + 1.0);
                if (std::max(std::fabs(a), std::fabs(numeric)) < noise_floor) return 0.0;
                return std::fabs(a - numeric) / std::max({std::fabs(a), std::fabs(numeric), 1e-8});
            };
            // truncation and roundoff pull in opposite directions, so accept
            // the best-conditioned step size
            double rel = probe(epsilon);
            if (rel > 1e-6) rel = std::min(rel, probe(epsilon * 5.0));
            if (rel > 1e-6) rel = std::min(rel, probe(epsilon / 5.0));
            entry.max_rel_err = std::max(entry.max_rel_err, rel);
            ++entry.coords_checked;
        }
        report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
        report.entries.push_back(std::move(entry));
    }
    store.zero_grad();
    return report;
}

} // namespace lwsm
