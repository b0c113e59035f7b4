#include "lwsm/metrics.hpp"

#include <cmath>

#include "lwsm/errors.hpp"

namespace lwsm {

namespace {

void check(const std::vector<double>& pred, const std::vector<double>& truth) {
    if (pred.empty()) throw DataError("metrics: empty prediction list");
    if (pred.size() != truth.size()) throw DataError("metrics: prediction/label count mismatch");
}

} // namespace

double rmse(const std::vector<double>& pred, const std::vector<double>& truth) {
    check(pred, truth);
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) acc += (pred[i] - truth[i]) * (pred[i] - truth[i]);
    return std::sqrt(acc / static_cast<double>(pred.size()));
}

double mae(const std::vector<double>& pred, const std::vector<double>& truth) {
    check(pred, truth);
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) acc += std::fabs(pred[i] - truth[i]);
    return acc / static_cast<double>(pred.size());
}

} // namespace lwsm
