#pragma once
#include <vector>

namespace lwsm {

double rmse(const std::vector<double>& pred, const std::vector<double>& truth);
double mae(const std::vector<double>& pred, const std::vector<double>& truth);

} // namespace lwsm
