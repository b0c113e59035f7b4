#pragma once
#include <cstddef>
#include <string>
#include <vector>

#include "lwsm/rng.hpp"

namespace lwsm {

enum class Precision { F64, F32 };

// Global numeric mode. F32 keeps double storage but rounds op results to
// float precision, so both modes share one code path.
void set_precision(Precision p);
Precision precision();

// Dense row-major tensor of doubles. Rank is the shape length; most of the
// model works with rank-2 tensors laid out [feature][time].
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s);
    Tensor(std::vector<std::size_t> s, std::vector<double> d);

    std::size_t numel() const;
    std::size_t rank() const { return shape.size(); }
    std::size_t rows() const { return shape.at(0); }
    std::size_t cols() const { return shape.at(1); }

    double& operator()(std::size_t i) { return data[i]; }
    double operator()(std::size_t i) const { return data[i]; }
    double& operator()(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }
    double& operator()(std::size_t i, std::size_t j, std::size_t k) {
        return data[(i * shape[1] + j) * shape[2] + k];
    }
    double operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return data[(i * shape[1] + j) * shape[2] + k];
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
    std::string shape_str() const;

    void fill(double v);
    bool all_finite() const;
};

Tensor zeros(std::vector<std::size_t> shape);
Tensor full(std::vector<std::size_t> shape, double v);
Tensor random_uniform(std::vector<std::size_t> shape, double lo, double hi, Rng& rng);

// rounds to float storage precision when the global mode is F32
void quantize(Tensor& t);
double quantize(double v);

void require_shape(const Tensor& t, const std::vector<std::size_t>& shape, const std::string& what);
void require_same_shape(const Tensor& a, const Tensor& b, const std::string& what);
void require_finite(const Tensor& t, const std::string& layer);

} // namespace lwsm
