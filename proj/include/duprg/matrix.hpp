#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace duprg {

/// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    bool empty() const noexcept { return data.empty(); }

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

/// Cosine similarity; returns NaN when either vector has zero norm.
double cosine(std::span<const double> a, std::span<const double> b);

bool all_finite(std::span<const double> values);

} // namespace duprg
