#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace rgsa {

/// Dense row-major matrix of doubles; rows are sample points.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), values(r * c, fill) {}

  std::span<double> row(std::size_t i) { return {values.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * cols, cols};
  }
  double& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }

  std::vector<double> column(std::size_t j) const {
    if (j >= cols) throw std::out_of_range("Matrix::column");
    std::vector<double> out(rows);
    for (std::size_t i = 0; i < rows; ++i) out[i] = values[i * cols + j];
    return out;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

}  // namespace rgsa
