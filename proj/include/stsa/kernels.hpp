#pragma once

#include <Eigen/Dense>

#include <span>

// Dense inner loops behind the statistics pipeline. Every kernel exists as a
// serial reference and an OpenMP twin. Both compute each output entry with the
// same fixed summation order, so their results are bit-identical for any
// thread count; tests assert exactly that.
namespace stsa::kernels {

using Matrix = Eigen::MatrixXd;

// Dot product with four fixed accumulation lanes.
inline double dot_fixed(const double* a, const double* b, Eigen::Index n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  Eigen::Index i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

// xᵀx, exactly symmetric.
Matrix gram_serial(const Matrix& x);
Matrix gram_parallel(const Matrix& x);

// Σ_r w_r · x_rᵀ x_r over the rows of x.
Matrix weighted_gram_serial(const Matrix& x, std::span<const double> weights);
Matrix weighted_gram_parallel(const Matrix& x, std::span<const double> weights);

// max(0, raw · map) entrywise.
Matrix relu_project_serial(const Matrix& raw, const Matrix& map);
Matrix relu_project_parallel(const Matrix& raw, const Matrix& map);

// out(:, c) = Σ of rows r with column_of_row[r] == c, transposed to M × cols.
// Equivalent to xᵀY for a one-hot Y. Rows with a negative column are skipped.
Matrix class_sums_serial(const Matrix& x, std::span<const int> column_of_row, int cols);
Matrix class_sums_parallel(const Matrix& x, std::span<const int> column_of_row, int cols);

}  // namespace stsa::kernels
