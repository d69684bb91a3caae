#include "stsa/kernels.hpp"

#include <algorithm>
#include <cassert>

namespace stsa::kernels {
namespace {

using Eigen::Index;

inline void gram_column(const Matrix& lhs, const Matrix& rhs, Matrix& out, Index a) {
  const Index n = rhs.rows();
  for (Index b = a; b < rhs.cols(); ++b) {
    out(a, b) = dot_fixed(lhs.col(a).data(), rhs.col(b).data(), n);
  }
}

inline void mirror_upper(Matrix& out) {
  for (Index a = 0; a < out.cols(); ++a)
    for (Index b = a + 1; b < out.cols(); ++b) out(b, a) = out(a, b);
}

Matrix scale_rows(const Matrix& x, std::span<const double> weights) {
  assert(static_cast<Index>(weights.size()) == x.rows());
  Matrix scaled(x.rows(), x.cols());
  for (Index c = 0; c < x.cols(); ++c)
    for (Index r = 0; r < x.rows(); ++r) scaled(r, c) = weights[r] * x(r, c);
  return scaled;
}

inline void project_column(const Matrix& raw_t, const Matrix& map, Matrix& out, Index j) {
  const Index d = raw_t.rows();
  for (Index r = 0; r < raw_t.cols(); ++r) {
    out(r, j) = std::max(0.0, dot_fixed(raw_t.col(r).data(), map.col(j).data(), d));
  }
}

inline void class_sum_row(const Matrix& x, std::span<const int> column_of_row,
                          Matrix& out, Index m) {
  const double* col = x.col(m).data();
  for (Index r = 0; r < x.rows(); ++r) {
    const int c = column_of_row[r];
    if (c >= 0) out(m, c) += col[r];
  }
}

}  // namespace

Matrix gram_serial(const Matrix& x) {
  Matrix out(x.cols(), x.cols());
  for (Index a = 0; a < x.cols(); ++a) gram_column(x, x, out, a);
  mirror_upper(out);
  return out;
}

Matrix gram_parallel(const Matrix& x) {
  Matrix out(x.cols(), x.cols());
  const Index m = x.cols();
#pragma omp parallel for schedule(dynamic, 4)
  for (Index a = 0; a < m; ++a) gram_column(x, x, out, a);
  mirror_upper(out);
  return out;
}

Matrix weighted_gram_serial(const Matrix& x, std::span<const double> weights) {
  const Matrix scaled = scale_rows(x, weights);
  Matrix out(x.cols(), x.cols());
  for (Index a = 0; a < x.cols(); ++a) gram_column(scaled, x, out, a);
  mirror_upper(out);
  return out;
}

Matrix weighted_gram_parallel(const Matrix& x, std::span<const double> weights) {
  const Matrix scaled = scale_rows(x, weights);
  Matrix out(x.cols(), x.cols());
  const Index m = x.cols();
#pragma omp parallel for schedule(dynamic, 4)
  for (Index a = 0; a < m; ++a) gram_column(scaled, x, out, a);
  mirror_upper(out);
  return out;
}

Matrix relu_project_serial(const Matrix& raw, const Matrix& map) {
  assert(raw.cols() == map.rows());
  const Matrix raw_t = raw.transpose();
  Matrix out(raw.rows(), map.cols());
  for (Index j = 0; j < map.cols(); ++j) project_column(raw_t, map, out, j);
  return out;
}

Matrix relu_project_parallel(const Matrix& raw, const Matrix& map) {
  assert(raw.cols() == map.rows());
  const Matrix raw_t = raw.transpose();
  Matrix out(raw.rows(), map.cols());
  const Index m = map.cols();
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < m; ++j) project_column(raw_t, map, out, j);
  return out;
}

Matrix class_sums_serial(const Matrix& x, std::span<const int> column_of_row, int cols) {
  assert(static_cast<Index>(column_of_row.size()) == x.rows());
  Matrix out = Matrix::Zero(x.cols(), cols);
  for (Index m = 0; m < x.cols(); ++m) class_sum_row(x, column_of_row, out, m);
  return out;
}

Matrix class_sums_parallel(const Matrix& x, std::span<const int> column_of_row, int cols) {
  assert(static_cast<Index>(column_of_row.size()) == x.rows());
  Matrix out = Matrix::Zero(x.cols(), cols);
  const Index m_count = x.cols();
#pragma omp parallel for schedule(static)
  for (Index m = 0; m < m_count; ++m) class_sum_row(x, column_of_row, out, m);
  return out;
}

}  // namespace stsa::kernels
