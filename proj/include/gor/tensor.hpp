#pragma once

#include <cstddef>
#include <vector>

namespace gor {

/// Row-major dense matrix of doubles. All model arithmetic is 64-bit.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  double* row(std::size_t i) { return data.data() + i * cols; }
  const double* row(std::size_t i) const { return data.data() + i * cols; }

  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

/// C = A * B
Mat matmul(const Mat& a, const Mat& b);
/// C = A^T * B  (A is n x r, B is n x c, C is r x c)
Mat matmul_at_b(const Mat& a, const Mat& b);
/// C = A * B^T  (A is n x k, B is m x k, C is n x m)
Mat matmul_a_bt(const Mat& a, const Mat& b);

void add_inplace(Mat& a, const Mat& b);
void scale_inplace(Mat& a, double s);
bool all_finite(const Mat& a);

double dot(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace gor
