#include "gor/tensor.hpp"

#include <cmath>

#include "gor/util.hpp"

namespace gor {

namespace {
void check(bool ok, const char* what) {
  if (!ok) throw GorError("dims", what);
}
}  // namespace

Mat matmul(const Mat& a, const Mat& b) {
  check(a.cols == b.rows, "matmul: inner dimensions differ");
  Mat c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* ar = a.row(i);
    double* cr = c.row(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = ar[k];
      if (aik == 0.0) continue;
      const double* br = b.row(k);
      for (std::size_t j = 0; j < b.cols; ++j) cr[j] += aik * br[j];
    }
  }
  return c;
}

Mat matmul_at_b(const Mat& a, const Mat& b) {
  check(a.rows == b.rows, "matmul_at_b: row counts differ");
  Mat c(a.cols, b.cols);
  for (std::size_t n = 0; n < a.rows; ++n) {
    const double* ar = a.row(n);
    const double* br = b.row(n);
    for (std::size_t i = 0; i < a.cols; ++i) {
      const double ain = ar[i];
      if (ain == 0.0) continue;
      double* cr = c.row(i);
      for (std::size_t j = 0; j < b.cols; ++j) cr[j] += ain * br[j];
    }
  }
  return c;
}

Mat matmul_a_bt(const Mat& a, const Mat& b) {
  check(a.cols == b.cols, "matmul_a_bt: column counts differ");
  Mat c(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* ar = a.row(i);
    double* cr = c.row(i);
    for (std::size_t j = 0; j < b.rows; ++j) {
      const double* br = b.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) s += ar[k] * br[k];
      cr[j] = s;
    }
  }
  return c;
}

void add_inplace(Mat& a, const Mat& b) {
  check(a.same_shape(b), "add_inplace: shape mismatch");
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

void scale_inplace(Mat& a, double s) {
  for (auto& x : a.data) x *= s;
}

bool all_finite(const Mat& a) {
  for (double x : a.data) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace gor
