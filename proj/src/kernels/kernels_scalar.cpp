#include "kernels_impl.hpp"

namespace incpen::kernels::detail {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) s += a[j] * b[j];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) y[j] += alpha * x[j];
}

double sqdist_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

void residuals_scalar(const double* rows, const double* b, const double* x, std::size_t m,
                      std::size_t n, double* out) {
  for (std::size_t i = 0; i < m; ++i) out[i] = dot_scalar(rows + i * n, x, n) - b[i];
}

}  // namespace incpen::kernels::detail
