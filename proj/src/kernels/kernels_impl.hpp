#pragma once

#include <cstddef>

namespace incpen::kernels::detail {

double dot_scalar(const double* a, const double* b, std::size_t n);
void axpy_scalar(double alpha, const double* x, double* y, std::size_t n);
double sqdist_scalar(const double* a, const double* b, std::size_t n);
void residuals_scalar(const double* rows, const double* b, const double* x, std::size_t m,
                      std::size_t n, double* out);

#if defined(INCPEN_HAVE_AVX2)
double dot_avx2(const double* a, const double* b, std::size_t n);
void axpy_avx2(double alpha, const double* x, double* y, std::size_t n);
double sqdist_avx2(const double* a, const double* b, std::size_t n);
void residuals_avx2(const double* rows, const double* b, const double* x, std::size_t m,
                    std::size_t n, double* out);
#endif

}  // namespace incpen::kernels::detail
