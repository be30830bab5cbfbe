#pragma once

// Dense double-precision kernels used in every inner loop: dot products,
// axpy updates and batched constraint residuals. Each kernel has a portable
// scalar reference implementation and an AVX2/FMA variant; the variant is
// picked once at first use from the CPU features (override with the
// INCPEN_ISA environment variable, values "scalar" or "avx2").
//
// The two variants round differently (the SIMD reductions reassociate), so
// results agree to a few ulps, not bitwise. Within one process the choice
// is fixed, which keeps runs reproducible.

#include <cmath>
#include <cstddef>
#include <span>
#include <string_view>

namespace incpen::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa) noexcept;

struct Table {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // ||a - b||^2
  double (*sqdist)(const double* a, const double* b, std::size_t n);
  // out[i] = <rows[i*n .. i*n+n), x> - b[i] for i < m (row-major rows)
  void (*residuals)(const double* rows, const double* b, const double* x, std::size_t m,
                    std::size_t n, double* out);
};

const Table& scalar_table() noexcept;

// nullptr when the AVX2 variant was not compiled in or the CPU lacks it.
const Table* avx2_table() noexcept;

const Table& active() noexcept;

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) noexcept {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

inline double sqdist(std::span<const double> a, std::span<const double> b) noexcept {
  return active().sqdist(a.data(), b.data(), a.size());
}

inline double sqnorm(std::span<const double> a) noexcept { return dot(a, a); }

inline double norm(std::span<const double> a) noexcept { return std::sqrt(sqnorm(a)); }

}  // namespace incpen::kernels
