#include <cstdlib>
#include <string_view>

#include "incpen/kernels.hpp"
#include "kernels_impl.hpp"

namespace incpen::kernels {

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

const Table& scalar_table() noexcept {
  static const Table t{Isa::scalar, detail::dot_scalar, detail::axpy_scalar,
                       detail::sqdist_scalar, detail::residuals_scalar};
  return t;
}

const Table* avx2_table() noexcept {
#if defined(INCPEN_HAVE_AVX2)
  static const Table t{Isa::avx2, detail::dot_avx2, detail::axpy_avx2, detail::sqdist_avx2,
                       detail::residuals_avx2};
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return supported ? &t : nullptr;
#else
  return nullptr;
#endif
}

const Table& active() noexcept {
  static const Table& chosen = []() -> const Table& {
    const char* env = std::getenv("INCPEN_ISA");
    if (env != nullptr && std::string_view(env) == "scalar") return scalar_table();
    if (const Table* t = avx2_table()) return *t;
    return scalar_table();
  }();
  return chosen;
}

}  // namespace incpen::kernels
