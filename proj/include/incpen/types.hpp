#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace incpen {

using Vector = std::vector<double>;
using ConstSpan = std::span<const double>;
using MutSpan = std::span<double>;

}  // namespace incpen
