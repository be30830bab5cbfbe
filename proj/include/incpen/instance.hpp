#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "incpen/constraints.hpp"
#include "incpen/objective.hpp"

namespace incpen {

enum class Provenance { exact, oracle_computed };

std::string_view to_string(Provenance p) noexcept;

struct KnownOptimum {
  Vector x;
  Provenance provenance = Provenance::exact;
};

// min f(x) s.t. <a_i, x> <= b_i, together with a feasible witness point.
class ProblemInstance {
 public:
  // Throws InvalidArgument if dimensions disagree, the witness violates a
  // constraint, or an exact optimum is infeasible by more than 1e-9.
  ProblemInstance(Objective objective, ConstraintSystem system, Vector witness,
                  std::optional<KnownOptimum> known_optimum, std::string instance_id,
                  std::uint64_t seed);

  const Objective& objective() const noexcept { return objective_; }
  const ConstraintSystem& system() const noexcept { return system_; }
  ConstSpan witness() const noexcept { return witness_; }
  const std::optional<KnownOptimum>& known_optimum() const noexcept { return known_optimum_; }
  const std::string& id() const noexcept { return instance_id_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t dim() const noexcept { return system_.dim(); }

  ProblemInstance with_known_optimum(KnownOptimum opt) const;

 private:
  Objective objective_;
  ConstraintSystem system_;
  Vector witness_;
  std::optional<KnownOptimum> known_optimum_;
  std::string instance_id_;
  std::uint64_t seed_;
};

// Plain-text instance format, one bracketed section per field:
//
//   [instance]     id, seed, dim
//   [objective]    kind, mu, x0 (comma-separated)
//   [witness]      one comma-separated row
//   [known_optimum] provenance, x      (optional section)
//   [constraints]  rows "a_1,...,a_n | b"
//
// Numbers are written with 17 significant digits so a round trip is exact.
// Custom objectives cannot be serialized.
void write_instance(std::ostream& out, const ProblemInstance& inst);
ProblemInstance read_instance(std::istream& in);

void save_instance(const std::string& path, const ProblemInstance& inst);
ProblemInstance load_instance(const std::string& path);

// Formatting helpers shared by the text formats.
std::string format_double(double v);
std::string format_vector(ConstSpan v);
Vector parse_vector(std::string_view text);
double parse_double(std::string_view text);

}  // namespace incpen
