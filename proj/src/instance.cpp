#include "incpen/instance.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "incpen/error.hpp"

namespace incpen {

std::string_view to_string(Provenance p) noexcept {
  return p == Provenance::exact ? "exact" : "oracle-computed";
}

ProblemInstance::ProblemInstance(Objective objective, ConstraintSystem system, Vector witness,
                                 std::optional<KnownOptimum> known_optimum,
                                 std::string instance_id, std::uint64_t seed)
    : objective_(std::move(objective)),
      system_(std::move(system)),
      witness_(std::move(witness)),
      known_optimum_(std::move(known_optimum)),
      instance_id_(std::move(instance_id)),
      seed_(seed) {
  require_dim(system_.dim(), objective_.dim(), "instance objective");
  require_dim(system_.dim(), witness_.size(), "instance witness");
  if (max_violation(system_, witness_) > 0.0)
    throw InvalidArgument("instance: witness violates a constraint");
  if (known_optimum_) {
    require_dim(system_.dim(), known_optimum_->x.size(), "instance known optimum");
    if (known_optimum_->provenance == Provenance::exact &&
        max_violation(system_, known_optimum_->x) > 1e-9)
      throw InvalidArgument("instance: exact optimum violates constraints by more than 1e-9");
  }
}

ProblemInstance ProblemInstance::with_known_optimum(KnownOptimum opt) const {
  return ProblemInstance(objective_, system_, witness_, std::move(opt), instance_id_, seed_);
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string format_vector(ConstSpan v) {
  std::string s;
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (j) s += ',';
    s += format_double(v[j]);
  }
  return s;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

double parse_double(std::string_view text) {
  const std::string buf(trim(text));
  if (buf.empty()) throw FormatError("expected a number, got an empty field");
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(buf.c_str(), &end);
  if (end != buf.c_str() + buf.size() || errno == ERANGE)
    throw FormatError("malformed number '" + buf + "'");
  return v;
}

Vector parse_vector(std::string_view text) {
  Vector v;
  text = trim(text);
  if (text.empty()) return v;
  std::size_t pos = 0;
  while (true) {
    const auto comma = text.find(',', pos);
    v.push_back(parse_double(text.substr(pos, comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return v;
}

void write_instance(std::ostream& out, const ProblemInstance& inst) {
  const Objective& f = inst.objective();
  if (f.kind() == ObjectiveKind::custom)
    throw InvalidArgument("write_instance: custom objectives are not serializable");
  out << "[instance]\n";
  out << "id = " << inst.id() << '\n';
  out << "seed = " << inst.seed() << '\n';
  out << "dim = " << inst.dim() << '\n';
  out << "\n[objective]\n";
  out << "kind = " << to_string(f.kind()) << '\n';
  out << "mu = " << format_double(f.mu()) << '\n';
  out << "x0 = " << format_vector(f.x0()) << '\n';
  out << "\n[witness]\n" << format_vector(inst.witness()) << '\n';
  if (const auto& opt = inst.known_optimum()) {
    out << "\n[known_optimum]\n";
    out << "provenance = " << to_string(opt->provenance) << '\n';
    out << "x = " << format_vector(opt->x) << '\n';
  }
  out << "\n[constraints]\n";
  for (const auto& c : inst.system().constraints())
    out << format_vector(c.a()) << " | " << format_double(c.b()) << '\n';
}

ProblemInstance read_instance(std::istream& in) {
  std::map<std::string, std::map<std::string, std::string>> kv;
  std::map<std::string, std::vector<std::string>> rows;
  std::string section;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw FormatError("line " + std::to_string(lineno) + ": bad section header");
      section = std::string(t.substr(1, t.size() - 2));
      kv[section];
      continue;
    }
    if (section.empty()) throw FormatError("line " + std::to_string(lineno) + ": content before any section");
    if (section == "witness" || section == "constraints") {
      rows[section].emplace_back(t);
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string_view::npos)
      throw FormatError("line " + std::to_string(lineno) + ": expected key = value");
    kv[section][std::string(trim(t.substr(0, eq)))] = std::string(trim(t.substr(eq + 1)));
  }

  auto get = [&](const std::string& sec, const std::string& key) -> const std::string& {
    auto s = kv.find(sec);
    if (s == kv.end()) throw FormatError("missing section [" + sec + "]");
    auto k = s->second.find(key);
    if (k == s->second.end()) throw FormatError("missing key '" + key + "' in [" + sec + "]");
    return k->second;
  };

  const std::string id = get("instance", "id");
  const std::uint64_t seed = std::stoull(get("instance", "seed"));
  const auto dim = static_cast<std::size_t>(std::stoull(get("instance", "dim")));

  const ObjectiveKind kind = parse_objective_kind(get("objective", "kind"));
  Vector x0 = parse_vector(get("objective", "x0"));
  require_dim(dim, x0.size(), "instance file x0");
  Objective f = kind == ObjectiveKind::quadratic_shift ? Objective::quadratic_shift(std::move(x0))
                : kind == ObjectiveKind::l1_shift
                    ? Objective::l1_shift(std::move(x0))
                    : throw FormatError("custom objectives cannot be read from a file");

  if (rows["witness"].size() != 1) throw FormatError("[witness] must hold exactly one row");
  Vector witness = parse_vector(rows["witness"].front());

  std::vector<HalfspaceConstraint> cs;
  for (const auto& r : rows["constraints"]) {
    const auto bar = r.find('|');
    if (bar == std::string::npos) throw FormatError("constraint row without '|': " + r);
    Vector a = parse_vector(std::string_view(r).substr(0, bar));
    require_dim(dim, a.size(), "instance file constraint row");
    cs.emplace_back(std::move(a), parse_double(std::string_view(r).substr(bar + 1)));
  }
  if (cs.empty()) throw FormatError("[constraints] is empty");

  std::optional<KnownOptimum> opt;
  if (kv.count("known_optimum")) {
    const std::string& prov = get("known_optimum", "provenance");
    Provenance p;
    if (prov == "exact")
      p = Provenance::exact;
    else if (prov == "oracle-computed")
      p = Provenance::oracle_computed;
    else
      throw FormatError("unknown provenance '" + prov + "'");
    opt = KnownOptimum{parse_vector(get("known_optimum", "x")), p};
  }
  return ProblemInstance(std::move(f), ConstraintSystem(std::move(cs)), std::move(witness),
                         std::move(opt), id, seed);
}

void save_instance(const std::string& path, const ProblemInstance& inst) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_instance(out, inst);
  if (!out) throw Error("write to '" + path + "' failed");
}

ProblemInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return read_instance(in);
}

}  // namespace incpen
