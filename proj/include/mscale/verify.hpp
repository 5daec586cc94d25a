#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mscale/energy.hpp"
#include "mscale/filters.hpp"
#include "mscale/symmetry.hpp"

namespace mscale {

enum class CheckStatus { pass, fail, vacuous };
std::string to_string(CheckStatus s);

// Threshold tags: "exact" (zero tolerance), "constant" (closed-form constant derived
// from a proof chain), "tolerance" (floating-point or quadrature slack), "calibrated"
// (value stored in calibration.json), "trend" (qualitative verdict).
struct CheckRow {
  std::string suite;
  std::string name;
  double measured = 0.0;
  std::string relation;  // "<=", ">=", "in", ...
  double threshold = 0.0;
  std::string tag;
  CheckStatus status = CheckStatus::pass;
  std::string detail;
};

struct SuiteOptions {
  std::uint64_t seed = 1;
  int instances = 0;  // 0: suite default
  double A = 2.0;
  std::optional<double> eps;
  std::optional<double> delta;
  std::optional<int> M;
  int nodes_per_octave = 16;
  std::optional<LevelRange> levels;
  const DiscreteMeasure* measure = nullptr;  // optional extra fixture
  std::optional<Vec> origin;                 // lattice origin override
};

struct SuiteResult {
  std::string name;
  std::vector<CheckRow> rows;
  double seconds = 0.0;
  std::size_t failures() const;
  std::size_t vacuous() const;
  bool passed() const { return failures() == 0; }
};

const std::vector<std::string>& suite_names();
// Throws ValidationError for an unknown suite.
SuiteResult run_suite(const std::string& name, const SuiteOptions& opts = {});

// Helpers shared with the sweep command.
struct TrendPoint {
  double parameter = 0.0;
  std::size_t atoms = 0;
  double value = 0.0;  // Carleson sup energy / mass
  double seconds = 0.0;
};
TrendPoint carleson_point(const DiscreteMeasure& mu, EnergyKind kind, double parameter);

}  // namespace mscale
