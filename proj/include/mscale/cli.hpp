#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mscale/lattice.hpp"

namespace mscale {

struct RunConfig {
  std::string command;       // generate, analyze, verify, sweep
  std::string spec;          // generator spec text (generate)
  std::string measure_path;  // analyze, optional fixture for verify
  std::string family;        // sweep: cantor_four_corner, cantor_self_similar, lipschitz_graph
  std::string range;         // sweep parameter range "a:b"
  std::vector<double> origin;  // empty: standard lattice
  std::optional<LevelRange> levels;
  double A = 2.0;
  std::optional<double> eps;
  std::optional<double> delta;
  std::optional<int> M;
  int nodes_per_octave = 16;
  std::string suite = "all";
  std::string out;  // output prefix; empty writes tables to stdout only
  std::uint64_t seed = 1;
  int threads = 1;
  int verbosity = 0;
  bool timing = false;  // include wall-clock columns (breaks byte determinism)

  void validate() const;
};

nlohmann::json to_json(const RunConfig& c);
RunConfig run_config_from_json(const nlohmann::json& j);

// "k0:k1"
LevelRange parse_levels(const std::string& text);
// "x,y,z"
std::vector<double> parse_origin(const std::string& text);

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};
// Tab-separated with a leading "# schema" comment line.
void write_table(const Table& t, std::ostream& os);
std::string format_number(double v);

// Each command writes its tables to `out` (and to files when cfg.out is set) and
// diagnostics to `err`. Return value is the process exit code.
int cmd_generate(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_analyze(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int run_command(const RunConfig& cfg, std::ostream& out, std::ostream& err);

}  // namespace mscale
