#include "mscale/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "mscale/verify.hpp"

namespace mscale {

namespace {

const std::vector<std::string> kCommands = {"generate", "analyze", "verify", "sweep"};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

double to_double(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ValidationError(what + ": not a number: '" + s + "'");
  }
  if (used != s.size()) throw ValidationError(what + ": not a number: '" + s + "'");
  return v;
}

int to_int(const std::string& s, const std::string& what) {
  const double v = to_double(s, what);
  if (v != std::floor(v)) throw ValidationError(what + ": not an integer: '" + s + "'");
  return static_cast<int>(v);
}

}  // namespace

void RunConfig::validate() const {
  if (std::find(kCommands.begin(), kCommands.end(), command) == kCommands.end())
    throw ValidationError("unknown command '" + command + "'");
  if (!(A > 1.0)) throw ValidationError("--A must exceed 1");
  if (eps && !(*eps > 0.0 && *eps < 1.0)) throw ValidationError("--eps must lie in (0,1)");
  if (delta && !(*delta > 0.0 && *delta < 1.0)) throw ValidationError("--delta must lie in (0,1)");
  if (M && *M < 1) throw ValidationError("--M must be positive");
  if (nodes_per_octave < 4) throw ValidationError("--nodes-per-octave must be >= 4");
  if (threads < 1) throw ValidationError("--threads must be positive");
  if (levels && levels->lo > levels->hi) throw ValidationError("--levels: need k0 <= k1");
  if (command == "generate" && spec.empty()) throw ValidationError("generate: missing generator spec");
  if (command == "analyze" && measure_path.empty()) throw ValidationError("analyze: missing --measure");
  if (command == "verify" && suite != "all") {
    const auto& names = suite_names();
    if (std::find(names.begin(), names.end(), suite) == names.end())
      throw ValidationError("unknown suite '" + suite + "'");
  }
}

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j = {{"command", c.command},
                      {"spec", c.spec},
                      {"measure", c.measure_path},
                      {"family", c.family},
                      {"range", c.range},
                      {"origin", c.origin},
                      {"A", c.A},
                      {"nodes_per_octave", c.nodes_per_octave},
                      {"suite", c.suite},
                      {"out", c.out},
                      {"seed", c.seed},
                      {"threads", c.threads},
                      {"verbosity", c.verbosity},
                      {"timing", c.timing}};
  j["levels"] = c.levels ? nlohmann::json::array({c.levels->lo, c.levels->hi}) : nlohmann::json();
  j["eps"] = c.eps ? nlohmann::json(*c.eps) : nlohmann::json();
  j["delta"] = c.delta ? nlohmann::json(*c.delta) : nlohmann::json();
  j["M"] = c.M ? nlohmann::json(*c.M) : nlohmann::json();
  return j;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    c.command = j.at("command").get<std::string>();
    c.spec = j.value("spec", "");
    c.measure_path = j.value("measure", "");
    c.family = j.value("family", "");
    c.range = j.value("range", "");
    c.origin = j.value("origin", std::vector<double>{});
    c.A = j.value("A", 2.0);
    c.nodes_per_octave = j.value("nodes_per_octave", 16);
    c.suite = j.value("suite", "all");
    c.out = j.value("out", "");
    c.seed = j.value("seed", std::uint64_t{1});
    c.threads = j.value("threads", 1);
    c.verbosity = j.value("verbosity", 0);
    c.timing = j.value("timing", false);
    if (j.contains("levels") && !j["levels"].is_null())
      c.levels = LevelRange{j["levels"][0].get<int>(), j["levels"][1].get<int>()};
    if (j.contains("eps") && !j["eps"].is_null()) c.eps = j["eps"].get<double>();
    if (j.contains("delta") && !j["delta"].is_null()) c.delta = j["delta"].get<double>();
    if (j.contains("M") && !j["M"].is_null()) c.M = j["M"].get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("run config: ") + e.what());
  }
  return c;
}

LevelRange parse_levels(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ValidationError("--levels: expected k0:k1");
  const LevelRange r{to_int(text.substr(0, colon), "--levels"), to_int(text.substr(colon + 1), "--levels")};
  if (r.lo > r.hi) throw ValidationError("--levels: empty range");
  return r;
}

std::vector<double> parse_origin(const std::string& text) {
  std::vector<double> out;
  for (const auto& p : split(text, ',')) out.push_back(to_double(p, "--origin"));
  if (out.empty()) throw ValidationError("--origin: empty");
  return out;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void write_table(const Table& t, std::ostream& os) {
  os << "# schema: mscale." << t.name << "/1 columns=";
  for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << t.columns[c];
  os << '\n';
  for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "\t" : "") << t.columns[c];
  os << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t c = 0; c < r.size(); ++c) os << (c ? "\t" : "") << r[c];
    os << '\n';
  }
}

namespace {

using Clock = std::chrono::steady_clock;

void emit(const RunConfig& cfg, const std::vector<Table>& tables, const nlohmann::json& results,
          std::ostream& out) {
  for (const auto& t : tables) {
    write_table(t, out);
    if (!cfg.out.empty()) {
      std::ofstream f(cfg.out + "." + t.name + ".tsv");
      if (!f) throw std::runtime_error("cannot write " + cfg.out + "." + t.name + ".tsv");
      write_table(t, f);
    }
  }
  if (!cfg.out.empty()) {
    nlohmann::json summary = {{"config", to_json(cfg)}, {"results", results}};
    std::ofstream f(cfg.out + ".summary.json");
    if (!f) throw std::runtime_error("cannot write " + cfg.out + ".summary.json");
    f << summary.dump(2) << '\n';
  }
}

DyadicLattice lattice_of(const RunConfig& cfg, int d) {
  DyadicLattice lat = DyadicLattice::standard(d);
  if (!cfg.origin.empty()) {
    if (static_cast<int>(cfg.origin.size()) != d)
      throw ValidationError("--origin: dimension does not match the measure");
    lat.origin = Eigen::Map<const Vec>(cfg.origin.data(), d);
  }
  return lat;
}

std::string index_text(const DyadicCube& q) {
  std::string s;
  for (std::size_t j = 0; j < q.index.size(); ++j) s += (j ? "," : "") + std::to_string(q.index[j]);
  return s;
}

}  // namespace

int cmd_generate(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const GeneratorSpec spec = GeneratorSpec::parse(cfg.spec);
  const DiscreteMeasure mu = generate(spec, cfg.seed);
  if (!cfg.out.empty()) save_measure(mu, cfg.out);
  Table t{"generate", {"family", "dim", "s", "N", "mass", "min_sep", "diam"}, {}};
  t.rows.push_back({spec.family, std::to_string(mu.dim()), format_number(mu.s()),
                    std::to_string(mu.size()), format_number(mu.total_mass()),
                    format_number(mu.min_sep()), format_number(mu.diam())});
  write_table(t, out);
  return 0;
}

int cmd_analyze(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const DiscreteMeasure mu = load_measure(cfg.measure_path);
  const int d = mu.dim();
  const DyadicLattice lat = lattice_of(cfg, d);
  const LevelRange lr = cfg.levels ? *cfg.levels : default_levels(mu);
  const bool jones = is_integer(mu.s());
  const double r_min = default_r_min(mu);
  const double r_max = std::numeric_limits<double>::infinity();

  // per-cube Carleson ratios keyed by cube
  const CarlesonResult wolff = carleson_sweep(mu, lat, EnergyKind::wolff, lr.lo, lr.hi, r_min, r_max);
  std::optional<CarlesonResult> jr;
  if (jones) jr = carleson_sweep(mu, lat, EnergyKind::jones, lr.lo, lr.hi, r_min, r_max);

  Table coeffs{"coefficients",
               {"level", "index", "mu_Q", "I_Q", "density", "beta", "wolff_ratio", "jones_ratio",
                "face_flag"},
               {}};
  Table cons{"constituents", {"level", "index", "A", "value", "nodes_per_octave", "quad_flag"}, {}};
  std::size_t flagged = 0;
  for (std::size_t r = 0; r < wolff.rows.size(); ++r) {
    const DyadicCube& q = wolff.rows[r].cube;
    const double I = smoothed_cube_mass(mu, lat, q);
    std::string beta = "na";
    try {
      beta = format_number(beta_cube(mu, lat, q).value);
    } catch (const UndefinedBeta&) {
    }
    bool near_face = false;
    for (auto i : atoms_in_cube(mu, lat, q))
      near_face = near_face || face_distance(lat, q, mu.point(i)) < 1e-12 * side(q);
    flagged += near_face;
    coeffs.rows.push_back({std::to_string(q.level), index_text(q), format_number(wolff.rows[r].mass),
                           format_number(I), format_number(density(mu, lat, q, mu.s())), beta,
                           format_number(wolff.rows[r].ratio),
                           jr ? format_number(jr->rows[r].ratio) : "na", near_face ? "1" : "0"});
    const ConstituentRecord c = constituent(mu, lat, q, cfg.A, cfg.nodes_per_octave);
    cons.rows.push_back({std::to_string(q.level), index_text(q), format_number(cfg.A),
                         format_number(c.value), std::to_string(c.t_nodes), c.quad_flag ? "1" : "0"});
  }

  Table energy{"energy", {"kind", "r_min", "r_max", "total", "per_mass", "carleson_sup"}, {}};
  auto add_energy = [&](EnergyKind k, const CarlesonResult& c) {
    const EnergyReport e = energy_exact(mu, k, std::nullopt, r_min, r_max);
    energy.rows.push_back({to_string(k), format_number(r_min), format_number(r_max),
                           format_number(e.total), format_number(e.total / mu.total_mass()),
                           format_number(c.sup)});
  };
  add_energy(EnergyKind::wolff, wolff);
  if (jr) add_energy(EnergyKind::jones, *jr);

  if (flagged && cfg.verbosity >= 0)
    err << "note: " << flagged << " cubes hold an atom within 1e-12 l(Q) of a face\n";
  nlohmann::json results = {{"N", mu.size()},
                            {"mass", mu.total_mass()},
                            {"levels", {lr.lo, lr.hi}},
                            {"cubes", wolff.rows.size()},
                            {"face_flagged_cubes", flagged},
                            {"wolff_carleson_sup", wolff.sup}};
  if (jr) results["jones_carleson_sup"] = jr->sup;
  emit(cfg, {coeffs, energy, cons}, results, out);
  return 0;
}

int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  std::optional<DiscreteMeasure> fixture;
  if (!cfg.measure_path.empty()) fixture = load_measure(cfg.measure_path);
  SuiteOptions o;
  o.seed = cfg.seed;
  o.A = cfg.A;
  o.eps = cfg.eps;
  o.delta = cfg.delta;
  o.M = cfg.M;
  o.nodes_per_octave = cfg.nodes_per_octave;
  o.levels = cfg.levels;
  o.measure = fixture ? &*fixture : nullptr;
  if (!cfg.origin.empty()) o.origin = Eigen::Map<const Vec>(cfg.origin.data(), cfg.origin.size());
  const std::vector<std::string> suites =
      cfg.suite == "all" ? suite_names() : std::vector<std::string>{cfg.suite};
  Table t{"verify", {"suite", "check", "measured", "relation", "threshold", "tag", "status", "detail"}, {}};
  if (cfg.timing) t.columns.push_back("seconds");
  nlohmann::json results = nlohmann::json::array();
  std::size_t failures = 0;
  for (const auto& name : suites) {
    const SuiteResult r = run_suite(name, o);
    failures += r.failures();
    for (const auto& row : r.rows) {
      std::vector<std::string> cells = {row.suite,     row.name, format_number(row.measured),
                                        row.relation,  format_number(row.threshold),
                                        row.tag,       to_string(row.status), row.detail};
      if (cfg.timing) cells.push_back(format_number(r.seconds));
      t.rows.push_back(cells);
    }
    results.push_back({{"suite", name},
                       {"failures", r.failures()},
                       {"vacuous", r.vacuous()},
                       {"checks", r.rows.size()}});
  }
  emit(cfg, {t}, results, out);
  return failures == 0 ? 0 : 1;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  if (cfg.range.empty()) throw ValidationError("sweep: missing --range");
  const auto colon = cfg.range.find(':');
  if (colon == std::string::npos) throw ValidationError("sweep: expected --range a:b");
  const int a = to_int(cfg.range.substr(0, colon), "--range");
  const int b = to_int(cfg.range.substr(colon + 1), "--range");
  if (a > b) throw ValidationError("sweep: empty range");
  const std::string fam = cfg.family.empty() ? "cantor_four_corner" : cfg.family;
  Table t{"sweep", {"family", "parameter", "N", "kind", "energy_per_mass", "constituent_sum"}, {}};
  if (cfg.timing) t.columns.push_back("seconds");
  nlohmann::json results = nlohmann::json::array();
  for (int p = a; p <= b; ++p) {
    GeneratorSpec spec;
    if (fam == "cantor_four_corner") {
      spec = GeneratorSpec::cantor_four_corner(p);
    } else if (fam == "cantor_self_similar") {
      spec = GeneratorSpec::cantor_self_similar(2, 0.3, p);
    } else if (fam == "lipschitz_graph") {
      // parameter p: grid step 2^{-p}
      spec = GeneratorSpec::lipschitz_graph(2, 1, 0.3, 1.0, std::ldexp(1.0, -p));
    } else {
      throw ValidationError("sweep: unknown family '" + fam + "'");
    }
    const DiscreteMeasure mu = generate(spec, cfg.seed);
    const EnergyKind kind = is_integer(mu.s()) ? EnergyKind::jones : EnergyKind::wolff;
    const auto t0 = Clock::now();
    const TrendPoint tp = carleson_point(mu, kind, p);
    // constituent sum over the lattice, skipped above 1024 atoms
    std::string csum = "na";
    if (mu.size() <= 1024 && mu.size() > 1) {
      const DyadicLattice lat = lattice_of(cfg, mu.dim());
      const LevelRange lr = default_levels(mu);
      CompensatedSum s;
      for (const auto& q : charged_cubes(mu, lat, lr.lo, lr.lo + 2))
        s += constituent(mu, lat, q, cfg.A, cfg.nodes_per_octave, false).value;
      csum = format_number(s.value() / mu.total_mass());
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    std::vector<std::string> row = {fam, std::to_string(p), std::to_string(mu.size()), to_string(kind),
                                    format_number(tp.value), csum};
    if (cfg.timing) row.push_back(format_number(secs));
    t.rows.push_back(row);
    results.push_back({{"parameter", p}, {"N", mu.size()}, {"energy_per_mass", tp.value}});
  }
  emit(cfg, {t}, results, out);
  return 0;
}

int run_command(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    cfg.validate();
    set_default_threads(cfg.threads);
    if (cfg.command == "generate") return cmd_generate(cfg, out, err);
    if (cfg.command == "analyze") return cmd_analyze(cfg, out, err);
    if (cfg.command == "verify") return cmd_verify(cfg, out, err);
    return cmd_sweep(cfg, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace mscale
