#include <CLI11.hpp>

#include <iostream>

#include "mscale/cli.hpp"

int main(int argc, char** argv) {
  mscale::RunConfig cfg;
  std::string levels, origin;
  double eps = 0.0, delta = 0.0;
  int M = 0;

  CLI::App app{"mscale: multiscale flatness and square-function analysis of discrete measures"};
  app.require_subcommand(1);
  auto common = [&](CLI::App* c) {
    c->add_option("--origin", origin, "lattice origin x,y[,z]");
    c->add_option("--levels", levels, "level range k0:k1");
    c->add_option("--A", cfg.A, "constituent dilation A > 1");
    c->add_option("--eps", eps, "filter epsilon");
    c->add_option("--delta", delta, "filter delta");
    c->add_option("--M", M, "D_M look-ahead");
    c->add_option("--nodes-per-octave", cfg.nodes_per_octave, "scale quadrature nodes per octave");
    c->add_option("--out", cfg.out, "output path (generate) or prefix for tables and summary");
    c->add_option("--seed", cfg.seed, "random seed");
    c->add_option("--threads", cfg.threads, "worker threads");
    c->add_flag("-v,--verbose", cfg.verbosity, "verbosity");
    c->add_flag("--timing", cfg.timing, "add wall-clock columns");
  };
  auto* gen = app.add_subcommand("generate", "write a generated measure");
  gen->add_option("spec", cfg.spec, "generator spec, e.g. cantor_four_corner:gen=3")->required();
  common(gen);
  auto* ana = app.add_subcommand("analyze", "coefficient, energy and constituent tables");
  ana->add_option("--measure", cfg.measure_path, "measure file")->required();
  common(ana);
  auto* ver = app.add_subcommand("verify", "run verification suites");
  ver->add_option("--suite", cfg.suite, "suite name or 'all'");
  ver->add_option("--measure", cfg.measure_path, "extra fixture measure");
  common(ver);
  auto* swp = app.add_subcommand("sweep", "parameter sweep of Carleson energy ratios");
  swp->add_option("--family", cfg.family,
                  "cantor_four_corner | cantor_self_similar | lipschitz_graph");
  swp->add_option("--range", cfg.range, "parameter range a:b")->required();
  common(swp);

  CLI11_PARSE(app, argc, argv);
  for (auto* c : {gen, ana, ver, swp})
    if (c->parsed()) {
      cfg.command = c->get_name();
      if (c->count("--eps")) cfg.eps = eps;
      if (c->count("--delta")) cfg.delta = delta;
      if (c->count("--M")) cfg.M = M;
    }
  try {
    if (!levels.empty()) cfg.levels = mscale::parse_levels(levels);
    if (!origin.empty()) cfg.origin = mscale::parse_origin(origin);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return mscale::run_command(cfg, std::cout, std::cerr);
}
