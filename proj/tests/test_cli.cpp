#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "mscale/cli.hpp"

using namespace mscale;

namespace {

std::string run(const RunConfig& cfg, int* code = nullptr) {
  std::ostringstream out, err;
  const int rc = run_command(cfg, out, err);
  if (code) *code = rc;
  return out.str();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("run config JSON round trip") {
  RunConfig c;
  c.command = "sweep";
  c.family = "lipschitz_graph";
  c.range = "4:6";
  c.origin = {0.25, -0.5};
  c.levels = LevelRange{-4, 1};
  c.A = 4.0;
  c.eps = 0.1;
  c.M = 3;
  c.seed = 99;
  c.timing = true;
  const auto j = to_json(c);
  const auto back = run_config_from_json(j);
  CHECK(to_json(back) == j);
  CHECK(back.levels->lo == -4);
  CHECK(back.origin == c.origin);
  CHECK_FALSE(back.delta.has_value());
}

TEST_CASE("config validation and argument parsing") {
  RunConfig c;
  c.command = "frobnicate";
  CHECK_THROWS(c.validate());
  c.command = "verify";
  c.A = 0.5;
  CHECK_THROWS(c.validate());
  CHECK(parse_levels("-3:2").lo == -3);
  CHECK(parse_levels("-3:2").hi == 2);
  CHECK_THROWS(parse_levels("2:-3"));
  CHECK_THROWS(parse_levels("x"));
  CHECK(parse_origin("0.5,-1").size() == 2);
}

TEST_CASE("generate reports the Cantor fixture and is byte deterministic") {
  RunConfig c;
  c.command = "generate";
  c.spec = "cantor_four_corner:gen=3";
  const std::string path = "mscale_cli_test_measure.json";
  c.out = path;
  int rc = -1;
  const auto a = run(c, &rc);
  CHECK(rc == 0);
  const auto file_a = slurp(path);
  const auto b = run(c);
  CHECK(a == b);
  CHECK(file_a == slurp(path));
  CHECK(a.find("\t64\t") != std::string::npos);

  RunConfig an;
  an.command = "analyze";
  an.measure_path = path;
  const auto x = run(an, &rc);
  CHECK(rc == 0);
  CHECK(x == run(an));
  CHECK(x.find("# schema: mscale.coefficients/1") != std::string::npos);
  std::remove(path.c_str());
}

TEST_CASE("verify exit codes") {
  RunConfig c;
  c.command = "verify";
  c.suite = "growth_identity";
  int rc = -1;
  const auto a = run(c, &rc);
  CHECK(rc == 0);
  CHECK(a == run(c));
  c.suite = "no_such_suite";
  run(c, &rc);
  CHECK(rc == 2);
}

TEST_CASE("sweep is deterministic") {
  RunConfig c;
  c.command = "sweep";
  c.family = "cantor_four_corner";
  c.range = "2:3";
  int rc = -1;
  const auto a = run(c, &rc);
  CHECK(rc == 0);
  CHECK(a == run(c));
  c.range = "3:2";
  run(c, &rc);
  CHECK(rc == 2);
}

TEST_CASE("number formatting") {
  CHECK(format_number(0.5) == "0.5");
  CHECK(format_number(1.0 / 3.0) == "0.333333333333");
}
