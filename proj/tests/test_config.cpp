#include <doctest.h>

#include <sstream>

#include "pinmix/config.hpp"

using namespace pinmix;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

ConfigError parse_error(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e;
  }
  FAIL("expected a ConfigError");
  return ConfigError(0, "", "");
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = parse(
      "# sweep\n"
      "L = 32, 64\n"
      "lambda = [0.5, 1.0]   # brackets allowed\n"
      "replicas = 10\n"
      "master_seed = 18446744073709551615\n"
      "time_unit = absolute\n"
      "horizon = 1e4\n"
      "grid = 0, 10, 20\n"
      "epsilon = 0.25\n"
      "out_dir = results/a\n");
  CHECK(c.L == std::vector<int>{32, 64});
  CHECK(c.lambda == std::vector<double>{0.5, 1.0});
  CHECK(c.replicas == 10);
  CHECK(c.master_seed == 18446744073709551615ull);
  CHECK(c.time_unit == TimeUnit::absolute);
  CHECK(c.horizon == 1e4);
  CHECK(c.grid.size() == 3);
  CHECK(c.epsilon == std::vector<double>{0.25});
  CHECK(c.out_dir == "results/a");
  CHECK(c.delta == 0.5);  // default kept
}

TEST_CASE("config errors carry line and field") {
  auto e = parse_error("L = 32\nreplicas = ten\n");
  CHECK(e.line() == 2);
  CHECK(e.field() == "replicas");

  e = parse_error("L = 32\n\nfoo = 1\n");
  CHECK(e.line() == 3);
  CHECK(e.field() == "foo");

  e = parse_error("L = 32\nL = 64\n");
  CHECK(e.line() == 2);

  e = parse_error("lambda = 1\nL = 7\n");
  CHECK(e.line() == 2);
  CHECK(e.field() == "L");
  CHECK(std::string(e.what()).find("L must be even") != std::string::npos);

  e = parse_error("epsilon = 0.25, 1.5\n");
  CHECK(e.field() == "epsilon");
  CHECK(e.line() == 1);

  e = parse_error("grid = 2, 1\n");
  CHECK(e.field() == "grid");

  e = parse_error("replicas = 0\n");
  CHECK(e.field() == "replicas");

  e = parse_error("just words\n");
  CHECK(e.line() == 1);

  e = parse_error("time_unit = hours\n");
  CHECK(e.field() == "time_unit");
}

TEST_CASE("config round trip") {
  ExperimentConfig c;
  c.L = {8, 16};
  c.lambda = {0.1, 1.0 / 3.0};
  c.grid = {0.0, 0.1, 0.7};
  c.master_seed = 99;
  c.beta = 2.5;
  const auto back = parse(format_config(c));
  CHECK(back.L == c.L);
  CHECK(back.lambda == c.lambda);
  CHECK(back.grid == c.grid);
  CHECK(back.master_seed == 99);
  CHECK(back.beta == 2.5);
  CHECK(format_config(back) == format_config(c));
}
