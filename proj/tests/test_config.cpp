#include <doctest.h>

#include "advfront/config.hpp"

using namespace advfront;

TEST_CASE("empty document gives defaults") {
  const RunConfig c = parse_run_config("");
  CHECK(c.model == "klausmeier");
  CHECK(c.delta == 1e-3);
  CHECK(c.contour_deltas.size() == 4);
}

TEST_CASE("sections override defaults") {
  const RunConfig c = parse_run_config(R"(
model: {name: klausmeier, mu: [1.2, 1.0, 6.2], orientation: desert_right}
params: {delta: 0.01, nu: 50, nu_range: {start: 10, stop: 1000, count: 3, spacing: log}}
sim: {L_y: 500, N_y: 32, scheme: richardson, perturbation: {modes: [{m: 2, amplitude: 0.1}]}}
output: {directory: res}
)");
  CHECK(c.mu[2] == 6.2);
  CHECK(c.orientation == Orientation::DesertRight);
  CHECK(c.delta == 0.01);
  REQUIRE(c.nu_values.size() == 3);
  CHECK(c.nu_values[1] == doctest::Approx(100.0));
  CHECK(c.sim.scheme == TimeScheme::Richardson);
  REQUIRE(c.sim.perturbation.modes.size() == 1);
  CHECK(c.sim.perturbation.modes[0].first == 2);
  CHECK(c.output_dir == "res");
  const Json j = to_json(c);
  CHECK(j["sim"]["scheme"] == "richardson");
  CHECK(j["params"]["nu_values"].size() == 3);
}

TEST_CASE("invalid documents are rejected with location") {
  try {
    parse_run_config("params:\n  delta: 0.01\n  nuu: 3\n", "cfg.yaml");
    FAIL("accepted an unknown key");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("cfg.yaml:3") != std::string::npos);
    CHECK(std::string(e.what()).find("nuu") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_run_config("params: {nu_range: {start: 1, stop: 2, count: 0}}"), InputError);
  CHECK_THROWS_AS(parse_run_config("params: {delta: -1}"), InputError);
  CHECK_THROWS_AS(parse_run_config("model: {mu: [0.1, 0.1]}"), InputError);
  CHECK_THROWS_AS(parse_run_config("model: {name: gray_scott}"), InputError);
  CHECK_THROWS_AS(parse_run_config("sim: {xi_boundary: periodic}"), InputError);
  CHECK_THROWS_AS(parse_run_config("params: {delta: abc}"), InputError);
  CHECK_THROWS_AS(parse_run_config("[1, 2"), InputError);
}
