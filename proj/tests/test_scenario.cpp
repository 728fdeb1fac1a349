#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <string>

#include "ptobs/error.hpp"
#include "ptobs/scenario.hpp"

using namespace ptobs;

namespace {

const char* kMinimal = R"json({
  "name": "mini",
  "system": { "n": 2, "f": ["-sin(x1)", "-x1 + u"], "f0": "0", "u": "sin(t)", "d": "0" },
  "observers": [ { "variant": "pt", "gains": [3, 2], "T": 0.5, "m": 0.1 } ],
  "initial": { "x0": [1, -1] },
  "sim": { "t_end": 1 }
})json";

std::string patch(std::string text, const std::string& from, const std::string& to)
{
  const auto pos = text.find(from);
  REQUIRE(pos != std::string::npos);
  return text.replace(pos, from.size(), to);
}

std::string validation_path(const std::string& text)
{
  try {
    parse_scenario(text);
  } catch (const ValidationError& e) {
    return e.path();
  }
  return "<no error>";
}

}  // namespace

TEST_CASE("shipped example scenarios")
{
  const Scenario s1 = resolve_scenario("example1.json");
  CHECK(s1.system_def.n == 2);
  REQUIRE(s1.observers.size() == 2);
  CHECK(s1.observers[0].variant == "pt");
  CHECK(s1.observers[1].variant == "hg");
  const auto& pt = std::get<PtObserverSpec>(s1.observers[0].spec);
  CHECK(pt.gains == std::vector<double>{3.0, 2.0});
  CHECK(pt.ts.T == 0.5);
  CHECK(pt.ts.m == 0.1);
  CHECK(pt.ts.mu_cap == 1e10);
  const auto& hg = std::get<HgObserverSpec>(s1.observers[1].spec);
  CHECK(hg.epsilon == 0.01);
  CHECK(hg.power == HgGainPower::Standard);
  CHECK(s1.x0 == StateVec{1.0, -1.0});
  CHECK(s1.sim.dt_base == 1e-4);
  CHECK(s1.sim.dt_min == 1e-9);
  CHECK(*s1.metrics.reference_T == 0.5);

  const Scenario s2 = resolve_scenario("example2");
  REQUIRE(s2.observers.size() == 1);
  CHECK(s2.observers[0].variant == "extended_pt");
  CHECK(s2.xhat0[0] == StateVec{0.0, 0.0, 0.0});

  CHECK(builtin_scenarios().size() >= 2);
  CHECK_THROWS_AS(resolve_scenario("no-such-scenario"), Error);
}

TEST_CASE("defaults are applied")
{
  const Scenario s = parse_scenario(kMinimal);
  CHECK(s.observers[0].name == "pt1");
  CHECK(s.xhat0[0] == StateVec{0.0, 0.0});
  CHECK(s.sim.dt_base == 1e-4);
  CHECK(s.sim.dt_min == doctest::Approx(5e-10));
  CHECK(s.sim.record_stride >= 1);
  CHECK(s.sim.noise_std == 0.0);
  CHECK(s.certify.enabled);
  CHECK(*s.metrics.reference_T == 0.5);
  CHECK(s.output.csv_path == "{observer}.csv");
  CHECK(s.output.plot_script == "plot.gp");
}

TEST_CASE("triangularity is checked on load")
{
  CHECK_THROWS_AS(parse_scenario(patch(kMinimal, "\"-x1 + u\"", "\"-x1 + x3\"")), Error);
  CHECK_THROWS_AS(parse_scenario(patch(kMinimal, "\"-sin(x1)\"", "\"-sin(x2)\"")), Error);
}

TEST_CASE("schema errors report the field path")
{
  CHECK(validation_path(patch(kMinimal, "\"T\": 0.5, ", "")) == "observers[0].T");
  CHECK(validation_path(patch(kMinimal, "\"t_end\": 1", "\"t_end\": 1, \"dtt\": 2")) == "sim.dtt");
  CHECK(validation_path(patch(kMinimal, "\"n\": 2", "\"n\": 2.5")) == "system.n");
  CHECK(validation_path(patch(kMinimal, "\"x0\": [1, -1]", "\"x0\": [1]")) == "initial.x0");
  CHECK(validation_path(patch(kMinimal, "\"variant\": \"pt\"", "\"variant\": \"kalman\"")) == "observers[0].variant");
  CHECK(validation_path(patch(kMinimal, "\"gains\": [3, 2]", "\"gains\": [3]")) == "observers[0]");
  CHECK(validation_path(patch(kMinimal, "\"x0\": [1, -1]", "\"x0\": [1, -1], \"xhat0\": [0]")) == "initial.xhat0");
  CHECK(validation_path(patch(kMinimal, "\"t_end\": 1", "\"t_end\": -1")) == "sim.t_end");
  CHECK(validation_path(patch(kMinimal, "\"variant\": \"pt\",", "\"variant\": \"pt\", \"epsilon\": 0.1,")) ==
        "observers[0].epsilon");
  CHECK(validation_path("{ not json") == "(document)");
  CHECK(validation_path(patch(kMinimal, "\"name\": \"mini\",", "")) == "name");
}

TEST_CASE("observer options")
{
  const std::string two = patch(kMinimal, "\"m\": 0.1 }",
                                "\"m\": 0.1, \"name\": \"a\" }, { \"name\": \"b\", \"variant\": \"hg\", "
                                "\"alpha\": [3, 2], \"epsilon\": 0.05, \"hg_gain_power\": \"linear\", "
                                "\"xhat0\": [0.5, 0.5] }");
  const Scenario s = parse_scenario(two);
  REQUIRE(s.observers.size() == 2);
  CHECK(std::get<HgObserverSpec>(s.observers[1].spec).power == HgGainPower::Linear);
  CHECK(s.xhat0[1] == StateVec{0.5, 0.5});
  CHECK(s.xhat0[0] == StateVec{0.0, 0.0});

  CHECK_THROWS_AS(parse_scenario(patch(two, "\"name\": \"b\"", "\"name\": \"a\"")), ValidationError);
  CHECK_THROWS_AS(parse_scenario(patch(two, "\"name\": \"b\"", "\"name\": \"b/c\"")), ValidationError);
  CHECK_THROWS_AS(parse_scenario(patch(two, "\"sim\"", "\"output\": { \"csv_path\": \"run.csv\" }, \"sim\"")),
                  ValidationError);

  const Scenario poles = parse_scenario(patch(kMinimal, "\"gains\": [3, 2]", "\"poles\": [[-1, 2], [-1, -2]]"));
  const auto& g = std::get<PtObserverSpec>(poles.observers[0].spec).gains;
  CHECK(g[0] == doctest::Approx(2.0));
  CHECK(g[1] == doctest::Approx(5.0));
  CHECK(poles.observers[0].poles.has_value());
  CHECK_THROWS_AS(parse_scenario(patch(kMinimal, "\"gains\": [3, 2]", "\"poles\": [[-1, 2], -1]")), ValidationError);
  CHECK_THROWS_AS(parse_scenario(patch(kMinimal, "\"gains\": [3, 2]", "\"gains\": [3, 2], \"poles\": [-1, -2]")),
                  ValidationError);
}

TEST_CASE("expression errors surface as parse errors")
{
  CHECK_THROWS_AS(parse_scenario(patch(kMinimal, "\"-x1 + u\"", "\"-x1 + foo(u)\"")), ParseError);
  CHECK_THROWS_AS(parse_scenario(patch(kMinimal, "\"u\": \"sin(t)\"", "\"u\": \"sin(x1)\"")), ParseError);
}

TEST_CASE("high-gain only scenarios need a reference time")
{
  const std::string hg = patch(kMinimal, "{ \"variant\": \"pt\", \"gains\": [3, 2], \"T\": 0.5, \"m\": 0.1 }",
                               "{ \"variant\": \"hg\", \"alpha\": [3, 2], \"epsilon\": 0.1 }");
  CHECK(validation_path(hg) == "metrics.reference_T");
  const Scenario s = parse_scenario(patch(hg, "\"sim\"", "\"metrics\": { \"reference_T\": 0.3 }, \"sim\""));
  CHECK(*s.metrics.reference_T == 0.3);
  CHECK(s.sim.dt_min == doctest::Approx(1e-9));
}
