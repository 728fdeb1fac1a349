#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "ptobs/error.hpp"
#include "ptobs/observers.hpp"

using namespace ptobs;

namespace {

TriangularSystem example_plant(const std::string& d = "5*sin(2*t)")
{
  return TriangularSystem(2, {"-sin(x1)", "-x1 - 0.02*x2^3 + u"}, "0", "sin(0.35*t)", d);
}

const PtObserverSpec kPt{{3.0, 2.0}, TimeScale(0.5, 0.1)};
const HgObserverSpec kHg{{3.0, 2.0}, 0.01};
const ExtendedPtObserverSpec kExt{{6.0, 11.0, 6.0}, TimeScale(1.0, 0.1)};

void check_vec(const StateVec& got, const StateVec& want, double rel = 1e-14)
{
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    if (rel == 0.0) {
      CHECK(got[i] == want[i]);
    } else {
      CHECK(got[i] == doctest::Approx(want[i]).epsilon(rel).scale(1.0));
    }
  }
}

}  // namespace

TEST_CASE("prescribed-time observer field")
{
  const TriangularSystem sys = example_plant();
  check_vec(pt_observer_rhs(sys, kPt, {0.0, 0.0}, 0.0, 0.0), {0.0, 0.0});
  check_vec(pt_observer_rhs(sys, kPt, {0.0, 0.0}, 1.0, 0.0), {3.0, 2.0});
  const StateVec at_quarter = pt_observer_rhs(sys, kPt, {0.0, 0.0}, 1.0, 0.25);
  CHECK(at_quarter[0] == doctest::Approx(6.430640775).epsilon(1e-9));
  CHECK(at_quarter[1] == doctest::Approx(9.18958683997628).epsilon(1e-14));
}

TEST_CASE("high-gain observer field")
{
  const TriangularSystem sys = example_plant();
  check_vec(hg_observer_rhs(sys, kHg, {0.0, 0.0}, 0.0, 0.0), {0.0, 0.0});
  check_vec(hg_observer_rhs(sys, HgObserverSpec{{3.0, 2.0}, 1.0}, {0.0, 0.0}, 1.0, 0.0), {3.0, 2.0});
  check_vec(hg_observer_rhs(sys, kHg, {0.0, 0.0}, 1.0, 0.0), {300.0, 20000.0});
  check_vec(hg_observer_rhs(sys, HgObserverSpec{{3.0, 2.0}, 0.01, HgGainPower::Linear}, {0.0, 0.0}, 1.0, 0.0),
            {300.0, 200.0});
}

TEST_CASE("extended observer field")
{
  const TriangularSystem sys = example_plant();
  check_vec(extended_pt_observer_rhs(sys, kExt, {0.0, 0.0, 0.0}, 0.0, 0.0), {0.0, 0.0, 0.0});
  check_vec(extended_pt_observer_rhs(sys, kExt, {0.0, 0.0, 0.0}, 1.0, 0.0), {6.0, 11.0, 6.0});
  check_vec(extended_pt_observer_rhs(sys, kExt, {0.0, 1.0, 0.0}, 0.0, 0.0), {1.0, -0.02, 0.0});
  check_vec(extended_pt_observer_rhs(sys, kExt, {0.0, 0.0, 0.5}, 0.0, 0.0), {0.0, 0.5, 0.0});
}

TEST_CASE("gain schedule follows the time scale")
{
  for (double t : {0.0, 0.01, 0.2, 0.4, 0.49, 0.4999, 0.4999999}) {
    const auto K = injection_gains(kPt, t);
    const double m = mu(kPt.ts, t);
    for (int i = 1; i <= 2; ++i) {
      CHECK(K[static_cast<std::size_t>(i - 1)] ==
            doctest::Approx(kPt.gains[static_cast<std::size_t>(i - 1)] * std::pow(m, i * 1.1)).epsilon(1e-12));
    }
  }
  const auto Kc = injection_gains(kPt, 0.7);
  CHECK(Kc[1] == doctest::Approx(2.0 * std::pow(1e10, 2.2)).epsilon(1e-12));
  CHECK(injection_gains(kHg, 3.0) == std::vector<double>{300.0, 20000.0});
  CHECK(gain_scale(kHg, 0.3) == 1.0);
  CHECK(gain_scale(kPt, 0.25) == 2.0);
}

TEST_CASE("injection vanishes when the output matches")
{
  const TriangularSystem sys = example_plant();
  const PtObserverSpec open{{0.0, 0.0}, TimeScale(0.5, 0.1)};
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> v(-3.0, 3.0);
  for (int i = 0; i < 50; ++i) {
    const StateVec xh{v(rng), v(rng)};
    const double t = std::abs(v(rng)) / 7.0;
    check_vec(pt_observer_rhs(sys, kPt, xh, xh[0], t), pt_observer_rhs(sys, open, xh, 0.0, t), 0.0);
    check_vec(hg_observer_rhs(sys, kHg, xh, xh[0], t), pt_observer_rhs(sys, open, xh, 0.0, t), 0.0);
  }
}

TEST_CASE("joint field examples")
{
  const TriangularSystem sys = example_plant();
  const JointState d = joint_rhs(sys, kPt, {{0.0, 0.0}, {0.0, 0.0}}, 0.0);
  CHECK(d.x == StateVec{0.0, 0.0});
  CHECK(d.xhat == StateVec{0.0, 0.0});

  const TriangularSystem matched(2, {"-sin(x1)", "-x1 - 0.02*x2^3 + u"}, "-x1 - 0.02*x2^3 + u", "sin(0.35*t)", "0");
  const JointState e = joint_rhs(matched, kPt, {{0.3, -0.7}, {0.3, -0.7}}, 0.2);
  CHECK(e.x == e.xhat);

  CHECK_THROWS_AS(joint_rhs(sys, kExt, {{0.0, 0.0}, {0.0, 0.0}}, 0.0), DimensionError);
  CHECK_THROWS_AS(joint_rhs(sys, PtObserverSpec{{1.0, 2.0, 3.0}, TimeScale(1.0, 0.1)}, {{0.0, 0.0}, {0.0, 0.0, 0.0}}, 0.0),
                  DimensionError);
}

TEST_CASE("error dynamics from the joint field match the closed form")
{
  const TriangularSystem sys = example_plant();
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> v(-4.0, 4.0);
  std::uniform_real_distribution<double> tv(0.0, 0.499);
  for (int trial = 0; trial < 100; ++trial) {
    const StateVec x{v(rng), v(rng)};
    const StateVec xh{v(rng), v(rng)};
    const double t = tv(rng);
    const JointState d = joint_rhs(sys, kPt, {x, xh}, t);
    const double m = mu(kPt.ts, t);
    const double e1 = x[0] - xh[0], e2 = x[1] - xh[1];
    const double u = std::sin(0.35 * t);
    const double f1 = -std::sin(x[0]), f1h = -std::sin(xh[0]);
    const double f2 = -x[0] - 0.02 * x[1] * x[1] * x[1] + u;
    const double want1 = e2 + f1 - f1h - 3.0 * std::pow(m, 1.1) * e1;
    const double want2 = f2 + 5.0 * std::sin(2.0 * t) - 0.0 - 2.0 * std::pow(m, 2.2) * e1;
    CHECK(d.x[0] - d.xhat[0] == doctest::Approx(want1).epsilon(1e-10));
    CHECK(d.x[1] - d.xhat[1] == doctest::Approx(want2).epsilon(1e-10));
  }
}

TEST_CASE("spec checks")
{
  CHECK(estimate_dim(kPt, 2) == 2);
  CHECK(estimate_dim(kExt, 2) == 3);
  CHECK_THROWS_AS(check_spec(kExt, 3), DimensionError);
  CHECK_THROWS_AS(check_spec(HgObserverSpec{{1.0}, 0.1}, 2), DimensionError);
  CHECK_THROWS(check_spec(HgObserverSpec{{1.0, 1.0}, 0.0}, 2));
  CHECK_FALSE(time_scale_of(kHg).has_value());
  CHECK(time_scale_of(kExt)->T == 1.0);
}
