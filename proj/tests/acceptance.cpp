// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ptobs/certify.hpp"
#include "ptobs/metrics.hpp"
#include "ptobs/observers.hpp"
#include "ptobs/run.hpp"
#include "ptobs/scenario.hpp"
#include "ptobs/sim.hpp"

using namespace ptobs;
namespace fs = std::filesystem;

namespace {

// Golden value frozen from the first verified Example 1 run.
constexpr double kGoldenPeakRatio = 35.828565687290315;

struct Outcome
{
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome gain_certificates()
{
  auto worst = [](const std::vector<double>& L, std::vector<double> want) {
    const auto eig = eigenvalues(companion(L));
    std::sort(want.begin(), want.end());
    double err = 0.0;
    for (std::size_t i = 0; i < eig.size(); ++i) {
      err = std::max(err, std::abs(eig[i] - Complex(want[i], 0.0)));
    }
    return eig.size() == want.size() ? err : INFINITY;
  };
  const double e2 = worst({3.0, 2.0}, {-1.0, -2.0});
  const double e3 = worst({6.0, 11.0, 6.0}, {-1.0, -2.0, -3.0});
  return {e2 <= 1e-9 && e3 <= 1e-9, "max eigenvalue error " + fmt("%.3g", std::max(e2, e3))};
}

Outcome lemma1_property()
{
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> g;
  int failures = 0;
  double worst = INFINITY;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 6);
    Matrix R(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) R(i, j) = g(rng);
    }
    const Matrix P = R * R.transpose() + 0.1 * Matrix::Identity(n, n);
    const double v = lemma1_lambda(P);
    worst = std::min(worst, v);
    if (!(v > 0.0)) ++failures;
  }
  const double at_identity = lemma1_lambda(Matrix::Identity(2, 2));
  const bool identity_ok = std::abs(at_identity - 2.0) <= 1e-12;
  return {failures == 0 && identity_ok,
          std::to_string(failures) + "/1000 random SPD matrices non-positive (min " + fmt("%.3g", worst) +
              "), identity value " + fmt("%.17g", at_identity)};
}

Outcome lyapunov_property()
{
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> pole(-5.0, -0.1);
  double worst_res = 0.0;
  double min_eig = INFINITY;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 8);
    std::vector<Complex> poles;
    for (int i = 0; i < n; ++i) poles.emplace_back(pole(rng), 0.0);
    const Matrix M = companion(gains_from_poles(poles));
    const Matrix Q = Matrix::Identity(n, n);
    const Matrix P = solve_lyapunov(M, Q);
    worst_res = std::max(worst_res, (M.transpose() * P + P * M + Q).norm() / Q.norm());
    min_eig = std::min(min_eig, jacobi_eigen(P).values.front());
  }
  const double secs = seconds_since(t0);
  return {worst_res <= 1e-9 && min_eig > 0.0 && secs < 5.0,
          "max relative residual " + fmt("%.3g", worst_res) + ", min eig(P) " + fmt("%.3g", min_eig) + ", " +
              fmt("%.2f", secs) + " s"};
}

Scenario example1_with_disturbance(const std::string& d)
{
  Scenario sc = resolve_scenario("example1");
  sc.system_def.d = d;
  sc.system = std::make_shared<const TriangularSystem>(sc.system_def.n, sc.system_def.f, sc.system_def.f0,
                                                       sc.system_def.u, sc.system_def.d);
  return sc;
}

double pt_error_before_T(const Scenario& sc, double* secs = nullptr)
{
  const auto t0 = std::chrono::steady_clock::now();
  const ObserverSpec& spec = sc.observers[0].spec;
  const double T = time_scale_of(spec)->T;
  SimConfig cfg = sc.sim;
  cfg.t_end = 2.0 * T;
  cfg.record_stride = 1;
  const Trajectory tr = simulate(*sc.system, spec, sc.x0, sc.xhat0[0], cfg);
  if (secs) *secs = seconds_since(t0);
  return err_norm_at(tr, T - 1e-3 * T);
}

Outcome prescribed_time_convergence()
{
  double secs = 0.0;
  const double e = pt_error_before_T(example1_with_disturbance("5*sin(2*t)"), &secs);
  return {e <= 1e-2 && secs < 30.0, "err_norm(T - 1e-3 T) = " + fmt("%.6g", e) + " (limit 1e-2), " +
                                        fmt("%.2f", secs) + " s"};
}

Outcome amplitude_sweep()
{
  const double e50 = pt_error_before_T(example1_with_disturbance("50*sin(2*t)"));
  const double e500 = pt_error_before_T(example1_with_disturbance("500*sin(2*t)"));
  return {e50 <= 2e-2 && e500 <= 2e-2,
          "amplitude 50: " + fmt("%.6g", e50) + ", amplitude 500: " + fmt("%.6g", e500) + " (limit 2e-2)"};
}

Outcome pt_vs_hg(const RunResult& ex1)
{
  if (ex1.comparisons.size() != 1) return {false, "no comparison produced"};
  const Comparison& c = ex1.comparisons[0].result;
  const bool golden = std::abs(c.peak_ratio - kGoldenPeakRatio) <= 1e-6 * kGoldenPeakRatio;
  return {c.pt_lower_peak && c.pt_lower_post_T && golden,
          std::string("verdicts (") + (c.pt_lower_peak ? "true" : "false") + ", " +
              (c.pt_lower_post_T ? "true" : "false") + "), peak ratio " + fmt("%.10g", c.peak_ratio) +
              " (golden " + fmt("%.10g", kGoldenPeakRatio) + "), steady ratio " + fmt("%.4g", c.steady_ratio)};
}

Outcome extended_observer()
{
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario sc = resolve_scenario("example2");
  SimConfig cfg = sc.sim;
  cfg.record_stride = 1;
  const Trajectory tr = simulate(*sc.system, sc.observers[0].spec, sc.x0, sc.xhat0[0], cfg);
  double worst = 0.0;
  for (std::size_t s = 0; s < tr.size(); ++s) {
    const double t = tr.times[s];
    if (t >= 2.0 && t <= 10.0) worst = std::max(worst, std::abs((*tr.dhat)[s] - 5.0 * std::sin(2.0 * t)));
  }
  const double secs = seconds_since(t0);
  return {worst <= 0.25 && secs < 60.0,
          "max |dhat - d| on [2, 10] = " + fmt("%.3g", worst) + " (limit 0.25), " + fmt("%.2f", secs) + " s"};
}

Outcome proof_bounds(const RunResult& ex1)
{
  if (ex1.bounds.empty() || !ex1.bounds[0] || !ex1.certificates[0]) return {false, "no bound report"};
  const BoundReport& b = *ex1.bounds[0];
  const double T = ex1.certificates[0]->ts.T;
  const bool entered = b.t2_star && *b.t2_star < T;
  return {b.pass && entered, std::string(b.pass ? "bounds hold" : "bounds violated") + " on " +
                                 std::to_string(b.samples_checked) + " samples up to t1* = " +
                                 fmt("%.6g", ex1.certificates[0]->t1_star) + ", t2* = " +
                                 (b.t2_star ? fmt("%.6g", *b.t2_star) : std::string("none"))};
}

Outcome integrator_order()
{
  auto error_at = [](double h) {
    auto f = [](double t, std::span<const double> s, std::span<double> out) { out[0] = -s[0] + std::sin(t); };
    StateVec s{0.0};
    Rk4 rk(1);
    const int steps = static_cast<int>(std::lround(1.0 / h));
    for (int i = 0; i < steps; ++i) rk.step(f, std::span<double>(s), i * h, h);
    return std::abs(s[0] - (0.5 * std::exp(-1.0) + 0.5 * (std::sin(1.0) - std::cos(1.0))));
  };
  bool ok = true;
  std::string detail = "factors";
  double prev = error_at(0.1);
  for (double h : {0.05, 0.025, 0.0125}) {
    const double e = error_at(h);
    const double factor = prev / e;
    ok = ok && factor >= 12.0 && factor <= 20.0;
    detail += " " + fmt("%.3f", factor);
    prev = e;
  }
  return {ok, detail};
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism()
{
  const fs::path base = fs::temp_directory_path() / "ptobs_acceptance_determinism";
  fs::remove_all(base);
  for (const char* run : {"a", "b"}) {
    const std::string cmd = std::string("\"") + PTOBS_CLI_PATH + "\" run example1.json --seed 7 --out \"" +
                            (base / run).string() + "\" > /dev/null";
    if (std::system(cmd.c_str()) != 0) return {false, "CLI run failed"};
  }
  int compared = 0;
  for (const char* f : {"pt.csv", "hg.csv", "report.txt"}) {
    const std::string a = slurp(base / "a" / f);
    if (a.empty() || a != slurp(base / "b" / f)) return {false, std::string(f) + " differs"};
    ++compared;
  }
  fs::remove_all(base);
  return {true, std::to_string(compared) + " files byte-identical"};
}

Outcome error_dynamics()
{
  const TriangularSystem sys(2, {"-sin(x1)", "-x1 - 0.02*x2^3 + u"}, "0", "sin(0.35*t)", "5*sin(2*t)");
  const PtObserverSpec spec{{3.0, 2.0}, TimeScale(0.5, 0.1)};
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> v(-4.0, 4.0);
  std::uniform_real_distribution<double> tv(0.0, 0.499);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const StateVec x{v(rng), v(rng)}, xh{v(rng), v(rng)};
    const double t = tv(rng);
    const JointState d = joint_rhs(sys, spec, {x, xh}, t);
    const double m = mu(spec.ts, t);
    const double e1 = x[0] - xh[0], e2 = x[1] - xh[1];
    const double want1 = e2 - std::sin(x[0]) + std::sin(xh[0]) - 3.0 * std::pow(m, 1.1) * e1;
    const double want2 = -x[0] - 0.02 * x[1] * x[1] * x[1] + std::sin(0.35 * t) + 5.0 * std::sin(2.0 * t) -
                         2.0 * std::pow(m, 2.2) * e1;
    const double got[] = {d.x[0] - d.xhat[0], d.x[1] - d.xhat[1]};
    const double want[] = {want1, want2};
    for (int k = 0; k < 2; ++k) {
      worst = std::max(worst, std::abs(got[k] - want[k]) / std::max(std::abs(want[k]), 1e-300));
    }
  }
  return {worst <= 1e-10, "max relative deviation " + fmt("%.3g", worst)};
}

}  // namespace

int main()
{
  const fs::path ex1_dir = fs::temp_directory_path() / "ptobs_acceptance_example1";
  fs::remove_all(ex1_dir);
  RunResult ex1;
  try {
    ex1 = run_scenario(resolve_scenario("example1"), {.out_dir = ex1_dir});
  } catch (const std::exception& e) {
    std::printf("example1 run failed: %s\n", e.what());
  }

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"gain certificates", gain_certificates},
      {"weighted inequality on random SPD matrices", lemma1_property},
      {"Lyapunov solver residual", lyapunov_property},
      {"prescribed-time convergence", prescribed_time_convergence},
      {"disturbance amplitude sweep", amplitude_sweep},
      {"prescribed-time vs high-gain", [&] { return pt_vs_hg(ex1); }},
      {"extended observer disturbance tracking", extended_observer},
      {"trajectory bound checks", [&] { return proof_bounds(ex1); }},
      {"integrator order", integrator_order},
      {"determinism", determinism},
      {"error-dynamics equivalence", error_dynamics},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("[%s] %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  fs::remove_all(ex1_dir);
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
