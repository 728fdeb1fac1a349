#ifndef PTOBS_SIM_HPP
#define PTOBS_SIM_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ptobs/error.hpp"
#include "ptobs/observers.hpp"
#include "ptobs/system.hpp"

namespace ptobs {

struct SimConfig
{
  double t_end = 1.0;
  double dt_base = 1e-4;
  double dt_min = 1e-10;
  bool singularity_shrink = true;
  int record_stride = 1;
  double noise_std = 0.0;
  std::uint64_t seed = 0;

  /// Throws Error on an inconsistent configuration.
  void validate() const;
};

/// Sampled run of one observer. All per-sample sequences have equal length.
struct Trajectory
{
  int n = 0;  // plant dimension
  int k = 0;  // estimate dimension
  std::vector<double> times;
  std::vector<StateVec> x;
  std::vector<StateVec> xhat;
  std::vector<double> err_norm;  // |x - xhat[0..n)|_2
  std::vector<double> mu_val;
  std::optional<std::vector<double>> dhat;  // extended observers only
  std::optional<std::vector<double>> d;     // true disturbance, alongside dhat

  std::size_t size() const { return times.size(); }
};

/// Reusable classical RK4 stepper. The vector field is called as
/// f(t, state, derivative_out).
class Rk4
{
public:
  explicit Rk4(std::size_t dim) : k1_(dim), k2_(dim), k3_(dim), k4_(dim), tmp_(dim) {}

  template <typename F>
  void step(F&& f, std::span<double> s, double t, double h)
  {
    const std::size_t n = s.size();
    f(t, std::span<const double>(s), std::span<double>(k1_));
    check(k1_, t, s);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = s[i] + 0.5 * h * k1_[i];
    f(t + 0.5 * h, std::span<const double>(tmp_), std::span<double>(k2_));
    check(k2_, t, s);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = s[i] + 0.5 * h * k2_[i];
    f(t + 0.5 * h, std::span<const double>(tmp_), std::span<double>(k3_));
    check(k3_, t, s);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = s[i] + h * k3_[i];
    f(t + h, std::span<const double>(tmp_), std::span<double>(k4_));
    check(k4_, t, s);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] += (h / 6.0) * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
    }
  }

private:
  static void check(const std::vector<double>& k, double t, std::span<const double> s)
  {
    for (double v : k) {
      if (!std::isfinite(v)) {
        throw IntegrationError("non-finite stage value", t, std::vector<double>(s.begin(), s.end()));
      }
    }
  }

  std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

/// One RK4 step of size h > 0 from (t, s).
template <typename F>
StateVec rk4_step(F&& f, const StateVec& s, double t, double h)
{
  StateVec out = s;
  Rk4(s.size()).step(std::forward<F>(f), std::span<double>(out), t, h);
  return out;
}

/// Step policy: dt_base, shrunk geometrically inside (T - 10 dt_base, T)
/// for every singular time T, and landing exactly on T - dt_min, T and t_end.
class StepSchedule
{
public:
  StepSchedule(const SimConfig& cfg, std::vector<double> singular_times);

  /// Next accepted time after t (strictly greater than t).
  double next_time(double t) const;

  /// Times that always get a recorded sample.
  const std::vector<double>& landmarks() const { return landmarks_; }

private:
  SimConfig cfg_;
  std::vector<double> singular_;
  std::vector<double> landmarks_;
};

/// Integrates one plant and several observers in lockstep: every observer
/// sees the same output samples. Throws IntegrationError on blow-up.
std::vector<Trajectory> simulate_lockstep(const TriangularSystem& sys,
                                          std::span<const ObserverSpec> specs,
                                          const StateVec& x0, std::span<const StateVec> xhat0,
                                          const SimConfig& cfg);

Trajectory simulate(const TriangularSystem& sys, const ObserverSpec& spec, const StateVec& x0,
                    const StateVec& xhat0, const SimConfig& cfg);

/// Observer error step for the saturated, stiff regime: exponential Euler
/// on the output-injection linear part, exposed for testing.
///
/// Solves z' = M z + forcing over [0, h] with forcing held constant:
/// returns e^{hM} z + h phi_1(hM) forcing.
std::vector<double> exponential_euler(std::span<const double> M_rowmajor, std::span<const double> z,
                                      std::span<const double> forcing, double h);

}  // namespace ptobs

#endif  // PTOBS_SIM_HPP
