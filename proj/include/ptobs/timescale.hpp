#ifndef PTOBS_TIMESCALE_HPP
#define PTOBS_TIMESCALE_HPP

#include <vector>

namespace ptobs {

inline constexpr double kDefaultMuCap = 1e10;

/// Blow-up function mu(t) = T / (T - t), saturated at `mu_cap`.
struct TimeScale
{
  double T;
  double m;
  double mu_cap = kDefaultMuCap;

  /// Throws Error unless T > 0, m > 0 and mu_cap >= 1.
  TimeScale(double T, double m, double mu_cap = kDefaultMuCap);

  /// First time at which the cap binds: T (1 - 1/mu_cap).
  double cap_time() const;
};

/// min(T/(T-t), mu_cap) for t < T, mu_cap afterwards. Always in [1, mu_cap].
double mu(const TimeScale& ts, double t);

/// True when the saturated value is in effect at t.
bool cap_binds(const TimeScale& ts, double t);

/// mu'/mu = mu/T below the cap, 0 once the cap binds.
double mu_dot_over_mu(const TimeScale& ts, double t);

/// Diagonal of the error scaling: entry i (1-based) is mu^{-i(1+m)}.
std::vector<double> gamma_diag(const TimeScale& ts, double t, int n);
std::vector<double> gamma_diag_at(double mu_value, double m, int n);

}  // namespace ptobs

#endif  // PTOBS_TIMESCALE_HPP
