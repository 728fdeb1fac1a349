#include "ptobs/timescale.hpp"

#include <algorithm>
#include <cmath>

#include "ptobs/error.hpp"

namespace ptobs {

TimeScale::TimeScale(double T_, double m_, double cap) : T(T_), m(m_), mu_cap(cap)
{
  if (!(T > 0.0) || !std::isfinite(T)) throw Error("prescribed time T must be positive");
  if (!(m > 0.0) || !std::isfinite(m)) throw Error("exponent m must be positive");
  if (!(mu_cap >= 1.0)) throw Error("mu_cap must be >= 1");
}

double TimeScale::cap_time() const
{
  return T * (1.0 - 1.0 / mu_cap);
}

double mu(const TimeScale& ts, double t)
{
  if (t >= ts.T) return ts.mu_cap;
  return std::min(ts.T / (ts.T - t), ts.mu_cap);
}

bool cap_binds(const TimeScale& ts, double t)
{
  return t >= ts.T || ts.T / (ts.T - t) >= ts.mu_cap;
}

double mu_dot_over_mu(const TimeScale& ts, double t)
{
  if (cap_binds(ts, t)) return 0.0;
  return mu(ts, t) / ts.T;
}

std::vector<double> gamma_diag_at(double mu_value, double m, int n)
{
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) g[static_cast<std::size_t>(i - 1)] = std::pow(mu_value, -i * (1.0 + m));
  return g;
}

std::vector<double> gamma_diag(const TimeScale& ts, double t, int n)
{
  return gamma_diag_at(mu(ts, t), ts.m, n);
}

}  // namespace ptobs
