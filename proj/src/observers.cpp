#include "ptobs/observers.hpp"

#include <array>
#include <cmath>
#include <type_traits>
#include <string>

#include "ptobs/error.hpp"

namespace ptobs {

namespace {

template <class... Ts>
struct Overloaded : Ts...
{
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::size_t idx(int i) { return static_cast<std::size_t>(i); }

void check_len(std::size_t got, int want, const char* what)
{
  if (static_cast<int>(got) != want) {
    throw DimensionError(std::string(what) + " has " + std::to_string(got) + " entries, expected " +
                         std::to_string(want));
  }
}

}  // namespace

int estimate_dim(const ObserverSpec& spec, int n)
{
  return std::holds_alternative<ExtendedPtObserverSpec>(spec) ? n + 1 : n;
}

void check_spec(const ObserverSpec& spec, int n)
{
  std::visit(Overloaded{
               [n](const PtObserverSpec& s) { check_len(s.gains.size(), n, "gain vector L"); },
               [n](const HgObserverSpec& s) {
                 check_len(s.alpha.size(), n, "gain vector alpha");
                 if (!(s.epsilon > 0.0)) throw Error("epsilon must be positive");
               },
               [n](const ExtendedPtObserverSpec& s) {
                 check_len(s.gains.size(), n + 1, "extended gain vector L");
               },
             },
             spec);
}

void injection_gains_into(const ObserverSpec& spec, double t, std::span<double> out)
{
  std::visit(
    Overloaded{
      [out](const HgObserverSpec& s) {
        for (std::size_t i = 0; i < s.alpha.size(); ++i) {
          const double p = s.power == HgGainPower::Standard ? static_cast<double>(i + 1) : 1.0;
          out[i] = s.alpha[i] / std::pow(s.epsilon, p);
        }
      },
      [out, t](const auto& s) {
        const double mu_t = mu(s.ts, t);
        for (std::size_t i = 0; i < s.gains.size(); ++i) {
          out[i] = s.gains[i] * std::pow(mu_t, static_cast<double>(i + 1) * (1.0 + s.ts.m));
        }
      },
    },
    spec);
}

std::vector<double> injection_gains(const ObserverSpec& spec, double t)
{
  std::vector<double> k(std::visit([](const auto& s) {
    if constexpr (std::is_same_v<std::decay_t<decltype(s)>, HgObserverSpec>) {
      return s.alpha.size();
    } else {
      return s.gains.size();
    }
  }, spec));
  injection_gains_into(spec, t, k);
  return k;
}

std::optional<TimeScale> time_scale_of(const ObserverSpec& spec)
{
  return std::visit(Overloaded{
                      [](const HgObserverSpec&) -> std::optional<TimeScale> { return std::nullopt; },
                      [](const auto& s) -> std::optional<TimeScale> { return s.ts; },
                    },
                    spec);
}

double gain_scale(const ObserverSpec& spec, double t)
{
  const auto ts = time_scale_of(spec);
  return ts ? mu(*ts, t) : 1.0;
}

void observer_rhs(const TriangularSystem& sys, const ObserverSpec& spec,
                  std::span<const double> xhat, double y, double t, std::span<double> out)
{
  const int n = sys.dim();
  const int k = estimate_dim(spec, n);
  std::array<double, kMaxStateDim + 1> gain{};
  injection_gains_into(spec, t, gain);
  const double u = sys.input(t);
  const double innovation = y - xhat[0];

  for (int i = 1; i < n; ++i) {
    out[idx(i - 1)] = xhat[idx(i)] + sys.f(i, xhat, u) + gain[idx(i - 1)] * innovation;
  }
  if (k == n) {
    out[idx(n - 1)] = sys.nominal(xhat, u) + gain[idx(n - 1)] * innovation;
  } else {
    out[idx(n - 1)] = sys.f(n, xhat, u) + xhat[idx(n)] + gain[idx(n - 1)] * innovation;
    out[idx(n)] = gain[idx(n)] * innovation;
  }
}

namespace {

StateVec observer_rhs_checked(const TriangularSystem& sys, const ObserverSpec& spec,
                              const StateVec& xhat, double y, double t)
{
  check_spec(spec, sys.dim());
  check_len(xhat.size(), estimate_dim(spec, sys.dim()), "estimate");
  StateVec out(xhat.size());
  observer_rhs(sys, spec, xhat, y, t, out);
  return out;
}

}  // namespace

StateVec pt_observer_rhs(const TriangularSystem& sys, const PtObserverSpec& spec,
                         const StateVec& xhat, double y, double t)
{
  return observer_rhs_checked(sys, spec, xhat, y, t);
}

StateVec hg_observer_rhs(const TriangularSystem& sys, const HgObserverSpec& spec,
                         const StateVec& xhat, double y, double t)
{
  return observer_rhs_checked(sys, spec, xhat, y, t);
}

StateVec extended_pt_observer_rhs(const TriangularSystem& sys, const ExtendedPtObserverSpec& spec,
                                  const StateVec& xhat_aug, double y, double t)
{
  return observer_rhs_checked(sys, spec, xhat_aug, y, t);
}

JointState joint_rhs(const TriangularSystem& sys, const ObserverSpec& spec, const JointState& s,
                     double t)
{
  check_len(s.x.size(), sys.dim(), "plant state");
  JointState ds;
  ds.x = system_rhs(sys, s.x, t);
  ds.xhat = observer_rhs_checked(sys, spec, s.xhat, s.x[0], t);
  return ds;
}

}  // namespace ptobs
