#include "ptobs/sim.hpp"

#include <algorithm>
#include <cfloat>
#include <random>
#include <string>
#include <variant>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

namespace ptobs {

namespace {

// RK4 is used while h * |M_z|_inf stays below this; beyond it the observer
// error is advanced with the exponential step.
constexpr double kStiffLimit = 1.0;

struct Propagator
{
  Eigen::MatrixXd E;    // e^{hM}
  Eigen::MatrixXd Phi;  // h phi_1(hM) = int_0^h e^{sM} ds
};

Propagator make_propagator(const Eigen::MatrixXd& M, double h)
{
  const Eigen::Index k = M.rows();
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(2 * k, 2 * k);
  aug.topLeftCorner(k, k) = h * M;
  aug.topRightCorner(k, k) = h * Eigen::MatrixXd::Identity(k, k);
  const Eigen::MatrixXd ex = aug.exp();
  return {ex.topLeftCorner(k, k), ex.topRightCorner(k, k)};
}

// Scaled error coordinates z_i = e_i / s_i in which the injection part of
// the error dynamics reads z' = M_z z.
struct ScaledInjection
{
  Eigen::MatrixXd Mz;
  Eigen::VectorXd scale;
  double g = 1.0;
};

struct ObserverSlot
{
  const ObserverSpec* spec;
  int k;
  std::size_t offset;
  bool extended;
  std::vector<double> base;  // gains in scaled coordinates (L or alpha)
  bool uniform_scaling;      // false only for the linear-power high-gain form
  double cached_g = -1.0;
  double cached_h = -1.0;
  Propagator cached;
};

double scale_factor(const ObserverSlot& slot, double tau)
{
  return std::visit(
    [tau](const auto& s) -> double {
      if constexpr (std::is_same_v<std::decay_t<decltype(s)>, HgObserverSpec>) {
        return 1.0 / s.epsilon;
      } else {
        return std::pow(mu(s.ts, tau), 1.0 + s.ts.m);
      }
    },
    *slot.spec);
}

ScaledInjection scaled_injection(const ObserverSlot& slot, double tau)
{
  const int k = slot.k;
  ScaledInjection out;
  out.Mz = Eigen::MatrixXd::Zero(k, k);
  out.scale = Eigen::VectorXd::Ones(k);
  if (slot.uniform_scaling) {
    const double g = scale_factor(slot, tau);
    out.g = g;
    double s = 1.0;
    for (int i = 0; i < k; ++i) {
      s *= g;
      out.scale(i) = s;
      out.Mz(i, 0) -= g * slot.base[static_cast<std::size_t>(i)];
      if (i + 1 < k) out.Mz(i, i + 1) += g;
    }
  } else {
    std::vector<double> K(static_cast<std::size_t>(k));
    injection_gains_into(*slot.spec, tau, K);
    for (int i = 0; i < k; ++i) {
      out.Mz(i, 0) -= K[static_cast<std::size_t>(i)];
      if (i + 1 < k) out.Mz(i, i + 1) += 1.0;
    }
  }
  return out;
}

double stiffness(const ObserverSlot& slot, double tau, double h)
{
  if (!slot.uniform_scaling) {
    std::vector<double> K(static_cast<std::size_t>(slot.k));
    injection_gains_into(*slot.spec, tau, K);
    double norm = 0.0;
    for (int i = 0; i < slot.k; ++i) {
      norm = std::max(norm, std::fabs(K[static_cast<std::size_t>(i)]) + (i + 1 < slot.k ? 1.0 : 0.0));
    }
    return h * norm;
  }
  double norm = 0.0;
  for (int i = 0; i < slot.k; ++i) {
    norm = std::max(norm, std::fabs(slot.base[static_cast<std::size_t>(i)]) + (i + 1 < slot.k ? 1.0 : 0.0));
  }
  return h * scale_factor(slot, tau) * norm;
}

// Advances one observer over [t, t + h] in error coordinates with the
// injection gains frozen at t + h. `x_old`/`x_new` are the plant states at
// both ends, `xhat` is updated in place.
void exponential_observer_step(const TriangularSystem& sys, ObserverSlot& slot,
                               std::span<const double> x_old, std::span<const double> x_new,
                               std::span<double> xhat, double t, double h, double noise)
{
  const int n = sys.dim();
  const int k = slot.k;
  const double tau = t + h;
  const ScaledInjection inj = scaled_injection(slot, tau);

  if (inj.g != slot.cached_g || h != slot.cached_h || slot.cached.E.rows() == 0) {
    slot.cached = make_propagator(inj.Mz, h);
    slot.cached_g = inj.g;
    slot.cached_h = h;
  }

  const double u = sys.input(t);
  const double d_old = sys.disturbance(t);
  Eigen::VectorXd e(k), forcing(k);
  for (int i = 0; i < n; ++i) e(i) = x_old[static_cast<std::size_t>(i)] - xhat[static_cast<std::size_t>(i)];
  for (int i = 1; i < n; ++i) forcing(i - 1) = sys.f(i, x_old, u) - sys.f(i, xhat, u);
  if (slot.extended) {
    const double d_new = sys.disturbance(tau);
    e(n) = d_old - xhat[static_cast<std::size_t>(n)];
    forcing(n - 1) = sys.f(n, x_old, u) - sys.f(n, xhat, u);
    forcing(n) = (d_new - d_old) / h;
  } else {
    forcing(n - 1) = sys.f(n, x_old, u) + d_old - sys.nominal(xhat, u);
  }
  if (noise != 0.0) {
    std::vector<double> K(static_cast<std::size_t>(k));
    injection_gains_into(*slot.spec, tau, K);
    for (int i = 0; i < k; ++i) forcing(i) -= K[static_cast<std::size_t>(i)] * noise;
  }

  const Eigen::VectorXd z = e.cwiseQuotient(inj.scale);
  const Eigen::VectorXd fz = forcing.cwiseQuotient(inj.scale);
  const Eigen::VectorXd z_new = slot.cached.E * z + slot.cached.Phi * fz;
  const Eigen::VectorXd e_new = z_new.cwiseProduct(inj.scale);

  for (int i = 0; i < n; ++i) {
    xhat[static_cast<std::size_t>(i)] = x_new[static_cast<std::size_t>(i)] - e_new(i);
  }
  if (slot.extended) xhat[static_cast<std::size_t>(n)] = sys.disturbance(tau) - e_new(n);
}

}  // namespace

void SimConfig::validate() const
{
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw Error("t_end must be positive");
  if (!(dt_base > 0.0)) throw Error("dt_base must be positive");
  if (!(dt_min > 0.0) || dt_min > dt_base) throw Error("dt_min must satisfy 0 < dt_min <= dt_base");
  if (dt_min < 1e3 * DBL_EPSILON * t_end) {
    throw Error("dt_min is below the time resolution of doubles at t_end");
  }
  if (record_stride < 1) throw Error("record_stride must be >= 1");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) throw Error("noise_std must be >= 0");
}

StepSchedule::StepSchedule(const SimConfig& cfg, std::vector<double> singular_times)
  : cfg_(cfg), singular_(std::move(singular_times))
{
  cfg_.validate();
  for (double T : singular_) {
    if (cfg_.dt_min < 1e3 * DBL_EPSILON * T) {
      throw Error("dt_min is below the time resolution of doubles at T");
    }
    if (T - cfg_.dt_min > 0.0 && T - cfg_.dt_min < cfg_.t_end) landmarks_.push_back(T - cfg_.dt_min);
    if (T < cfg_.t_end) landmarks_.push_back(T);
  }
  landmarks_.push_back(cfg_.t_end);
  std::sort(landmarks_.begin(), landmarks_.end());
  landmarks_.erase(std::unique(landmarks_.begin(), landmarks_.end()), landmarks_.end());
}

double StepSchedule::next_time(double t) const
{
  double h = cfg_.dt_base;
  if (cfg_.singularity_shrink) {
    for (double T : singular_) {
      if (t > T - 10.0 * cfg_.dt_base && t < T) {
        h = std::min(h, std::max(cfg_.dt_min, cfg_.dt_base * (T - t) / T));
      }
    }
  }
  const double next = t + h;
  for (double mark : landmarks_) {
    if (mark > t) {
      return next >= mark - 0.5 * cfg_.dt_min ? mark : next;
    }
  }
  return next;
}

std::vector<double> exponential_euler(std::span<const double> M_rowmajor, std::span<const double> z,
                                      std::span<const double> forcing, double h)
{
  const auto k = static_cast<Eigen::Index>(z.size());
  if (static_cast<Eigen::Index>(M_rowmajor.size()) != k * k || forcing.size() != z.size()) {
    throw DimensionError("exponential_euler: inconsistent sizes");
  }
  Eigen::MatrixXd M(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) M(i, j) = M_rowmajor[static_cast<std::size_t>(i * k + j)];
  }
  const Propagator p = make_propagator(M, h);
  const Eigen::VectorXd zv = Eigen::Map<const Eigen::VectorXd>(z.data(), k);
  const Eigen::VectorXd fv = Eigen::Map<const Eigen::VectorXd>(forcing.data(), k);
  const Eigen::VectorXd out = p.E * zv + p.Phi * fv;
  return {out.data(), out.data() + k};
}

std::vector<Trajectory> simulate_lockstep(const TriangularSystem& sys,
                                          std::span<const ObserverSpec> specs,
                                          const StateVec& x0, std::span<const StateVec> xhat0,
                                          const SimConfig& cfg)
{
  cfg.validate();
  const int n = sys.dim();
  if (static_cast<int>(x0.size()) != n) throw DimensionError("x0 does not match the plant dimension");
  if (xhat0.size() != specs.size()) throw DimensionError("one initial estimate per observer is required");

  std::vector<ObserverSlot> slots;
  std::vector<double> singular;
  std::size_t total = static_cast<std::size_t>(n);
  for (std::size_t j = 0; j < specs.size(); ++j) {
    check_spec(specs[j], n);
    const int k = estimate_dim(specs[j], n);
    if (static_cast<int>(xhat0[j].size()) != k) {
      throw DimensionError("initial estimate " + std::to_string(j) + " has " +
                           std::to_string(xhat0[j].size()) + " entries, expected " + std::to_string(k));
    }
    ObserverSlot slot{&specs[j], k, total, std::holds_alternative<ExtendedPtObserverSpec>(specs[j]),
                      {}, true, -1.0, -1.0, {}};
    std::visit(
      [&slot](const auto& s) {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, HgObserverSpec>) {
          slot.base = s.alpha;
          slot.uniform_scaling = s.power == HgGainPower::Standard;
        } else {
          slot.base = s.gains;
        }
      },
      specs[j]);
    if (auto ts = time_scale_of(specs[j])) singular.push_back(ts->T);
    slots.push_back(std::move(slot));
    total += static_cast<std::size_t>(k);
  }

  const StepSchedule schedule(cfg, singular);
  std::vector<double> state(total);
  std::copy(x0.begin(), x0.end(), state.begin());
  for (std::size_t j = 0; j < slots.size(); ++j) {
    std::copy(xhat0[j].begin(), xhat0[j].end(), state.begin() + static_cast<std::ptrdiff_t>(slots[j].offset));
  }

  std::vector<Trajectory> out(slots.size());
  for (std::size_t j = 0; j < slots.size(); ++j) {
    out[j].n = n;
    out[j].k = slots[j].k;
    if (slots[j].extended) {
      out[j].dhat.emplace();
      out[j].d.emplace();
    }
  }

  auto record = [&](double t) {
    const std::span<const double> x(state.data(), static_cast<std::size_t>(n));
    for (std::size_t j = 0; j < slots.size(); ++j) {
      Trajectory& tr = out[j];
      const auto* xh = state.data() + slots[j].offset;
      double sq = 0.0;
      for (int i = 0; i < n; ++i) sq += (x[static_cast<std::size_t>(i)] - xh[i]) * (x[static_cast<std::size_t>(i)] - xh[i]);
      tr.times.push_back(t);
      tr.x.emplace_back(x.begin(), x.end());
      tr.xhat.emplace_back(xh, xh + slots[j].k);
      tr.err_norm.push_back(std::sqrt(sq));
      tr.mu_val.push_back(gain_scale(*slots[j].spec, t));
      if (slots[j].extended) {
        tr.dhat->push_back(xh[n]);
        tr.d->push_back(sys.disturbance(t));
      }
    }
  };

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> noise_dist(0.0, cfg.noise_std > 0.0 ? cfg.noise_std : 1.0);
  std::vector<char> active(slots.size(), 1);
  double noise = 0.0;

  auto field = [&](double tt, std::span<const double> s, std::span<double> ds) {
    sys.rhs(s.first(static_cast<std::size_t>(n)), tt, ds.first(static_cast<std::size_t>(n)));
    const double y = s[0] + noise;
    for (std::size_t j = 0; j < slots.size(); ++j) {
      const auto k = static_cast<std::size_t>(slots[j].k);
      auto dst = ds.subspan(slots[j].offset, k);
      if (active[j]) {
        observer_rhs(sys, *slots[j].spec, s.subspan(slots[j].offset, k), y, tt, dst);
      } else {
        std::fill(dst.begin(), dst.end(), 0.0);
      }
    }
  };

  Rk4 rk4(total);
  std::vector<double> previous(total);
  const auto& marks = schedule.landmarks();
  double t = 0.0;
  long step = 0;
  record(t);
  while (t < cfg.t_end) {
    const double t_next = schedule.next_time(t);
    const double h = t_next - t;
    noise = cfg.noise_std > 0.0 ? noise_dist(rng) : 0.0;
    for (std::size_t j = 0; j < slots.size(); ++j) {
      active[j] = stiffness(slots[j], t_next, h) <= kStiffLimit ? 1 : 0;
    }

    previous = state;
    try {
      rk4.step(field, std::span<double>(state), t, h);
      for (std::size_t j = 0; j < slots.size(); ++j) {
        if (active[j]) continue;
        exponential_observer_step(sys, slots[j], std::span<const double>(previous).first(static_cast<std::size_t>(n)),
                                  std::span<const double>(state).first(static_cast<std::size_t>(n)),
                                  std::span<double>(state).subspan(slots[j].offset, static_cast<std::size_t>(slots[j].k)),
                                  t, h, noise);
      }
    } catch (const DomainError& e) {
      throw IntegrationError(std::string("integration failed: ") + e.what(), t, previous);
    }
    for (double v : state) {
      if (!std::isfinite(v)) throw IntegrationError("integration blow-up: non-finite state", t, previous);
    }

    t = t_next;
    ++step;
    const bool landmark = std::binary_search(marks.begin(), marks.end(), t);
    if (step % cfg.record_stride == 0 || landmark || t >= cfg.t_end) record(t);
  }
  return out;
}

Trajectory simulate(const TriangularSystem& sys, const ObserverSpec& spec, const StateVec& x0,
                    const StateVec& xhat0, const SimConfig& cfg)
{
  const std::vector<ObserverSpec> specs{spec};
  const std::vector<StateVec> init{xhat0};
  return std::move(simulate_lockstep(sys, specs, x0, init, cfg).front());
}

}  // namespace ptobs
