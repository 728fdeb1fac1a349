#include "ptobs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ptobs/error.hpp"

namespace ptobs {

namespace {

double ratio(double num, double den)
{
  if (num == den) return 1.0;
  if (den == 0.0) return std::numeric_limits<double>::infinity();
  return num / den;
}

}  // namespace

double err_norm_at(const Trajectory& traj, double t)
{
  const auto& ts = traj.times;
  if (ts.empty()) throw Error("empty trajectory");
  if (t < ts.front() || t > ts.back()) throw Error("probe time outside the trajectory");
  const auto it = std::lower_bound(ts.begin(), ts.end(), t);
  const auto hi = static_cast<std::size_t>(it - ts.begin());
  if (ts[hi] == t || hi == 0) return traj.err_norm[hi];
  const std::size_t lo = hi - 1;
  const double w = (t - ts[lo]) / (ts[hi] - ts[lo]);
  return (1.0 - w) * traj.err_norm[lo] + w * traj.err_norm[hi];
}

RunMetrics compute_metrics(const Trajectory& traj, const MetricWindows& windows,
                           std::size_t system_hash)
{
  if (traj.size() == 0) throw Error("empty trajectory");
  const double T = windows.reference_T;
  const double t_end = traj.times.back();
  if (T > t_end) throw Error("empty post-T window: reference T lies beyond the trajectory");

  RunMetrics m;
  m.system_hash = system_hash;
  const auto peak = std::max_element(traj.err_norm.begin(), traj.err_norm.end());
  m.peak_err = *peak;
  m.peak_time = traj.times[static_cast<std::size_t>(peak - traj.err_norm.begin())];

  const double delta = windows.delta.value_or(1e-3 * T);
  m.err_at_T_minus = err_norm_at(traj, T - delta);

  bool any = false;
  for (std::size_t s = 0; s < traj.size(); ++s) {
    if (traj.times[s] >= T) {
      m.post_T_max_err = std::max(m.post_T_max_err, traj.err_norm[s]);
      any = true;
    }
  }
  if (!any) throw Error("empty post-T window");
  m.settled = m.post_T_max_err <= windows.settle_tol;

  if (traj.dhat && traj.d) {
    const double start = windows.dhat_window_start.value_or(std::max(2.0 * T, 2.0));
    double worst = 0.0;
    bool seen = false;
    for (std::size_t s = 0; s < traj.size(); ++s) {
      if (traj.times[s] >= start) {
        worst = std::max(worst, std::fabs((*traj.dhat)[s] - (*traj.d)[s]));
        seen = true;
      }
    }
    if (!seen) throw Error("empty disturbance-tracking window");
    m.dhat_track_err = worst;
  }
  return m;
}

Comparison compare(const RunMetrics& pt, const RunMetrics& hg)
{
  if (pt.system_hash != hg.system_hash) throw Error("runs were made on different plants");
  Comparison c;
  c.peak_ratio = ratio(hg.peak_err, pt.peak_err);
  c.steady_ratio = ratio(hg.post_T_max_err, pt.post_T_max_err);
  c.pt_lower_peak = pt.peak_err < hg.peak_err;
  c.pt_lower_post_T = pt.post_T_max_err < hg.post_T_max_err;
  return c;
}

}  // namespace ptobs
