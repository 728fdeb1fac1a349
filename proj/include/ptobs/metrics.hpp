#ifndef PTOBS_METRICS_HPP
#define PTOBS_METRICS_HPP

#include <cstddef>
#include <optional>

#include "ptobs/sim.hpp"

namespace ptobs {

struct MetricWindows
{
  /// Prescribed time used for the convergence probe. High-gain runs use the
  /// T of the prescribed-time observer they are compared against.
  double reference_T = 1.0;
  /// Probe offset before T; defaults to 1e-3 * reference_T.
  std::optional<double> delta;
  /// Start of the disturbance-tracking window; defaults to max(2T, 2).
  std::optional<double> dhat_window_start;
  /// A run is settled when its post-T error stays at or below this.
  double settle_tol = 1e-2;
};

struct RunMetrics
{
  double peak_err = 0.0;
  double peak_time = 0.0;
  double err_at_T_minus = 0.0;
  double post_T_max_err = 0.0;
  std::optional<double> dhat_track_err;
  bool settled = false;
  std::size_t system_hash = 0;
};

/// err_norm at time t, linear between the bracketing samples.
double err_norm_at(const Trajectory& traj, double t);

/// Throws Error for an empty trajectory or an empty evaluation window.
RunMetrics compute_metrics(const Trajectory& traj, const MetricWindows& windows,
                           std::size_t system_hash = 0);

struct Comparison
{
  double peak_ratio = 1.0;    // hg.peak_err / pt.peak_err
  double steady_ratio = 1.0;  // hg.post_T_max_err / pt.post_T_max_err
  bool pt_lower_peak = false;
  bool pt_lower_post_T = false;
};

/// Throws Error when the runs were made on different plants.
Comparison compare(const RunMetrics& pt, const RunMetrics& hg);

}  // namespace ptobs

#endif  // PTOBS_METRICS_HPP
