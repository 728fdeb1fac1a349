#ifndef PTOBS_OBSERVERS_HPP
#define PTOBS_OBSERVERS_HPP

#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "ptobs/system.hpp"
#include "ptobs/timescale.hpp"

namespace ptobs {

/// Prescribed-time observer: stage i injects L_i mu(t)^{i(1+m)} (y - xhat_1),
/// the last stage runs on the nominal model f0.
struct PtObserverSpec
{
  std::vector<double> gains;
  TimeScale ts;
};

/// `Standard` uses alpha_i / eps^i; `Linear` uses alpha_i / eps for every stage.
enum class HgGainPower { Standard, Linear };

struct HgObserverSpec
{
  std::vector<double> alpha;
  double epsilon;
  HgGainPower power = HgGainPower::Standard;
};

/// Prescribed-time observer on the plant augmented with a constant
/// disturbance state; the last estimate entry is dhat.
struct ExtendedPtObserverSpec
{
  std::vector<double> gains;
  TimeScale ts;
};

using ObserverSpec = std::variant<PtObserverSpec, HgObserverSpec, ExtendedPtObserverSpec>;

/// Number of estimate entries carried by the observer (n or n + 1).
int estimate_dim(const ObserverSpec& spec, int n);

/// Throws DimensionError when the gain vector does not fit the plant.
void check_spec(const ObserverSpec& spec, int n);

/// Output-injection gains K_i(t), one per estimate entry.
std::vector<double> injection_gains(const ObserverSpec& spec, double t);
void injection_gains_into(const ObserverSpec& spec, double t, std::span<double> out);

/// Time scale of prescribed-time variants, empty for high-gain.
std::optional<TimeScale> time_scale_of(const ObserverSpec& spec);

/// mu(t) for prescribed-time variants; 1 for the high-gain observer.
double gain_scale(const ObserverSpec& spec, double t);

/// In-place vector field of the estimate, `out` has estimate_dim entries.
void observer_rhs(const TriangularSystem& sys, const ObserverSpec& spec,
                  std::span<const double> xhat, double y, double t, std::span<double> out);

StateVec pt_observer_rhs(const TriangularSystem& sys, const PtObserverSpec& spec,
                         const StateVec& xhat, double y, double t);
StateVec hg_observer_rhs(const TriangularSystem& sys, const HgObserverSpec& spec,
                         const StateVec& xhat, double y, double t);
StateVec extended_pt_observer_rhs(const TriangularSystem& sys, const ExtendedPtObserverSpec& spec,
                                  const StateVec& xhat_aug, double y, double t);

/// Plant state and its estimate, integrated together.
struct JointState
{
  StateVec x;
  StateVec xhat;
};

/// Plant field stacked with the observer field; y is taken as x_1.
JointState joint_rhs(const TriangularSystem& sys, const ObserverSpec& spec, const JointState& s,
                     double t);

}  // namespace ptobs

#endif  // PTOBS_OBSERVERS_HPP
