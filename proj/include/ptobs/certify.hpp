#ifndef PTOBS_CERTIFY_HPP
#define PTOBS_CERTIFY_HPP

#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ptobs/sim.hpp"
#include "ptobs/timescale.hpp"

namespace ptobs {

using Matrix = Eigen::MatrixXd;
using Complex = std::complex<double>;

/// Chain-of-integrators matrices of the error dynamics.
struct CanonicalMatrices
{
  Matrix A;  // superdiagonal ones
  Matrix B;  // last unit vector (n x 1)
  Matrix C;  // first unit vector (1 x n)
  Matrix D;  // diag(1, ..., n)
};

CanonicalMatrices canonical_matrices(int n);

/// A - L C: first column -L, ones on the superdiagonal.
Matrix companion(std::span<const double> L);

/// If M has the companion layout produced by `companion`, returns L.
std::optional<std::vector<double>> companion_gains(const Matrix& M);

/// Roots of s^n + c_1 s^{n-1} + ... + c_n (Aberth iteration plus Newton polish).
std::vector<Complex> polynomial_roots(std::span<const double> coeffs);

/// Eigenvalues sorted by (real, imag). Companion matrices go through the
/// characteristic polynomial, anything else through Hessenberg-QR.
std::vector<Complex> eigenvalues(const Matrix& M);

/// Every eigenvalue has real part below -1e-12.
bool is_hurwitz(std::span<const Complex> eigs);

struct SymmetricEigen
{
  std::vector<double> values;  // ascending
  Matrix vectors;              // columns match `values`
};

/// Cyclic Jacobi rotations on a symmetric matrix.
SymmetricEigen jacobi_eigen(const Matrix& S);

/// P with M^T P + P M = -Q for Hurwitz M and SPD Q, through the n^2 x n^2
/// Kronecker system. Throws Error when M is not Hurwitz or Q is not SPD.
Matrix solve_lyapunov(const Matrix& M, const Matrix& Q);

/// lambda_min(P D + D P). Throws Error when P is not symmetric positive definite.
/// The value is returned as computed; a non-positive result means the
/// weighted inequality fails for this P.
double lemma1_lambda(const Matrix& P);

struct ProofConstants
{
  double a = 0.0;
  double b = 0.0;
  double t1_star = 0.0;
};

ProofConstants proof_constants(const Matrix& P, double lambda1, double gamma_bar_f,
                               double sigma_bar, const TimeScale& ts);

/// Feedback coefficients placing the roots of s^n + L_1 s^{n-1} + ... + L_n.
/// Complex poles must come in conjugate pairs.
std::vector<double> gains_from_poles(std::span<const Complex> poles);

struct Certificate
{
  std::vector<double> L;
  TimeScale ts{1.0, 1.0};
  std::vector<Complex> eigvals;
  bool hurwitz = false;

  // Filled only for Hurwitz designs.
  Matrix P;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double lambda_min_P = 0.0;
  double lambda_max_P = 0.0;
  bool lemma1_holds = false;

  double gamma_bar_f = 0.0;
  double sigma_bar = 0.0;
  double a = 0.0;
  double b = 0.0;
  double t1_star = 0.0;

  int dim() const { return static_cast<int>(L.size()); }

  /// 2b / (lambda1 mu^{(n+1)(1+m)}).
  double ball_radius(double t) const;
};

/// Builds the full certificate for gains L. Q defaults to the identity.
Certificate certify(std::span<const double> L, const TimeScale& ts, double gamma_bar_f,
                    double sigma_bar, const std::optional<Matrix>& Q = std::nullopt);

struct BoundReport
{
  bool pass = true;
  std::size_t samples_checked = 0;
  std::optional<std::size_t> violation_index;
  double violation_time = 0.0;
  std::string violated_bound;  // "z" or "e"
  double V0 = 0.0;
  double min_margin_z = 0.0;
  double min_margin_e = 0.0;
  std::optional<double> t2_star;  // first sample inside the ball at or after t1_star
};

/// Checks the growth bounds on [0, t1_star] sample by sample and locates
/// the empirical ball-entry time. Extended trajectories use the augmented
/// error (x - xhat, d - dhat).
BoundReport check_trajectory_bounds(const Trajectory& traj, const Certificate& cert,
                                    const TimeScale& ts);

}  // namespace ptobs

#endif  // PTOBS_CERTIFY_HPP
