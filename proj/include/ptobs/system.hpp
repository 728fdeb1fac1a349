#ifndef PTOBS_SYSTEM_HPP
#define PTOBS_SYSTEM_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ptobs/expr.hpp"

namespace ptobs {

/// Plant state x or an estimate of it.
using StateVec = std::vector<double>;

/// Largest supported state dimension (observer dimension may be one more).
inline constexpr int kMaxStateDim = 16;

/// Plant in lower-triangular form
///
///   x'_i = x_{i+1} + f_i(x_1..x_i, u)     i < n
///   x'_n = f_n(x_1..x_n, u) + d(t)
///   y    = x_1
///
/// with a nominal model f0 of f_n used by the observers. The object is
/// immutable after construction and can be shared between threads.
class TriangularSystem
{
public:
  /// Throws ParseError for malformed expressions and Error for a
  /// triangularity or signal-variable violation.
  TriangularSystem(int n, const std::vector<std::string>& f, const std::string& f0,
                   const std::string& u_signal, const std::string& d_signal);

  int dim() const { return n_; }

  const Expr& f_expr(int i) const { return f_[static_cast<std::size_t>(i - 1)]; }
  const Expr& f0_expr() const { return f0_; }
  const Expr& u_expr() const { return u_; }
  const Expr& d_expr() const { return d_; }

  double input(double t) const;
  double disturbance(double t) const;

  /// f_i (1-based) at the first n entries of `x`.
  double f(int i, std::span<const double> x, double u) const;
  double nominal(std::span<const double> x, double u) const;

  /// Writes the plant vector field into `out` (length n).
  void rhs(std::span<const double> x, double t, std::span<double> out) const;

  /// Stable identifier of the plant definition (expression text).
  std::size_t fingerprint() const { return fingerprint_; }

private:
  double eval_state_fn(const Program& p, std::span<const double> x, double u) const;

  int n_;
  std::vector<Expr> f_;
  Expr f0_, u_, d_;
  std::vector<Program> f_code_;
  Program f0_code_, u_code_, d_code_;
  std::size_t fingerprint_ = 0;
};

/// Variable names x1..xn.
std::vector<std::string> state_names(int n);

/// Rejects any f_i that reads x_j with j > i.
void check_triangular(std::span<const Expr> f);

StateVec system_rhs(const TriangularSystem& sys, const StateVec& x, double t);

}  // namespace ptobs

#endif  // PTOBS_SYSTEM_HPP
