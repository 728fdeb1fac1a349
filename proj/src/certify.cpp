#include "ptobs/certify.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <numbers>

#include "ptobs/error.hpp"

namespace ptobs {

namespace {

constexpr double kHurwitzMargin = 1e-12;
constexpr double kSymmetryTol = 1e-12;

void require_square(const Matrix& M, const char* what)
{
  if (M.rows() != M.cols() || M.rows() == 0) throw DimensionError(std::string(what) + " must be square");
}

bool is_symmetric(const Matrix& S)
{
  const double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
  return (S - S.transpose()).cwiseAbs().maxCoeff() <= kSymmetryTol * scale;
}

Complex eval_poly(std::span<const double> c, Complex z, Complex& deriv)
{
  Complex p = 1.0;
  deriv = 0.0;
  for (double ci : c) {
    deriv = deriv * z + p;
    p = p * z + ci;
  }
  return p;
}

void sort_eigs(std::vector<Complex>& v)
{
  std::sort(v.begin(), v.end(), [](const Complex& a, const Complex& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
}

}  // namespace

CanonicalMatrices canonical_matrices(int n)
{
  if (n < 1) throw DimensionError("dimension must be positive");
  CanonicalMatrices c;
  c.A = Matrix::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) c.A(i, i + 1) = 1.0;
  c.B = Matrix::Zero(n, 1);
  c.B(n - 1, 0) = 1.0;
  c.C = Matrix::Zero(1, n);
  c.C(0, 0) = 1.0;
  c.D = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) c.D(i, i) = i + 1.0;
  return c;
}

Matrix companion(std::span<const double> L)
{
  const auto n = static_cast<Eigen::Index>(L.size());
  if (n == 0) throw DimensionError("gain vector is empty");
  Matrix M = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    M(i, 0) = -L[static_cast<std::size_t>(i)];
    if (i + 1 < n) M(i, i + 1) = 1.0;
  }
  return M;
}

std::optional<std::vector<double>> companion_gains(const Matrix& M)
{
  if (M.rows() != M.cols()) return std::nullopt;
  const Eigen::Index n = M.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 1; j < n; ++j) {
      const double want = (j == i + 1) ? 1.0 : 0.0;
      if (M(i, j) != want) return std::nullopt;
    }
  }
  std::vector<double> L(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) L[static_cast<std::size_t>(i)] = -M(i, 0);
  return L;
}

std::vector<Complex> polynomial_roots(std::span<const double> c)
{
  const std::size_t n = c.size();
  if (n == 0) return {};
  if (n == 1) return {Complex(-c[0], 0.0)};

  double bound = 0.0;
  for (double ci : c) bound = std::max(bound, std::fabs(ci));
  const double radius = 1.0 + bound;

  // Staggered start on a circle, offset so no guess sits on the real axis.
  std::vector<Complex> z(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double angle = 2.0 * std::numbers::pi * (static_cast<double>(i) + 0.25) / static_cast<double>(n) + 0.4;
    z[i] = std::polar(0.5 * radius, angle);
  }

  // A root is final once |p(z)| is within rounding of the evaluation itself.
  auto rounding_level = [&](double r) {
    double acc = 1.0;
    for (double ci : c) acc = acc * r + std::fabs(ci);
    return 4.0 * static_cast<double>(n) * DBL_EPSILON * acc;
  };

  constexpr int kMaxIter = 500;
  std::vector<char> done(n, 0);
  bool converged = false;
  for (int iter = 0; iter < kMaxIter && !converged; ++iter) {
    converged = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (done[i]) continue;
      Complex dp;
      const Complex p = eval_poly(c, z[i], dp);
      if (std::abs(p) <= rounding_level(std::abs(z[i]))) {
        done[i] = 1;
        continue;
      }
      const Complex ratio = p / dp;
      Complex repulsion = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) repulsion += 1.0 / (z[i] - z[j]);
      }
      const Complex w = ratio / (1.0 - ratio * repulsion);
      z[i] -= w;
      if (std::abs(w) <= 1e-15 * std::max(1.0, std::abs(z[i]))) {
        done[i] = 1;
      } else {
        converged = false;
      }
    }
  }
  if (!converged) throw Error("polynomial root iteration did not converge");

  for (auto& r : z) {
    for (int k = 0; k < 3; ++k) {
      Complex dp;
      const Complex p = eval_poly(c, r, dp);
      if (dp == 0.0) break;
      r -= p / dp;
    }
    if (std::fabs(r.imag()) < 1e-12 * (1.0 + std::abs(r))) r.imag(0.0);
  }
  sort_eigs(z);
  return z;
}

std::vector<Complex> eigenvalues(const Matrix& M)
{
  require_square(M, "matrix");
  std::vector<Complex> out;
  if (auto L = companion_gains(M)) {
    out = polynomial_roots(*L);
  } else {
    Eigen::EigenSolver<Matrix> solver(M, false);
    if (solver.info() != Eigen::Success) throw Error("eigenvalue iteration did not converge");
    const auto ev = solver.eigenvalues();
    out.assign(ev.data(), ev.data() + ev.size());
    sort_eigs(out);
  }
  return out;
}

bool is_hurwitz(std::span<const Complex> eigs)
{
  return std::all_of(eigs.begin(), eigs.end(), [](const Complex& e) { return e.real() < -kHurwitzMargin; });
}

SymmetricEigen jacobi_eigen(const Matrix& S_in)
{
  require_square(S_in, "matrix");
  if (!is_symmetric(S_in)) throw Error("matrix is not symmetric");

  const Eigen::Index n = S_in.rows();
  Matrix S = 0.5 * (S_in + S_in.transpose());
  Matrix V = Matrix::Identity(n, n);
  const double scale = std::max(S.norm(), std::numeric_limits<double>::min());

  auto off_norm = [&] {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) acc += 2.0 * S(i, j) * S(i, j);
    }
    return std::sqrt(acc);
  };

  constexpr int kMaxSweeps = 100;
  int sweep = 0;
  for (; sweep < kMaxSweeps && off_norm() > 1e-15 * scale; ++sweep) {
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (S(p, q) == 0.0) continue;
        const double theta = (S(q, q) - S(p, p)) / (2.0 * S(p, q));
        const double t = std::copysign(1.0, theta) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double skp = S(k, p);
          const double skq = S(k, q);
          S(k, p) = c * skp - s * skq;
          S(k, q) = s * skp + c * skq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double spk = S(p, k);
          const double sqk = S(q, k);
          S(p, k) = c * spk - s * sqk;
          S(q, k) = s * spk + c * sqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = V(k, p);
          const double vkq = V(k, q);
          V(k, p) = c * vkp - s * vkq;
          V(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (sweep == kMaxSweeps) throw Error("Jacobi iteration did not converge");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return S(a, a) < S(b, b); });

  SymmetricEigen out;
  out.vectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index src = order[static_cast<std::size_t>(i)];
    out.values.push_back(S(src, src));
    out.vectors.col(i) = V.col(src);
  }
  return out;
}

Matrix solve_lyapunov(const Matrix& M, const Matrix& Q)
{
  require_square(M, "M");
  require_square(Q, "Q");
  if (M.rows() != Q.rows()) throw DimensionError("M and Q differ in size");
  if (jacobi_eigen(Q).values.front() <= 0.0) throw Error("Q is not positive definite");
  const auto eigs = eigenvalues(M);
  if (!is_hurwitz(eigs)) throw Error("Lyapunov equation needs a Hurwitz matrix");

  // Column-major vec: vec(M^T P + P M) = (I (x) M^T + M^T (x) I) vec(P).
  const Eigen::Index n = M.rows();
  const Matrix I = Matrix::Identity(n, n);
  const Matrix Mt = M.transpose();
  Matrix K(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      K.block(i * n, j * n, n, n) = I(i, j) * Mt + Mt(i, j) * I;
    }
  }
  const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(Q.data(), n * n);

  const Eigen::FullPivLU<Matrix> lu(K);
  if (!lu.isInvertible()) throw Error("Lyapunov system is singular");
  Eigen::VectorXd p = lu.solve(rhs);
  p += lu.solve(rhs - K * p);  // one step of iterative refinement

  Matrix P = Eigen::Map<const Matrix>(p.data(), n, n);
  return 0.5 * (P + P.transpose());
}

double lemma1_lambda(const Matrix& P)
{
  require_square(P, "P");
  const SymmetricEigen eig = jacobi_eigen(P);
  if (eig.values.front() <= 0.0) throw Error("P is not positive definite");
  const Matrix D = canonical_matrices(static_cast<int>(P.rows())).D;
  return jacobi_eigen(P * D + D * P).values.front();
}

ProofConstants proof_constants(const Matrix& P, double lambda1, double gamma_bar_f,
                               double sigma_bar, const TimeScale& ts)
{
  if (!(lambda1 > 0.0)) throw Error("lambda1 must be positive");
  if (!(gamma_bar_f >= 0.0) || !(sigma_bar >= 0.0)) throw Error("gamma_bar_f and sigma_bar must be >= 0");
  const double lmax = jacobi_eigen(P).values.back();
  ProofConstants c;
  c.a = 2.0 * gamma_bar_f * lmax;
  c.b = 2.0 * sigma_bar * lmax;
  if (c.a > 0.0 && lambda1 / 4.0 < c.a) {
    c.t1_star = ts.T * (1.0 - std::pow(lambda1 / (4.0 * c.a), 1.0 / (1.0 + ts.m)));
  }
  return c;
}

std::vector<double> gains_from_poles(std::span<const Complex> poles)
{
  if (poles.empty()) throw DimensionError("no poles given");
  std::vector<Complex> coeff{1.0};
  for (const Complex& p : poles) {
    std::vector<Complex> next(coeff.size() + 1, 0.0);
    for (std::size_t i = 0; i < coeff.size(); ++i) {
      next[i] += coeff[i];
      next[i + 1] -= p * coeff[i];
    }
    coeff = std::move(next);
  }
  std::vector<double> L;
  for (std::size_t i = 1; i < coeff.size(); ++i) {
    if (std::fabs(coeff[i].imag()) > 1e-9 * std::max(1.0, std::abs(coeff[i]))) {
      throw Error("complex poles must come in conjugate pairs");
    }
    L.push_back(coeff[i].real());
  }
  return L;
}

double Certificate::ball_radius(double t) const
{
  return 2.0 * b / (lambda1 * std::pow(mu(ts, t), (dim() + 1.0) * (1.0 + ts.m)));
}

Certificate certify(std::span<const double> L, const TimeScale& ts, double gamma_bar_f,
                    double sigma_bar, const std::optional<Matrix>& Q)
{
  Certificate cert;
  cert.L.assign(L.begin(), L.end());
  cert.ts = ts;
  cert.gamma_bar_f = gamma_bar_f;
  cert.sigma_bar = sigma_bar;
  const Matrix M = companion(L);
  cert.eigvals = eigenvalues(M);
  cert.hurwitz = is_hurwitz(cert.eigvals);
  if (!cert.hurwitz) return cert;

  const auto n = static_cast<Eigen::Index>(L.size());
  const Matrix rhs = Q ? *Q : Matrix::Identity(n, n);
  cert.P = solve_lyapunov(M, rhs);
  const SymmetricEigen pe = jacobi_eigen(cert.P);
  cert.lambda_min_P = pe.values.front();
  cert.lambda_max_P = pe.values.back();
  const Matrix lhs = M.transpose() * cert.P + cert.P * M;
  cert.lambda1 = jacobi_eigen(-0.5 * (lhs + lhs.transpose())).values.front();
  cert.lambda2 = lemma1_lambda(cert.P);
  cert.lemma1_holds = cert.lambda2 > 0.0;

  const ProofConstants pc = proof_constants(cert.P, cert.lambda1, gamma_bar_f, sigma_bar, ts);
  cert.a = pc.a;
  cert.b = pc.b;
  cert.t1_star = pc.t1_star;
  return cert;
}

BoundReport check_trajectory_bounds(const Trajectory& traj, const Certificate& cert,
                                    const TimeScale& ts)
{
  if (!cert.hurwitz) throw Error("certificate is not valid (A - LC is not Hurwitz)");
  const int k = cert.dim();
  if (traj.k != k) {
    throw DimensionError("trajectory estimate has " + std::to_string(traj.k) +
                         " entries, certificate has " + std::to_string(k));
  }
  if (ts.T != cert.ts.T || ts.m != cert.ts.m) throw Error("trajectory and certificate use different T or m");
  if (traj.size() == 0 || traj.times.front() > cert.t1_star) {
    throw Error("trajectory has no samples in [0, t1_star]");
  }
  const bool augmented = k == traj.n + 1;
  if (augmented && !(traj.dhat && traj.d)) throw Error("extended trajectory lacks disturbance samples");

  auto error_at = [&](std::size_t s) {
    Eigen::VectorXd e(k);
    for (int i = 0; i < traj.n; ++i) e(i) = traj.x[s][static_cast<std::size_t>(i)] - traj.xhat[s][static_cast<std::size_t>(i)];
    if (augmented) e(traj.n) = (*traj.d)[s] - (*traj.dhat)[s];
    return e;
  };
  auto scaled = [&](const Eigen::VectorXd& e, double t) {
    const std::vector<double> g = gamma_diag(ts, t, k);
    Eigen::VectorXd z(k);
    for (int i = 0; i < k; ++i) z(i) = g[static_cast<std::size_t>(i)] * e(i);
    return z;
  };

  BoundReport rep;
  const Eigen::VectorXd z0 = scaled(error_at(0), traj.times.front());
  rep.V0 = z0.dot(cert.P * z0);
  const double c0 = std::sqrt(rep.V0 / cert.lambda_min_P);
  rep.min_margin_z = std::numeric_limits<double>::infinity();
  rep.min_margin_e = std::numeric_limits<double>::infinity();

  for (std::size_t s = 0; s < traj.size(); ++s) {
    const double t = traj.times[s];
    const Eigen::VectorXd e = error_at(s);
    const Eigen::VectorXd z = scaled(e, t);
    if (t <= cert.t1_star) {
      ++rep.samples_checked;
      const double zb = c0 * std::exp(0.5 * cert.a * t);
      const double eb = zb * std::pow(mu(ts, t), k * (1.0 + ts.m));
      const double zn = z.norm();
      const double en = e.norm();
      rep.min_margin_z = std::min(rep.min_margin_z, zb - zn);
      rep.min_margin_e = std::min(rep.min_margin_e, eb - en);
      if (rep.pass && (zn > zb * (1.0 + 1e-12) || en > eb * (1.0 + 1e-12))) {
        rep.pass = false;
        rep.violation_index = s;
        rep.violation_time = t;
        rep.violated_bound = zn > zb * (1.0 + 1e-12) ? "z" : "e";
      }
    }
    if (!rep.t2_star && t >= cert.t1_star && t < ts.T && z.norm() < cert.ball_radius(t)) {
      rep.t2_star = t;
    }
  }
  return rep;
}

}  // namespace ptobs
