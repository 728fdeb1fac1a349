#include "ptobs/system.hpp"

#include <array>
#include <charconv>
#include <functional>

#include "ptobs/error.hpp"

namespace ptobs {

namespace {

// f_i are parsed against any xk so that a reference beyond x_i is reported
// as a triangularity violation rather than an unknown name.
VarSet state_vars_for_parsing()
{
  VarSet vars{"u"};
  for (int k = 1; k <= 4 * kMaxStateDim; ++k) vars.insert("x" + std::to_string(k));
  return vars;
}

int state_index(std::string_view name)
{
  if (name.size() < 2 || name.front() != 'x') return 0;
  int k = 0;
  auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), k);
  if (ec != std::errc{} || ptr != name.data() + name.size()) return 0;
  return k;
}

Expr parse_field(const std::string& source, const VarSet& vars, const std::string& what)
{
  try {
    return parse_expr(source, vars);
  } catch (const ParseError& e) {
    throw ParseError(e.offset(), what + " `" + source + "`: " + e.what());
  }
}

}  // namespace

std::vector<std::string> state_names(int n)
{
  std::vector<std::string> names;
  for (int i = 1; i <= n; ++i) names.push_back("x" + std::to_string(i));
  return names;
}

void check_triangular(std::span<const Expr> f)
{
  for (std::size_t i = 0; i < f.size(); ++i) {
    for (const auto& name : variables_of(f[i])) {
      const int k = state_index(name);
      if (k > static_cast<int>(i) + 1) {
        throw Error("triangularity violated: f" + std::to_string(i + 1) + " references " + name);
      }
    }
  }
}

TriangularSystem::TriangularSystem(int n, const std::vector<std::string>& f,
                                   const std::string& f0, const std::string& u_signal,
                                   const std::string& d_signal)
  : n_(n)
{
  if (n < 1 || n > kMaxStateDim) {
    throw DimensionError("state dimension must be in 1.." + std::to_string(kMaxStateDim));
  }
  if (static_cast<int>(f.size()) != n) {
    throw DimensionError("expected " + std::to_string(n) + " nonlinearities, got " +
                         std::to_string(f.size()));
  }

  const VarSet wide = state_vars_for_parsing();
  for (std::size_t i = 0; i < f.size(); ++i) {
    f_.push_back(parse_field(f[i], wide, "f" + std::to_string(i + 1)));
  }
  check_triangular(f_);

  f0_ = parse_field(f0, wide, "f0");
  for (const auto& name : variables_of(f0_)) {
    if (state_index(name) > n) throw Error("f0 references " + name + " beyond x" + std::to_string(n));
  }

  const VarSet time_only{"t"};
  u_ = parse_field(u_signal, time_only, "u");
  d_ = parse_field(d_signal, time_only, "d");

  std::vector<std::string> layout = state_names(n);
  layout.push_back("u");
  for (const auto& e : f_) f_code_.emplace_back(e, layout);
  f0_code_ = Program(f0_, layout);
  const std::array<std::string, 1> tlayout{"t"};
  u_code_ = Program(u_, tlayout);
  d_code_ = Program(d_, tlayout);

  std::string text = std::to_string(n);
  for (const auto& e : f_) text += ';' + to_string(e);
  text += ';' + to_string(f0_) + ';' + to_string(u_) + ';' + to_string(d_);
  fingerprint_ = std::hash<std::string>{}(text);
}

double TriangularSystem::input(double t) const
{
  return u_code_.eval(std::span<const double>(&t, 1));
}

double TriangularSystem::disturbance(double t) const
{
  return d_code_.eval(std::span<const double>(&t, 1));
}

double TriangularSystem::eval_state_fn(const Program& p, std::span<const double> x, double u) const
{
  std::array<double, kMaxStateDim + 1> slots{};
  for (int i = 0; i < n_; ++i) slots[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)];
  slots[static_cast<std::size_t>(n_)] = u;
  return p.eval(std::span<const double>(slots.data(), static_cast<std::size_t>(n_) + 1));
}

double TriangularSystem::f(int i, std::span<const double> x, double u) const
{
  return eval_state_fn(f_code_[static_cast<std::size_t>(i - 1)], x, u);
}

double TriangularSystem::nominal(std::span<const double> x, double u) const
{
  return eval_state_fn(f0_code_, x, u);
}

void TriangularSystem::rhs(std::span<const double> x, double t, std::span<double> out) const
{
  const double u = input(t);
  for (int i = 1; i < n_; ++i) {
    out[static_cast<std::size_t>(i - 1)] = x[static_cast<std::size_t>(i)] + f(i, x, u);
  }
  out[static_cast<std::size_t>(n_ - 1)] = f(n_, x, u) + disturbance(t);
}

StateVec system_rhs(const TriangularSystem& sys, const StateVec& x, double t)
{
  if (static_cast<int>(x.size()) != sys.dim()) {
    throw DimensionError("state has " + std::to_string(x.size()) + " entries, system has n = " +
                         std::to_string(sys.dim()));
  }
  StateVec out(x.size());
  sys.rhs(x, t, out);
  return out;
}

}  // namespace ptobs
