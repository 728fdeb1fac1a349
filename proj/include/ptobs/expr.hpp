#ifndef PTOBS_EXPR_HPP
#define PTOBS_EXPR_HPP

#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ptobs {

// Small expression language used for the plant nonlinearities and the
// input/disturbance signals.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?          (right associative)
//   primary := number | name | name '(' expr ')' | '(' expr ')'

enum class Op { Number, Variable, Neg, Add, Sub, Mul, Div, Pow, Call };

enum class Func { Sin, Cos, Tan, Exp, Log, Abs, Sqrt, Sign, Tanh };

struct Expr
{
  Op op = Op::Number;
  double value = 0.0;   // Number
  std::string name;     // Variable name, or function name for Call
  Func func = Func::Sin;
  std::vector<Expr> args;

  bool operator==(const Expr&) const = default;

  static Expr number(double v);
  static Expr variable(std::string name);
  static Expr unary(Op op, Expr operand);
  static Expr binary(Op op, Expr lhs, Expr rhs);
  static Expr call(Func f, Expr arg);
};

using VarSet = std::set<std::string, std::less<>>;

/// Throws ParseError with the byte offset of the offending token.
Expr parse_expr(std::string_view source, const VarSet& allowed_vars);

/// Minimal-parenthesis rendering; parse_expr(to_string(e)) == e for parsed trees.
std::string to_string(const Expr& e);

std::string_view function_name(Func f);

/// Names of all variables referenced by `e`.
VarSet variables_of(const Expr& e);

/// Real power with exact repeated multiplication for integral exponents.
/// Throws DomainError (subexpression `where`) outside the real domain.
double real_pow(double base, double exponent, std::string_view where = "^");

/// Applies a built-in function, throwing DomainError outside its domain.
double apply_function(Func f, double arg, std::string_view where);

/// An expression compiled to a flat postfix program over a fixed slot
/// layout. Immutable after compilation; `eval` touches no shared state.
class Program
{
public:
  Program() = default;

  /// `layout[i]` names the variable read from slot i at evaluation time.
  Program(const Expr& e, std::span<const std::string> layout);

  double eval(std::span<const double> slots) const;

  std::size_t size() const { return code_.size(); }

private:
  enum class Code : unsigned char {
    Const, Load, Neg, Add, Sub, Mul, Div, PowInt, Pow, Call
  };

  struct Instr
  {
    Code code;
    Func func = Func::Sin;
    int slot = 0;      // Load
    int exponent = 0;  // PowInt
    double value = 0;  // Const
    int text = -1;     // index into text_ for diagnostics
  };

  void emit(const Expr& e, std::span<const std::string> layout, int& depth);

  std::vector<Instr> code_;
  std::vector<std::string> text_;
  int max_depth_ = 0;
};

/// Evaluates via a compiled program. Every variable in `e` must be bound.
double eval_expr(const Expr& e, const std::map<std::string, double, std::less<>>& env);

}  // namespace ptobs

#endif  // PTOBS_EXPR_HPP
