#include "ptobs/expr.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <utility>

#include "ptobs/error.hpp"

namespace ptobs {

namespace {

struct FuncEntry
{
  std::string_view name;
  Func func;
};

constexpr std::array<FuncEntry, 9> kFunctions{{
  {"sin", Func::Sin}, {"cos", Func::Cos}, {"tan", Func::Tan},
  {"exp", Func::Exp}, {"log", Func::Log}, {"abs", Func::Abs},
  {"sqrt", Func::Sqrt}, {"sign", Func::Sign}, {"tanh", Func::Tanh},
}};

const FuncEntry* find_function(std::string_view name)
{
  for (const auto& entry : kFunctions) {
    if (entry.name == name) return &entry;
  }
  return nullptr;
}

// Integral exponents up to this magnitude are applied by repeated multiplication.
constexpr int kMaxIntExponent = 64;

bool small_integer(double v, int& out)
{
  if (!std::isfinite(v) || v != std::floor(v) || std::fabs(v) > kMaxIntExponent) return false;
  out = static_cast<int>(v);
  return true;
}

class Parser
{
public:
  Parser(std::string_view src, const VarSet& vars) : src_(src), vars_(vars) {}

  Expr parse()
  {
    Expr e = expr();
    skip_ws();
    if (pos_ != src_.size()) fail("unexpected `" + std::string(1, src_[pos_]) + "`");
    return e;
  }

private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(pos_, msg); }

  void skip_ws()
  {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c)
  {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr expr()
  {
    Expr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = Expr::binary(Op::Add, std::move(lhs), term());
      } else if (accept('-')) {
        lhs = Expr::binary(Op::Sub, std::move(lhs), term());
      } else {
        return lhs;
      }
    }
  }

  Expr term()
  {
    Expr lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = Expr::binary(Op::Mul, std::move(lhs), unary());
      } else if (accept('/')) {
        lhs = Expr::binary(Op::Div, std::move(lhs), unary());
      } else {
        return lhs;
      }
    }
  }

  Expr unary()
  {
    if (accept('-')) return Expr::unary(Op::Neg, unary());
    return power();
  }

  Expr power()
  {
    Expr base = primary();
    if (accept('^')) return Expr::binary(Op::Pow, std::move(base), unary());
    return base;
  }

  Expr primary()
  {
    skip_ws();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    if (accept('(')) {
      Expr inner = expr();
      if (!accept(')')) fail("expected `)`");
      return inner;
    }
    fail("unexpected `" + std::string(1, c) + "`");
  }

  Expr number()
  {
    double v = 0.0;
    const char* first = src_.data() + pos_;
    const char* last = src_.data() + src_.size();
    auto [ptr, ec] = std::from_chars(first, last, v, std::chars_format::general);
    if (ec == std::errc::result_out_of_range) fail("numeric literal out of range");
    if (ec != std::errc{}) fail("malformed numeric literal");
    pos_ += static_cast<std::size_t>(ptr - first);
    return Expr::number(v);
  }

  Expr identifier()
  {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
      ++pos_;
    }
    const std::string name(src_.substr(start, pos_ - start));
    skip_ws();
    const bool is_call = pos_ < src_.size() && src_[pos_] == '(';
    if (is_call) {
      const FuncEntry* fn = find_function(name);
      if (fn == nullptr) {
        pos_ = start;
        fail("unknown function `" + name + "`");
      }
      ++pos_;
      std::vector<Expr> args;
      skip_ws();
      if (!(pos_ < src_.size() && src_[pos_] == ')')) {
        args.push_back(expr());
        while (accept(',')) args.push_back(expr());
      }
      if (!accept(')')) fail("expected `)` after arguments of `" + name + "`");
      if (args.size() != 1) {
        pos_ = start;
        fail("arity mismatch: `" + name + "` takes 1 argument, got " +
             std::to_string(args.size()));
      }
      return Expr::call(fn->func, std::move(args.front()));
    }
    if (find_function(name) != nullptr) {
      pos_ = start;
      fail("function `" + name + "` used without an argument list");
    }
    if (vars_.find(name) == vars_.end()) {
      pos_ = start;
      fail("unknown variable `" + name + "`");
    }
    return Expr::variable(name);
  }

  std::string_view src_;
  const VarSet& vars_;
  std::size_t pos_ = 0;
};

int precedence(const Expr& e)
{
  switch (e.op) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    case Op::Number: return e.value < 0 || std::signbit(e.value) ? 3 : 5;
    default: return 5;
  }
}

void render(const Expr& e, std::string& out);

void render_child(const Expr& child, bool parens, std::string& out)
{
  if (parens) out += '(';
  render(child, out);
  if (parens) out += ')';
}

void render(const Expr& e, std::string& out)
{
  const int p = precedence(e);
  switch (e.op) {
    case Op::Number: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", std::fabs(e.value));
      if (std::signbit(e.value)) out += '-';
      out += buf;
      return;
    }
    case Op::Variable: out += e.name; return;
    case Op::Neg:
      out += '-';
      render_child(e.args[0], precedence(e.args[0]) < 3, out);
      return;
    case Op::Pow:
      render_child(e.args[0], precedence(e.args[0]) <= 4, out);
      out += '^';
      render_child(e.args[1], precedence(e.args[1]) < 3, out);
      return;
    case Op::Call:
      out += function_name(e.func);
      out += '(';
      render(e.args[0], out);
      out += ')';
      return;
    default: {
      static constexpr std::array<const char*, 4> kSym{" + ", " - ", " * ", " / "};
      const auto idx = static_cast<std::size_t>(e.op) - static_cast<std::size_t>(Op::Add);
      render_child(e.args[0], precedence(e.args[0]) < p, out);
      out += kSym[idx];
      render_child(e.args[1], precedence(e.args[1]) <= p, out);
      return;
    }
  }
}

void collect(const Expr& e, VarSet& out)
{
  if (e.op == Op::Variable) out.insert(e.name);
  for (const auto& a : e.args) collect(a, out);
}

}  // namespace

Expr Expr::number(double v)
{
  Expr e;
  e.op = Op::Number;
  e.value = v;
  return e;
}

Expr Expr::variable(std::string name)
{
  Expr e;
  e.op = Op::Variable;
  e.name = std::move(name);
  return e;
}

Expr Expr::unary(Op op, Expr operand)
{
  Expr e;
  e.op = op;
  e.args.push_back(std::move(operand));
  return e;
}

Expr Expr::binary(Op op, Expr lhs, Expr rhs)
{
  Expr e;
  e.op = op;
  e.args.push_back(std::move(lhs));
  e.args.push_back(std::move(rhs));
  return e;
}

Expr Expr::call(Func f, Expr arg)
{
  Expr e;
  e.op = Op::Call;
  e.func = f;
  e.name = std::string(function_name(f));
  e.args.push_back(std::move(arg));
  return e;
}

Expr parse_expr(std::string_view source, const VarSet& allowed_vars)
{
  return Parser(source, allowed_vars).parse();
}

std::string to_string(const Expr& e)
{
  std::string out;
  render(e, out);
  return out;
}

std::string_view function_name(Func f)
{
  for (const auto& entry : kFunctions) {
    if (entry.func == f) return entry.name;
  }
  return "?";
}

VarSet variables_of(const Expr& e)
{
  VarSet out;
  collect(e, out);
  return out;
}

double real_pow(double base, double exponent, std::string_view where)
{
  int k = 0;
  if (small_integer(exponent, k)) {
    double acc = 1.0;
    for (int i = 0; i < std::abs(k); ++i) acc *= base;
    if (k >= 0) return acc;
    if (acc == 0.0) throw DomainError("division by zero", std::string(where));
    return 1.0 / acc;
  }
  if (exponent == std::floor(exponent)) return std::pow(base, exponent);
  if (base < 0.0) {
    throw DomainError("negative base with non-integer exponent", std::string(where));
  }
  if (base == 0.0) {
    if (exponent > 0.0) return 0.0;
    throw DomainError("division by zero", std::string(where));
  }
  return std::pow(base, exponent);
}

double apply_function(Func f, double x, std::string_view where)
{
  switch (f) {
    case Func::Sin: return std::sin(x);
    case Func::Cos: return std::cos(x);
    case Func::Tan: return std::tan(x);
    case Func::Exp: return std::exp(x);
    case Func::Log:
      if (x <= 0.0) throw DomainError("log of nonpositive value", std::string(where));
      return std::log(x);
    case Func::Abs: return std::fabs(x);
    case Func::Sqrt:
      if (x < 0.0) throw DomainError("sqrt of negative value", std::string(where));
      return std::sqrt(x);
    case Func::Sign: return static_cast<double>((x > 0.0) - (x < 0.0));
    case Func::Tanh: return std::tanh(x);
  }
  return 0.0;
}

Program::Program(const Expr& e, std::span<const std::string> layout)
{
  int depth = 0;
  emit(e, layout, depth);
}

void Program::emit(const Expr& e, std::span<const std::string> layout, int& depth)
{
  auto push = [&](Instr in) {
    code_.push_back(in);
  };
  auto with_text = [&](Instr in) {
    in.text = static_cast<int>(text_.size());
    text_.push_back(to_string(e));
    return in;
  };

  switch (e.op) {
    case Op::Number:
      push(Instr{.code = Code::Const, .value = e.value});
      max_depth_ = std::max(max_depth_, ++depth);
      return;
    case Op::Variable: {
      for (std::size_t i = 0; i < layout.size(); ++i) {
        if (layout[i] == e.name) {
          push(with_text(Instr{.code = Code::Load, .slot = static_cast<int>(i)}));
          max_depth_ = std::max(max_depth_, ++depth);
          return;
        }
      }
      throw Error("variable `" + e.name + "` is not bound by the evaluation layout");
    }
    case Op::Neg:
      emit(e.args[0], layout, depth);
      push(with_text(Instr{.code = Code::Neg}));
      return;
    case Op::Call:
      emit(e.args[0], layout, depth);
      push(with_text(Instr{.code = Code::Call, .func = e.func}));
      return;
    case Op::Pow: {
      emit(e.args[0], layout, depth);
      const Expr& ex = e.args[1];
      int k = 0;
      if (ex.op == Op::Number && small_integer(ex.value, k)) {
        push(with_text(Instr{.code = Code::PowInt, .exponent = k}));
        return;
      }
      if (ex.op == Op::Neg && ex.args[0].op == Op::Number && small_integer(ex.args[0].value, k)) {
        push(with_text(Instr{.code = Code::PowInt, .exponent = -k}));
        return;
      }
      emit(ex, layout, depth);
      push(with_text(Instr{.code = Code::Pow}));
      --depth;
      return;
    }
    default: {
      emit(e.args[0], layout, depth);
      emit(e.args[1], layout, depth);
      Code c = Code::Add;
      if (e.op == Op::Sub) c = Code::Sub;
      if (e.op == Op::Mul) c = Code::Mul;
      if (e.op == Op::Div) c = Code::Div;
      push(with_text(Instr{.code = c}));
      --depth;
      return;
    }
  }
}

double Program::eval(std::span<const double> slots) const
{
  constexpr int kInline = 64;
  std::array<double, kInline> small{};
  std::vector<double> large;
  double* stack = small.data();
  if (max_depth_ > kInline) {
    large.resize(static_cast<std::size_t>(max_depth_));
    stack = large.data();
  }

  int sp = 0;
  for (const Instr& in : code_) {
    double r = 0.0;
    switch (in.code) {
      case Code::Const:
        stack[sp++] = in.value;
        continue;
      case Code::Load:
        r = slots[static_cast<std::size_t>(in.slot)];
        if (!std::isfinite(r)) throw DomainError("non-finite input", text_[in.text]);
        stack[sp++] = r;
        continue;
      case Code::Neg: r = -stack[sp - 1]; break;
      case Code::Call: r = apply_function(in.func, stack[sp - 1], text_[in.text]); break;
      case Code::PowInt: r = real_pow(stack[sp - 1], in.exponent, text_[in.text]); break;
      case Code::Add: r = stack[sp - 2] + stack[sp - 1]; --sp; break;
      case Code::Sub: r = stack[sp - 2] - stack[sp - 1]; --sp; break;
      case Code::Mul: r = stack[sp - 2] * stack[sp - 1]; --sp; break;
      case Code::Div:
        if (stack[sp - 1] == 0.0) throw DomainError("division by zero", text_[in.text]);
        r = stack[sp - 2] / stack[sp - 1];
        --sp;
        break;
      case Code::Pow:
        r = real_pow(stack[sp - 2], stack[sp - 1], text_[in.text]);
        --sp;
        break;
    }
    if (!std::isfinite(r)) throw DomainError("non-finite result", text_[in.text]);
    stack[sp - 1] = r;
  }
  return stack[0];
}

double eval_expr(const Expr& e, const std::map<std::string, double, std::less<>>& env)
{
  std::vector<std::string> layout;
  std::vector<double> slots;
  for (const auto& name : variables_of(e)) {
    auto it = env.find(name);
    if (it == env.end()) throw Error("variable `" + name + "` is not bound");
    layout.push_back(name);
    slots.push_back(it->second);
  }
  return Program(e, layout).eval(slots);
}

}  // namespace ptobs
