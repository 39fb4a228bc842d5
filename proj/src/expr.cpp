#include "shockexp/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace shockexp {

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

NodePtr make_node(NodeKind kind, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
  auto n = std::make_shared<Expression::Node>();
  n->kind = kind;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

NodePtr make_const(double value) {
  auto n = std::make_shared<Expression::Node>();
  n->kind = NodeKind::Constant;
  n->value = value;
  return n;
}

NodePtr make_var(Var v) {
  auto n = std::make_shared<Expression::Node>();
  n->kind = NodeKind::Variable;
  n->var = v;
  return n;
}

NodePtr make_pow_raw(NodePtr base, std::uint32_t exponent) {
  auto n = std::make_shared<Expression::Node>();
  n->kind = NodeKind::Pow;
  n->exponent = exponent;
  n->lhs = std::move(base);
  return n;
}

const char* function_name(NodeKind k) {
  switch (k) {
  case NodeKind::Exp: return "exp";
  case NodeKind::Ln: return "ln";
  case NodeKind::Sin: return "sin";
  case NodeKind::Cos: return "cos";
  case NodeKind::Sqrt: return "sqrt";
  default: return "?";
  }
}

double int_pow(double base, std::uint32_t n) {
  double result = 1.0;
  while (n > 0) {
    if (n & 1u) result *= base;
    base *= base;
    n >>= 1u;
  }
  return result;
}

double checked_div(double a, double b) {
  if (b == 0.0) throw EvalError("division by zero");
  return a / b;
}

double checked_ln(double a) {
  if (!(a > 0.0)) throw EvalError("ln of nonpositive argument");
  return std::log(a);
}

double checked_sqrt(double a) {
  if (!(a >= 0.0)) throw EvalError("sqrt of negative argument");
  return std::sqrt(a);
}

double apply_function(NodeKind k, double a) {
  switch (k) {
  case NodeKind::Exp: return std::exp(a);
  case NodeKind::Ln: return checked_ln(a);
  case NodeKind::Sin: return std::sin(a);
  case NodeKind::Cos: return std::cos(a);
  case NodeKind::Sqrt: return checked_sqrt(a);
  default: throw EvalError("not a function node");
  }
}

// ---------------------------------------------------------------------------
// Folding constructors, used when building derivatives.

bool is_const(const NodePtr& n, double value) {
  return n->kind == NodeKind::Constant && n->value == value;
}

bool both_const(const NodePtr& a, const NodePtr& b) {
  return a->kind == NodeKind::Constant && b->kind == NodeKind::Constant;
}

NodePtr fold_or(double folded, NodePtr fallback) {
  return std::isfinite(folded) ? make_const(folded) : fallback;
}

NodePtr neg(NodePtr a) {
  if (a->kind == NodeKind::Constant) return make_const(-a->value);
  if (a->kind == NodeKind::Neg) return a->lhs;
  return make_node(NodeKind::Neg, std::move(a));
}

NodePtr add(NodePtr a, NodePtr b) {
  if (both_const(a, b)) return fold_or(a->value + b->value, make_node(NodeKind::Add, a, b));
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  return make_node(NodeKind::Add, std::move(a), std::move(b));
}

NodePtr sub(NodePtr a, NodePtr b) {
  if (both_const(a, b)) return fold_or(a->value - b->value, make_node(NodeKind::Sub, a, b));
  if (is_const(b, 0.0)) return a;
  if (is_const(a, 0.0)) return neg(std::move(b));
  return make_node(NodeKind::Sub, std::move(a), std::move(b));
}

NodePtr mul(NodePtr a, NodePtr b) {
  if (both_const(a, b)) return fold_or(a->value * b->value, make_node(NodeKind::Mul, a, b));
  if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  if (is_const(a, -1.0)) return neg(std::move(b));
  if (is_const(b, -1.0)) return neg(std::move(a));
  return make_node(NodeKind::Mul, std::move(a), std::move(b));
}

NodePtr div(NodePtr a, NodePtr b) {
  if (both_const(a, b) && b->value != 0.0)
    return fold_or(a->value / b->value, make_node(NodeKind::Div, a, b));
  if (is_const(a, 0.0)) return make_const(0.0);
  if (is_const(b, 1.0)) return a;
  return make_node(NodeKind::Div, std::move(a), std::move(b));
}

NodePtr pow(NodePtr a, std::uint32_t n) {
  if (n == 0) return make_const(1.0);
  if (n == 1) return a;
  if (a->kind == NodeKind::Constant) return fold_or(int_pow(a->value, n), make_pow_raw(a, n));
  return make_pow_raw(std::move(a), n);
}

NodePtr func(NodeKind k, NodePtr a) {
  if (a->kind == NodeKind::Constant) {
    try {
      return fold_or(apply_function(k, a->value), make_node(k, a));
    } catch (const EvalError&) {
      // leave the error to evaluation time
    }
  }
  return make_node(k, std::move(a));
}

NodePtr derive(const NodePtr& n, Var v) {
  switch (n->kind) {
  case NodeKind::Constant: return make_const(0.0);
  case NodeKind::Variable: return make_const(n->var == v ? 1.0 : 0.0);
  case NodeKind::Neg: return neg(derive(n->lhs, v));
  case NodeKind::Add: return add(derive(n->lhs, v), derive(n->rhs, v));
  case NodeKind::Sub: return sub(derive(n->lhs, v), derive(n->rhs, v));
  case NodeKind::Mul:
    return add(mul(derive(n->lhs, v), n->rhs), mul(n->lhs, derive(n->rhs, v)));
  case NodeKind::Div: {
    auto da = derive(n->lhs, v);
    auto db = derive(n->rhs, v);
    if (is_const(db, 0.0)) return div(da, n->rhs);
    return div(sub(mul(da, n->rhs), mul(n->lhs, db)), pow(n->rhs, 2));
  }
  case NodeKind::Pow: {
    auto da = derive(n->lhs, v);
    if (n->exponent == 0) return make_const(0.0);
    return mul(mul(make_const(static_cast<double>(n->exponent)), pow(n->lhs, n->exponent - 1)),
               da);
  }
  case NodeKind::Exp: return mul(func(NodeKind::Exp, n->lhs), derive(n->lhs, v));
  case NodeKind::Ln: return div(derive(n->lhs, v), n->lhs);
  case NodeKind::Sin: return mul(func(NodeKind::Cos, n->lhs), derive(n->lhs, v));
  case NodeKind::Cos: return neg(mul(func(NodeKind::Sin, n->lhs), derive(n->lhs, v)));
  case NodeKind::Sqrt:
    return div(derive(n->lhs, v), mul(make_const(2.0), func(NodeKind::Sqrt, n->lhs)));
  }
  throw EvalError("unknown node kind");
}

// ---------------------------------------------------------------------------
// Recursive descent parser.

class Parser {
public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse_all() {
    skip_ws();
    if (pos_ == text_.size()) throw ParseError("empty expression", 0);
    auto e = parse_sum();
    skip_ws();
    if (pos_ != text_.size())
      throw ParseError("unexpected character '" + std::string(1, text_[pos_]) + "'", pos_);
    return e;
  }

private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) {
    if (pos_ >= text_.size()) throw ParseError(what + " (unexpected end of input)", text_.size());
    throw ParseError(what, pos_);
  }

  NodePtr parse_sum() {
    auto lhs = parse_product();
    for (;;) {
      if (accept('+')) {
        lhs = make_node(NodeKind::Add, lhs, parse_product());
      } else if (accept('-')) {
        lhs = make_node(NodeKind::Sub, lhs, parse_product());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_product() {
    auto lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = make_node(NodeKind::Mul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = make_node(NodeKind::Div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_unary() {
    if (accept('-')) return make_node(NodeKind::Neg, parse_unary());
    return parse_power();
  }

  NodePtr parse_power() {
    auto base = parse_primary();
    while (accept('^')) {
      skip_ws();
      std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (start == pos_) fail("exponent must be a nonnegative integer literal");
      std::uint32_t n = 0;
      auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, n);
      if (ec != std::errc()) throw ParseError("exponent out of range", start);
      base = make_pow_raw(base, n);
    }
    return base;
  }

  NodePtr parse_primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("expected operand");
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      auto e = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        ++pos_;
      std::string_view name = text_.substr(start, pos_ - start);
      if (name == "u") return make_var(Var::U);
      if (name == "v") return make_var(Var::V);
      if (name == "x") return make_var(Var::X);
      NodeKind k;
      if (name == "exp") k = NodeKind::Exp;
      else if (name == "ln") k = NodeKind::Ln;
      else if (name == "sin") k = NodeKind::Sin;
      else if (name == "cos") k = NodeKind::Cos;
      else if (name == "sqrt") k = NodeKind::Sqrt;
      else throw ParseError("unknown identifier '" + std::string(name) + "'", start);
      if (!accept('(')) fail("expected '(' after function name");
      auto arg = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return make_node(k, arg);
    }
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  NodePtr parse_number() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
      ++pos_;
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      } else {
        pos_ = save;
      }
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (ec != std::errc() || ptr != text_.data() + pos_) throw ParseError("malformed number", start);
    return make_const(value);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------

enum Op : std::uint8_t {
  OpConst,
  OpVar,
  OpNeg,
  OpAdd,
  OpSub,
  OpMul,
  OpDiv,
  OpPow,
  OpExp,
  OpLn,
  OpSin,
  OpCos,
  OpSqrt
};

Op op_for(NodeKind k) {
  switch (k) {
  case NodeKind::Constant: return OpConst;
  case NodeKind::Variable: return OpVar;
  case NodeKind::Neg: return OpNeg;
  case NodeKind::Add: return OpAdd;
  case NodeKind::Sub: return OpSub;
  case NodeKind::Mul: return OpMul;
  case NodeKind::Div: return OpDiv;
  case NodeKind::Pow: return OpPow;
  case NodeKind::Exp: return OpExp;
  case NodeKind::Ln: return OpLn;
  case NodeKind::Sin: return OpSin;
  case NodeKind::Cos: return OpCos;
  case NodeKind::Sqrt: return OpSqrt;
  }
  return OpConst;
}

std::string format_number(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void render(const NodePtr& n, std::string& out) {
  switch (n->kind) {
  case NodeKind::Constant:
    if (std::signbit(n->value)) {
      out += "(-";
      out += format_number(-n->value);
      out += ')';
    } else {
      out += format_number(n->value);
    }
    return;
  case NodeKind::Variable: out += var_name(n->var); return;
  case NodeKind::Neg:
    out += "(-";
    render(n->lhs, out);
    out += ')';
    return;
  case NodeKind::Pow:
    out += '(';
    render(n->lhs, out);
    out += '^';
    out += std::to_string(n->exponent);
    out += ')';
    return;
  case NodeKind::Add:
  case NodeKind::Sub:
  case NodeKind::Mul:
  case NodeKind::Div: {
    const char op = n->kind == NodeKind::Add   ? '+'
                    : n->kind == NodeKind::Sub ? '-'
                    : n->kind == NodeKind::Mul ? '*'
                                               : '/';
    out += '(';
    render(n->lhs, out);
    out += op;
    render(n->rhs, out);
    out += ')';
    return;
  }
  default:
    out += function_name(n->kind);
    out += '(';
    render(n->lhs, out);
    out += ')';
    return;
  }
}

} // namespace

const char* var_name(Var v) {
  switch (v) {
  case Var::U: return "u";
  case Var::V: return "v";
  case Var::X: return "x";
  }
  return "?";
}

Var var_from_name(std::string_view name) {
  if (name == "u") return Var::U;
  if (name == "v") return Var::V;
  if (name == "x") return Var::X;
  throw std::invalid_argument("invalid variable '" + std::string(name) + "'");
}

Expression::Expression() : Expression(make_const(0.0)) {}

Expression::Expression(std::shared_ptr<const Node> root) : root_(std::move(root)) { compile(); }

Expression Expression::parse(std::string_view text) { return Expression(Parser(text).parse_all()); }

Expression Expression::constant(double value) { return Expression(make_const(value)); }

Expression Expression::variable(Var v) { return Expression(make_var(v)); }

Expression Expression::derivative(Var v) const { return Expression(derive(root_, v)); }

void Expression::compile() {
  program_.clear();
  var_mask_ = 0;
  std::size_t depth = 0;
  std::size_t max_depth = 0;
  // Post-order walk; depth tracks the evaluation stack height.
  auto emit = [&](auto&& self, const NodePtr& n) -> void {
    if (n->lhs) self(self, n->lhs);
    if (n->rhs) self(self, n->rhs);
    Instr ins{op_for(n->kind), 0, n->exponent, n->value};
    switch (n->kind) {
    case NodeKind::Constant:
      ++depth;
      break;
    case NodeKind::Variable:
      ins.arg = static_cast<std::uint8_t>(n->var);
      var_mask_ |= static_cast<std::uint8_t>(1u << ins.arg);
      ++depth;
      break;
    case NodeKind::Add:
    case NodeKind::Sub:
    case NodeKind::Mul:
    case NodeKind::Div:
      --depth;
      break;
    default:
      break;
    }
    max_depth = std::max(max_depth, depth);
    program_.push_back(ins);
  };
  emit(emit, root_);
  stack_depth_ = max_depth;
}

double Expression::operator()(double u, double v, double x) const {
  const double vars[3] = {u, v, x};
  if (program_.size() == 1) {
    const Instr& ins = program_[0];
    return ins.op == OpConst ? ins.value : vars[ins.arg];
  }
  constexpr std::size_t inline_capacity = 32;
  std::array<double, inline_capacity> small{};
  std::vector<double> large;
  double* stack = small.data();
  if (stack_depth_ > inline_capacity) {
    large.resize(stack_depth_);
    stack = large.data();
  }
  std::size_t top = 0;
  for (const Instr& ins : program_) {
    switch (ins.op) {
    case OpConst: stack[top++] = ins.value; break;
    case OpVar: stack[top++] = vars[ins.arg]; break;
    case OpNeg: stack[top - 1] = -stack[top - 1]; break;
    case OpAdd: --top; stack[top - 1] += stack[top]; break;
    case OpSub: --top; stack[top - 1] -= stack[top]; break;
    case OpMul: --top; stack[top - 1] *= stack[top]; break;
    case OpDiv: --top; stack[top - 1] = checked_div(stack[top - 1], stack[top]); break;
    case OpPow: stack[top - 1] = int_pow(stack[top - 1], ins.exponent); break;
    case OpExp: stack[top - 1] = std::exp(stack[top - 1]); break;
    case OpLn: stack[top - 1] = checked_ln(stack[top - 1]); break;
    case OpSin: stack[top - 1] = std::sin(stack[top - 1]); break;
    case OpCos: stack[top - 1] = std::cos(stack[top - 1]); break;
    case OpSqrt: stack[top - 1] = checked_sqrt(stack[top - 1]); break;
    }
  }
  return stack[0];
}

void Expression::evaluate_batch(const double* u, const double* v, double* out, std::size_t n) const {
  if (program_.size() == 1) {
    const Instr& ins = program_[0];
    const double* src = ins.arg == 0 ? u : v;
    for (std::size_t i = 0; i < n; ++i)
      out[i] = ins.op == OpConst ? ins.value : (ins.arg == 2 ? 0.0 : src[i]);
    return;
  }
  constexpr std::size_t block = 128;
  std::vector<double> stack(std::max<std::size_t>(stack_depth_, 1) * block);
  for (std::size_t base = 0; base < n; base += block) {
    const std::size_t m = std::min(block, n - base);
    std::size_t top = 0;
    for (const Instr& ins : program_) {
      double* next = stack.data() + top * block;
      switch (ins.op) {
      case OpConst:
        std::fill_n(next, m, ins.value);
        ++top;
        continue;
      case OpVar:
        if (ins.arg == 2) std::fill_n(next, m, 0.0);
        else std::copy_n((ins.arg == 0 ? u : v) + base, m, next);
        ++top;
        continue;
      default:
        break;
      }
      double* a = next - block; // top of stack
      const double* b = a;
      if (ins.op == OpAdd || ins.op == OpSub || ins.op == OpMul || ins.op == OpDiv) {
        --top;
        a -= block;
      }
      switch (ins.op) {
      case OpNeg: for (std::size_t i = 0; i < m; ++i) a[i] = -a[i]; break;
      case OpAdd: for (std::size_t i = 0; i < m; ++i) a[i] += b[i]; break;
      case OpSub: for (std::size_t i = 0; i < m; ++i) a[i] -= b[i]; break;
      case OpMul: for (std::size_t i = 0; i < m; ++i) a[i] *= b[i]; break;
      case OpDiv: for (std::size_t i = 0; i < m; ++i) a[i] = checked_div(a[i], b[i]); break;
      case OpPow: for (std::size_t i = 0; i < m; ++i) a[i] = int_pow(a[i], ins.exponent); break;
      case OpExp: for (std::size_t i = 0; i < m; ++i) a[i] = std::exp(a[i]); break;
      case OpLn: for (std::size_t i = 0; i < m; ++i) a[i] = checked_ln(a[i]); break;
      case OpSin: for (std::size_t i = 0; i < m; ++i) a[i] = std::sin(a[i]); break;
      case OpCos: for (std::size_t i = 0; i < m; ++i) a[i] = std::cos(a[i]); break;
      case OpSqrt: for (std::size_t i = 0; i < m; ++i) a[i] = checked_sqrt(a[i]); break;
      }
    }
    std::copy_n(stack.data(), m, out + base);
  }
}

double Expression::evaluate(const std::map<std::string, double>& bindings) const {
  double vals[3] = {0.0, 0.0, 0.0};
  for (int i = 0; i < 3; ++i) {
    if (!(var_mask_ & (1u << i))) continue;
    const char* name = var_name(static_cast<Var>(i));
    auto it = bindings.find(name);
    if (it == bindings.end()) throw EvalError(std::string("unbound variable '") + name + "'");
    vals[i] = it->second;
  }
  return (*this)(vals[0], vals[1], vals[2]);
}

std::string Expression::to_string() const {
  std::string out;
  render(root_, out);
  return out;
}

bool Expression::depends_on(Var v) const {
  return (var_mask_ & (1u << static_cast<unsigned>(v))) != 0;
}

bool Expression::is_constant() const { return var_mask_ == 0; }

} // namespace shockexp
