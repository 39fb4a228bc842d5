#ifndef SHOCKEXP_EXPR_HPP
#define SHOCKEXP_EXPR_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace shockexp {

/// Thrown for malformed expression text. offset() is a byte index into the
/// source string (equal to its length when input ended too early).
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what), offset_(offset) {}
  std::size_t offset() const { return offset_; }

private:
  std::size_t offset_;
};

/// Thrown for domain errors during evaluation (division by zero, ln of a
/// nonpositive value, ...) and for unbound variables.
class EvalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class Var : std::uint8_t { U = 0, V = 1, X = 2 };

const char* var_name(Var v);
Var var_from_name(std::string_view name);

/**
 * Immutable arithmetic expression over the variables u, v and x.
 *
 * Grammar: numbers, the three variables, unary minus, + - * /, ^ with a
 * nonnegative integer literal exponent, and the functions exp, ln, sin, cos,
 * sqrt. Precedence is ^ > unary minus > * / > + -, binary operators are
 * left-associative.
 *
 * The tree is shared between copies. A flat postfix program is compiled at
 * construction so that the hot evaluation path does not chase pointers.
 */
class Expression {
public:
  struct Node;

  /// Constant zero.
  Expression();

  static Expression parse(std::string_view text);
  static Expression constant(double value);
  static Expression variable(Var v);

  /// Exact symbolic derivative; literal subtrees are constant-folded.
  Expression derivative(Var v) const;

  /// Fast path. All three variables are always bound here.
  double operator()(double u, double v = 0.0, double x = 0.0) const;

  /// out[i] = f(u[i], v[i], 0) for i < n. Same results as the scalar path.
  void evaluate_batch(const double* u, const double* v, double* out, std::size_t n) const;

  /// Named bindings; throws EvalError if a referenced variable is missing.
  double evaluate(const std::map<std::string, double>& bindings) const;

  /// Fully parenthesised text that parse() maps back to an equivalent tree.
  std::string to_string() const;

  bool depends_on(Var v) const;
  bool is_constant() const;

  const std::shared_ptr<const Node>& root() const { return root_; }

private:
  explicit Expression(std::shared_ptr<const Node> root);
  void compile();

  struct Instr {
    std::uint8_t op;
    std::uint8_t arg;
    std::uint32_t exponent;
    double value;
  };

  std::shared_ptr<const Node> root_;
  std::vector<Instr> program_;
  std::size_t stack_depth_ = 0;
  std::uint8_t var_mask_ = 0;
};

enum class NodeKind : std::uint8_t {
  Constant,
  Variable,
  Neg,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
  Exp,
  Ln,
  Sin,
  Cos,
  Sqrt
};

struct Expression::Node {
  NodeKind kind;
  double value = 0.0;           // Constant
  Var var = Var::U;             // Variable
  std::uint32_t exponent = 0;   // Pow
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

} // namespace shockexp

#endif
