#ifndef SHOCKEXP_TESTS_RANDOM_EXPR_HPP
#define SHOCKEXP_TESTS_RANDOM_EXPR_HPP

#include <random>
#include <string>

// Random expression text over u, v, x. Divisions and function arguments are
// shifted away from singularities so that the expressions are smooth on R^3.
inline std::string random_expression(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, 11);
  std::uniform_real_distribution<double> num(-2.0, 2.0);
  auto leaf = [&]() -> std::string {
    switch (pick(rng) % 4) {
    case 0: return "u";
    case 1: return "v";
    case 2: return "x";
    default: return std::to_string(num(rng));
    }
  };
  if (depth <= 0) return leaf();
  auto sub = [&] { return random_expression(rng, depth - 1); };
  switch (pick(rng)) {
  case 0: return "(" + sub() + "+" + sub() + ")";
  case 1: return "(" + sub() + "-" + sub() + ")";
  case 2: return "(" + sub() + "*" + sub() + ")";
  case 3: return "(" + sub() + "/(1.5+(" + sub() + ")^2))";
  case 4: return "(" + sub() + ")^" + std::to_string(pick(rng) % 4);
  case 5: return "-(" + sub() + ")";
  case 6: return "exp(0.3*sin(" + sub() + "))";
  case 7: return "ln(1+(" + sub() + ")^2)";
  case 8: return "sqrt(2+cos(" + sub() + "))";
  case 9: return "sin(" + sub() + ")";
  case 10: return "cos(" + sub() + ")";
  default: return leaf();
  }
}

#endif
