#ifndef SHOCKEXP_ERRORS_HPP
#define SHOCKEXP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace shockexp {

/// Configuration does not match the expected schema or violates a
/// parameter constraint (nonpositive epsilon, ...).
class SpecError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A numerical procedure could not complete: unbracketed root, focusing,
/// point outside a characteristic fan, jump collapse, ...
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace shockexp

#endif
