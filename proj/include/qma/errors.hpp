#pragma once

#include <stdexcept>
#include <string>

namespace qma {

/// Input violates a documented precondition (non-hyperhermitian matrix, bad index, ...).
class precondition_error : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Operands have incompatible dimensions or degrees.
class dimension_error : public precondition_error {
public:
  using precondition_error::precondition_error;
};

/// A computed quantity that must be real/symmetric/convergent is not, beyond tolerance.
class numerical_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Evaluation at a pole of a singular field.
class pole_error : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Level set on which the exhaustion gradient vanishes.
class degenerate_level_set : public numerical_error {
public:
  using numerical_error::numerical_error;
};

/// Malformed or inconsistent run configuration; line and column are 1-based, 0 when unknown.
class config_error : public std::runtime_error {
public:
  config_error(const std::string& what, int line = 0, int column = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what
                                    : what),
        line_(line), column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

private:
  int line_, column_;
};

} // namespace qma
