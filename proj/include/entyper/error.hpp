#ifndef ENTYPER_ERROR_HPP_
#define ENTYPER_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace entyper {

/// Input that could not be read or is structurally broken. The CLI maps
/// this family to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Syntax error at a known position (1-based line and column; column 0 when
/// the error applies to the whole line).
class ParseError : public InputError {
 public:
  ParseError(std::string what, std::size_t line, std::size_t column = 0)
      : InputError(format(what, line, column)), line_(line), column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& what, std::size_t line,
                            std::size_t column) {
    std::string out = "line " + std::to_string(line);
    if (column > 0) out += ", column " + std::to_string(column);
    return out + ": " + what;
  }

  std::size_t line_;
  std::size_t column_;
};

/// Well-formed input that violates a domain invariant.
class ValidationError : public InputError {
 public:
  using InputError::InputError;
};

/// Lookup of a concept that has no stored representation. Kept distinct from
/// a zero similarity.
class UnknownConceptError : public std::out_of_range {
 public:
  explicit UnknownConceptError(const std::string& concept_id)
      : std::out_of_range("no representation for concept '" + concept_id + "'"),
        concept_(concept_id) {}

  const std::string& concept_id() const noexcept { return concept_; }

 private:
  std::string concept_;
};

}  // namespace entyper

#endif  // ENTYPER_ERROR_HPP_
