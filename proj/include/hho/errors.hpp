// Error types shared by every module of the library.

#ifndef HHO_ERRORS_HPP
#define HHO_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace hho {

  /// Failure categories. Each maps onto one of the documented error paths of the public API.
  enum class ErrorKind {
    InvalidArgument,
    FormatError,
    MeshInvalid,
    UnsupportedDegree,
    QuadratureError,
    BasisDegenerate,
    OperatorBuildFailure,
    EvaluationError,
    CondensationFailure,
    SolverFailure,
    NewtonDiverged,
    InvalidSequence,
    DegenerateExactSolution,
    ConfigError
  };

  const char* to_string(ErrorKind kind);

  class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), m_kind(kind), m_message(what) {}

    ErrorKind kind() const noexcept { return m_kind; }
    /// The message without the kind prefix.
    const std::string& message() const noexcept { return m_message; }

  private:
    ErrorKind m_kind;
    std::string m_message;
  };

} // namespace hho

#endif
