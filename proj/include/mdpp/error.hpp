#ifndef MDPP_ERROR_HPP
#define MDPP_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace mdpp {

enum class ErrorKind {
  InvalidArgument,
  SingularKernel,         // marginal kernel with an eigenvalue at 1
  ChainUndefined,         // Markov DPP requested for L not strictly below I
  IllConditioned,         // conditional-kernel solve exceeded the condition limit
  InfeasibleCardinality,  // fewer than k items carry probability mass
  GuardExceeded,          // brute-force enumeration beyond its size guard
  UndefinedMetric,
  DynamicRange,           // exp() overflow while forming quality scores
  NumericOverflow,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; callers dispatch on kind().
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string &what) {
  throw Error(kind, what);
}

}  // namespace mdpp

#endif  // MDPP_ERROR_HPP
