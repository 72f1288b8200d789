#include "mdpp/error.hpp"

namespace mdpp {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::SingularKernel: return "singular-kernel";
    case ErrorKind::ChainUndefined: return "chain-undefined";
    case ErrorKind::IllConditioned: return "ill-conditioned";
    case ErrorKind::InfeasibleCardinality: return "infeasible-cardinality";
    case ErrorKind::GuardExceeded: return "guard-exceeded";
    case ErrorKind::UndefinedMetric: return "undefined-metric";
    case ErrorKind::DynamicRange: return "dynamic-range";
    case ErrorKind::NumericOverflow: return "numeric-overflow";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

}  // namespace mdpp
