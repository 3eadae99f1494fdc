#include "foliated/errors.hpp"

#include <sstream>
#include <utility>

namespace foliated {
namespace {

std::string flow_message(double sigma, std::size_t jump)
{
    std::ostringstream os;
    os << "Marcus flow diverged at sigma = " << sigma;
    if (jump != FlowDivergenceError::no_jump)
        os << " (jump index " << jump << ")";
    return os.str();
}

}  // namespace

FlowDivergenceError::FlowDivergenceError(double sigma_reached, std::size_t jump_index)
    : Error(flow_message(sigma_reached, jump_index)), sigma_(sigma_reached), jump_index_(jump_index)
{
}

NonFiniteDriftError::NonFiniteDriftError(double time)
    : Error("non-finite state from drift at t = " + std::to_string(time)), time_(time)
{
}

TangencyViolationError::TangencyViolationError(std::string field, double violation)
    : Error("field " + field + " leaks off the leaf: max transversal component "
            + std::to_string(violation)),
      field_(std::move(field)),
      violation_(violation)
{
}

DominanceFailureError::DominanceFailureError(double t, double psi, double bound)
    : Error("dominance fails at t = " + std::to_string(t) + ": psi = " + std::to_string(psi)
            + " > bound = " + std::to_string(bound)),
      t_(t),
      psi_(psi),
      bound_(bound)
{
}

ConfigError::ConfigError(std::string const& message, std::size_t line, std::string key)
    : Error(line ? "config line " + std::to_string(line) + (key.empty() ? "" : " [" + key + "]")
                       + ": " + message
                 : message),
      line_(line),
      key_(std::move(key))
{
}

}  // namespace foliated
