#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

namespace foliated {

/// Base class of every error raised by the library.
class Error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// A documented precondition was violated by the caller.
class PreconditionError : public Error
{
  public:
    using Error::Error;
};

/// A closed-form moment is not available for the requested law and order.
class UnsupportedMomentError : public Error
{
  public:
    using Error::Error;
};

/// A Marcus increment ODE produced a non-finite state.
class FlowDivergenceError : public Error
{
  public:
    static constexpr std::size_t no_jump = std::numeric_limits<std::size_t>::max();

    FlowDivergenceError(double sigma_reached, std::size_t jump_index = no_jump);

    double sigma_reached() const noexcept { return sigma_; }
    std::size_t jump_index() const noexcept { return jump_index_; }

  private:
    double sigma_;
    std::size_t jump_index_;
};

/// The drift produced a non-finite state during integration.
class NonFiniteDriftError : public Error
{
  public:
    explicit NonFiniteDriftError(double time);

    double time() const noexcept { return time_; }

  private:
    double time_;
};

/// A coefficient field has a component transversal to the leaves.
class TangencyViolationError : public Error
{
  public:
    TangencyViolationError(std::string field, double violation);

    std::string const& field() const noexcept { return field_; }
    double violation() const noexcept { return violation_; }

  private:
    std::string field_;
    double violation_;
};

/// A tabulated average was queried outside its support.
class ExtrapolationError : public Error
{
  public:
    using Error::Error;
};

/// An averaged drift is required but neither a closed form nor a reference run is available.
class QUnavailableError : public Error
{
  public:
    using Error::Error;
};

/// A process starts outside its admissible region.
class ExitAtStartError : public Error
{
  public:
    using Error::Error;
};

/// Every sample of an experiment was truncated at time zero.
class DegenerateExperimentError : public Error
{
  public:
    using Error::Error;
};

/// eps * T exceeded the smallness threshold of the comparison bound.
class SmallnessViolationError : public Error
{
  public:
    using Error::Error;
};

/// A fixed-point iteration did not reach its tolerance.
class NonConvergenceError : public Error
{
  public:
    using Error::Error;
};

/// The comparison envelope fails to dominate the maximal solution.
class DominanceFailureError : public Error
{
  public:
    DominanceFailureError(double t, double psi, double bound);

    double t() const noexcept { return t_; }
    double psi() const noexcept { return psi_; }
    double bound() const noexcept { return bound_; }

  private:
    double t_;
    double psi_;
    double bound_;
};

/// Malformed or invalid configuration input.
class ConfigError : public Error
{
  public:
    ConfigError(std::string const& message, std::size_t line = 0, std::string key = {});

    std::size_t line() const noexcept { return line_; }
    std::string const& key() const noexcept { return key_; }

  private:
    std::size_t line_;
    std::string key_;
};

}  // namespace foliated
