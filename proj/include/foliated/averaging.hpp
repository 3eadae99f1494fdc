#pragma once

#include "foliated/foliation.hpp"
#include "foliated/q_table.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace foliated {

/// Observable h on the state space together with its leafwise average, when known.
struct Observable
{
    std::string id;
    std::function<Vec(Vec const&)> field;
    std::optional<AveragedField> known_average;
};

/// h = pi K, averaged by the system's closed form when it has one.
Observable vertical_perturbation_observable(TestSystem const& system);
/// h == value everywhere.
Observable constant_observable(Vec value);

/// Seeds replication r from stream id `first_stream + r`.
struct StreamSeed
{
    std::uint64_t seed = 0;
    std::uint64_t first_stream = 0;

    RngStream stream(std::uint64_t offset, ProcessTag tag) const
    {
        return RngStream(seed, first_stream + offset, tag);
    }
};

struct ErgodicEstimate
{
    Vec v;
    std::string h_id;
    Vec value;
    double time_horizon = 0.0;
    std::size_t replications = 0;
    double std_error = 0.0;
};

/*!
 * Time average of h along the unperturbed leaf dynamics started at
 * (leaf_start, v), after discarding the burn-in fraction, averaged over
 * independent replications. std_error is the largest componentwise standard
 * error of the replication mean.
 */
ErgodicEstimate estimate_Q(TestSystem const& system, Observable const& h, Vec const& v,
                           double time_horizon, std::size_t replications, StreamSeed const& seed,
                           NumericParams const& numerics = {},
                           std::optional<Vec> leaf_start = std::nullopt, std::size_t threads = 1);

enum class DecayKind
{
    exponential, //!< A exp(-rate t)
    power        //!< A t^(-rate)
};

struct DecayFit
{
    DecayKind kind = DecayKind::power;
    double amplitude = 0.0;
    double rate = 0.0;
    double sse = 0.0; //!< residual sum of squares on log errors

    double operator()(double t) const;
};

struct MixingRateEstimate
{
    std::vector<double> times;
    std::vector<double> lp_errors;
    std::vector<double> std_errors;
    Vec q_reference;
    std::optional<DecayFit> fit; //!< absent with fewer than two positive errors
};

/// Least-squares decay fit on log errors; picks the better of exponential and power.
std::optional<DecayFit> fit_decay(std::vector<double> const& times,
                                  std::vector<double> const& errors);

/*!
 * L^p deviation of the running time average of h from its leafwise average,
 * per time in `time_grid`. The average comes from h.known_average, else from
 * a reference run ten times longer than the last grid time.
 */
MixingRateEstimate estimate_eta0(TestSystem const& system, Observable const& h, Vec const& v,
                                 std::vector<double> const& time_grid, std::size_t replications,
                                 double p, StreamSeed const& seed,
                                 NumericParams const& numerics = {},
                                 bool allow_reference_run = true, std::size_t threads = 1);

using QSource = std::variant<AveragedField, QTable>;

AveragedField as_field(QSource const& source);

/*!
 * Averaged transversal SDE dw = Q(w) dt + K~(w) <> dZ~ on [0, T], with the
 * first exit from V recorded as the path's exit.
 */
SamplePath integrate_averaged(TestSystem const& system, QSource const& q_source, Vec const& v0,
                              double T, LevyPath const& transversal_path, double step,
                              int ode_steps = default_ode_steps);

enum class TruncationCause
{
    horizon,
    tau_exit,
    sigma_exit
};

std::string to_string(TruncationCause cause);

struct CoupledErrorSample
{
    double eps = 0.0;
    double T = 0.0;
    double sup_error = 0.0;
    TruncationCause truncation_cause = TruncationCause::horizon;
    double truncation_time = 0.0; //!< in slow time
};

/*!
 * sup |pi(X^eps_{t/eps}) - w_t| over t <= T ^ eps tau ^ sigma on one coupled
 * realization. Z and Z~ come from streams (seed, path_index); the same Z~
 * events drive w at slow time s and X^eps at fast time s / eps.
 */
CoupledErrorSample coupled_error(TestSystem const& system, double eps, double T,
                                 QSource const& q_source, std::uint64_t seed,
                                 std::uint64_t path_index, NumericParams const& numerics = {});

}  // namespace foliated
