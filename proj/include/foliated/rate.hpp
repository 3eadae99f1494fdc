#pragma once

#include "foliated/averaging.hpp"
#include "foliated/foliation.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace foliated {

/// (p - 1) / p^2, the supremum of admissible rates.
double admissible_lambda_ceiling(double p);

/// c_lambda = ((p - 1) / p^2 - lambda) / k2.
double c_lambda(double p, double lambda, double k2);

/// How the leafwise average Q is obtained when the system has no closed form.
struct QEstimationSettings
{
    std::optional<std::string> table_path; //!< cached table, read instead of estimating
    std::size_t grid_points = 21;          //!< uniform over the closure of V
    double horizon = 200.0;
    std::size_t replications = 16;
};

/// Time grid and sample size for fitting eta0.
struct Eta0Settings
{
    std::vector<double> times{1.0, 2.0, 4.0, 8.0, 16.0, 32.0};
    std::size_t replications = 32;
};

struct ExperimentConfig
{
    std::string system = "ou_lines";
    SystemParams system_params;
    double p = 2.0;
    double T = 1.0;
    std::vector<double> eps_grid{0.2, 0.1, 0.05, 0.025};
    std::size_t n_paths = 200;
    double lambda_target = 0.8 * 0.25;
    double c_constant = 1.0;
    std::uint64_t seed = 0;
    NumericParams numerics;
    QEstimationSettings q_estimation;
    Eta0Settings eta0;
    //! Replace simulation by err(eps) = amplitude * eps^exponent (fitter check).
    bool synthetic = false;
    double synthetic_amplitude = 3.0;
    double synthetic_exponent = 0.25;

    void validate() const;
};

struct RatePoint
{
    double eps = 0.0;
    double lp_sup_error = 0.0;
    double std_error = 0.0;
    double trunc_frac = 0.0;
    double eta0_value = 0.0; //!< eta0(c T |ln eps|)
    double bound_value = 0.0;
};

struct RateFitResult
{
    std::vector<RatePoint> points;
    double p = 2.0;
    double T = 1.0;
    std::size_t n_paths = 0;
    double lambda_hat = 0.0;
    double lambda_half_width = 0.0; //!< 95% normal half-width
    double intercept = 0.0;         //!< of ln err = intercept + lambda ln eps
    double fitted_constant = 0.0;   //!< exp(intercept) / T
    double bound_constant = 0.0;    //!< smallest C with err <= C T [eps^lambda + eta0]
    double lambda_target = 0.0;
    double lambda_ceiling = 0.0;
    double c_constant = 1.0;
    std::optional<DecayFit> eta0_fit;
    //! (c, bound constant) for c / 2, c, 2 c
    std::vector<std::pair<double, double>> c_sensitivity;
};

/// Leafwise average for the configured system: closed form, cached table, or estimated table.
QSource resolve_q_source(TestSystem const& system, ExperimentConfig const& config,
                         std::size_t threads = 1);

/*!
 * L^p-sup coupled errors over the eps grid, weighted log-log fit of the rate
 * and the bound constant. Path i uses stream id i at every eps.
 */
RateFitResult run_rate_experiment(ExperimentConfig const& config, std::size_t threads = 1);

/// Rate fit and bound constants from per-eps errors, shared with the synthetic mode.
RateFitResult fit_rate(std::vector<RatePoint> points, ExperimentConfig const& config,
                       std::optional<DecayFit> eta0_fit);

struct PartitionScheme
{
    double eps = 0.0;
    double c = 0.0;
    double T = 0.0;
    double delta = 0.0; //!< -c T ln eps
    std::size_t N = 0;  //!< floor(1 / (c eps |ln eps|))

    double point(std::size_t n) const { return static_cast<double>(n) * delta; }
};

PartitionScheme partition(double eps, double c, double T);

struct Decomposition
{
    double A1 = 0.0;
    double A2 = 0.0;
    double A3 = 0.0;
    double delta = 0.0;
    std::size_t blocks = 0;
    bool truncated = false; //!< perturbed path left the chart before the last block
    bool holds = false;     //!< |delta| <= A1 + A2 + A3 up to rounding
};

/*!
 * Block decomposition of the averaging defect for h = pi K on one coupled
 * realization (streams as in coupled_error), over the fast-time blocks
 * [t_n, t_{n+1}] of partition(eps, c, T), n = 0..N.
 */
Decomposition decompose_error(TestSystem const& system, double eps, double T, double c,
                              QSource const& q_source, std::uint64_t seed,
                              std::uint64_t path_index, NumericParams const& numerics = {});

}  // namespace foliated
