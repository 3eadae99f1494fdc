#pragma once

#include "foliated/levy.hpp"
#include "foliated/marcus.hpp"
#include "foliated/rng.hpp"
#include "foliated/types.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace foliated {

//---------------------------------------------------------------------------//
/*!
 * Global product chart R^n x V. A state x = (u, v) lies on the leaf
 * pi^{-1}(v), where pi takes the last `transversal_dim` coordinates.
 */
struct FoliationChart
{
    int leaf_dim = 1;
    int transversal_dim = 1;
    Vec region_lower; //!< open box V = (lower, upper)
    Vec region_upper;

    int state_dim() const noexcept { return leaf_dim + transversal_dim; }
    Vec project(Vec const& x) const { return x.tail(transversal_dim); }
    /// Embed a transversal vector as a state-space vector with zero leaf part.
    Vec lift(Vec const& dv) const;
    bool contains_transversal(Vec const& v) const;
    bool contains_state(Vec const& x) const { return contains_transversal(project(x)); }

    void validate() const;
};

/// (v, z) -> K~(v) z, transversal part only.
using TransversalJumpField = std::function<Vec(Vec const&, Vec const&)>;
/// v -> Q(v)
using AveragedField = std::function<Vec(Vec const&)>;

struct VectorFieldSet
{
    DriftField leaf_drift;                    //!< F0, tangent to leaves
    JumpField leaf_jump;                      //!< (x, z) -> F(x) z, tangent to leaves
    DriftField perturbation;                  //!< K, unrestricted
    TransversalJumpField transversal_jump;    //!< (v, z~) -> K~(v) z~
    int leaf_noise_dim = 1;                   //!< r
    int transversal_noise_dim = 1;            //!< dimension of Z~
    double lipschitz_budget = 1.0;            //!< declared, not verified
};

/// Form of the transversal coefficient k in K = (0, k).
enum class PerturbationKind
{
    standard, //!< the system's own nonlinear coupling
    constant, //!< k == kappa
    zero      //!< K == 0
};

/// Tunable parameters of the built-in systems.
struct SystemParams
{
    double jump_rate = 1.0;
    JumpLaw jump_law = UniformLaw{1.0};
    double transversal_rate = 1.0;
    JumpLaw transversal_law = UniformLaw{1.0};
    double beta = 0.5;   //!< K~(v) z = beta v z
    double c0 = 0.0;     //!< offset in k
    PerturbationKind perturbation = PerturbationKind::standard;
    double kappa = 1.0;  //!< value of k for PerturbationKind::constant
    double region_half_width = 5.0;
    double leaf_start = 0.0;
    double transversal_start = 0.0;
    double p = 2.0;
};

struct TestSystem
{
    std::string name;
    FoliationChart chart;
    VectorFieldSet fields;
    LevyMeasureSpec nu;       //!< law of Z
    LevyMeasureSpec nu_prime; //!< law of Z~
    double p = 2.0;
    Vec initial_point;
    //! Analytic leafwise average of pi K, when derivable for the parameters.
    std::optional<AveragedField> closed_form_Q;
    SystemParams params;
};

std::vector<std::string> builtin_system_names();

/// Construct "ou_lines", "ou_lines_nonlinear_K" or "rotation_coupled".
TestSystem builtin_system(std::string const& name, SystemParams const& params = {});

struct TangencyReport
{
    std::size_t samples = 0;
    double max_drift_violation = 0.0;
    double max_jump_violation = 0.0;
};

inline constexpr double tangency_tolerance = 1e-14;

/// Probe F0 and F(.)z at random states; throws TangencyViolationError on a leak.
TangencyReport assert_leaf_tangency(VectorFieldSet const& fields, FoliationChart const& chart,
                                    std::size_t sample_count, RngStream& stream);

/// max |Q(v_i) - Q(v_j)| / |v_i - v_j| over grid pairs.
double check_Q_lipschitz(TestSystem const& system, std::vector<Vec> const& v_grid,
                         AveragedField const& estimator);

//---------------------------------------------------------------------------//
// Problem builders
//---------------------------------------------------------------------------//

struct NumericParams
{
    double grid_step = default_grid_step;
    int ode_steps = default_ode_steps;
    double burn_in_fraction = 0.1;
};

/// Unperturbed leaf dynamics dX = F0 dt + F(X) <> dZ.
MarcusProblem unperturbed_problem(TestSystem const& system, Vec const& x0, LevyPath leaf_path,
                                  double horizon, NumericParams const& numerics);

/*!
 * Perturbed dynamics in fast time: drift F0 + eps K, jump field (F, K~)
 * acting on the stacked path (z, z~). The transversal events must already be
 * placed at fast times.
 */
MarcusProblem perturbed_problem(TestSystem const& system, double eps, Vec const& x0,
                                LevyPath stacked_path, double horizon,
                                NumericParams const& numerics);

/*!
 * Merge leaf events (z, 0) with transversal events (0, z~) whose slow times s
 * are mapped to fast times s / eps.
 */
LevyPath stack_paths(LevyPath const& leaf_path, int leaf_dim, LevyPath const& transversal_path,
                     int transversal_dim, double eps);

}  // namespace foliated
