#pragma once

#include "foliated/levy.hpp"
#include "foliated/types.hpp"

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace foliated {

inline constexpr int default_ode_steps = 64;
inline constexpr double default_grid_step = 1e-3;

/*!
 * Time-one map of dY/dsigma = F(Y) z, Y(0) = x, by classical RK4 with
 * `ode_steps` uniform steps. Throws FlowDivergenceError on a non-finite stage.
 */
Vec marcus_flow(JumpField const& field, Vec const& x, Vec const& z,
                int ode_steps = default_ode_steps);

struct FlowDiagnostics
{
    //! |Phi(x) - x - F(x)z| / |z|^2
    double second_order_residual = 0.0;
    //! |R(x) - R(y)| / (|x - y| |z|^2) with R(x) = Phi(x) - x - F(x)z; 0 when x == y
    double lipschitz_ratio = 0.0;
};

/// Numerical check of the second-order remainder of the Marcus flow.
FlowDiagnostics flow_difference_diagnostics(JumpField const& field, Vec const& x, Vec const& y,
                                            Vec const& z, int ode_steps = default_ode_steps);

//---------------------------------------------------------------------------//
/*!
 * Marcus SDE on [0, horizon] driven by one fixed jump path.
 *
 * Between jumps the drift ODE is advanced by RK4 on the uniform grid
 * k * grid_step, refined by jump times and any requested stop times. At a
 * jump time the state is replaced by marcus_flow(jump_field, x-, dZ).
 */
struct MarcusProblem
{
    DriftField drift;
    JumpField jump_field;
    Vec initial_point;
    LevyPath levy_path;
    double horizon = 0.0;
    double grid_step = default_grid_step;
    int ode_steps = default_ode_steps;
    //! Extra times (strictly increasing) that must appear on the grid.
    std::vector<double> stop_times;

    void validate() const;
};

inline constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

/// One point of the integration grid as seen by a visitor.
struct PathPoint
{
    std::size_t index = 0;
    double time = 0.0;
    Vec const* left_limit = nullptr; //!< state just before `time`
    Vec const* state = nullptr;      //!< cadlag value at `time`
    std::size_t grid_index = npos;   //!< k when time == k * grid_step
    std::size_t event_index = npos;  //!< jump applied at this point
    std::size_t stop_index = npos;   //!< requested stop time hit here

    bool is_jump() const noexcept { return event_index != npos; }
};

struct ExitRecord
{
    double time = 0.0;
    std::size_t index = 0;
};

/// Recorded trajectory; at a jump, states[i] is post-jump and left_limits[i] pre-jump.
struct SamplePath
{
    std::vector<double> times;
    std::vector<Vec> states;
    std::vector<Vec> left_limits;
    std::vector<std::size_t> jump_points;
    std::optional<ExitRecord> exit;

    std::size_t size() const noexcept { return times.size(); }
};

using PointVisitor = std::function<void(PathPoint const&)>;

/// Number of uniform steps of size `step` covering [0, horizon]; snaps near-integers.
std::size_t uniform_step_count(double horizon, double step);

/*!
 * Integrate and stream every grid point to `visit`. The first point outside
 * `exit_region` (when given) is reported as the exit; integration continues.
 */
std::optional<ExitRecord> integrate_each(MarcusProblem const& problem,
                                         RegionPredicate const& exit_region,
                                         PointVisitor const& visit);

SamplePath integrate(MarcusProblem const& problem, RegionPredicate const& exit_region = {});

}  // namespace foliated
