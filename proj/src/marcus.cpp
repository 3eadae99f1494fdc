#include "foliated/marcus.hpp"

#include "foliated/errors.hpp"

#include <algorithm>
#include <cmath>

namespace foliated {
namespace {

inline Vec rk4_step(DriftField const& f, Vec const& x, double dt)
{
    Vec const k1 = f(x);
    Vec const k2 = f(x + (0.5 * dt) * k1);
    Vec const k3 = f(x + (0.5 * dt) * k2);
    Vec const k4 = f(x + dt * k3);
    return x + (dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4)) / 6.0;
}

inline double merge_tolerance(double t)
{
    return 1e-12 * std::max(1.0, std::abs(t));
}

}  // namespace

Vec marcus_flow(JumpField const& field, Vec const& x, Vec const& z, int ode_steps)
{
    if (ode_steps < 1)
        throw PreconditionError("marcus_flow needs ode_steps >= 1");
    if (z.isZero(0.0))
        return x;

    double const h = 1.0 / ode_steps;
    Vec y = x;
    for (int i = 0; i < ode_steps; ++i)
    {
        Vec const k1 = field(y, z);
        Vec const k2 = field(y + (0.5 * h) * k1, z);
        Vec const k3 = field(y + (0.5 * h) * k2, z);
        Vec const k4 = field(y + h * k3, z);
        y += (h * (k1 + 2.0 * k2 + 2.0 * k3 + k4)) / 6.0;
        if (!y.allFinite())
            throw FlowDivergenceError((i + 1) * h);
    }
    return y;
}

FlowDiagnostics flow_difference_diagnostics(JumpField const& field, Vec const& x, Vec const& y,
                                            Vec const& z, int ode_steps)
{
    double const zn = z.norm();
    if (zn == 0.0)
        throw PreconditionError("flow diagnostics are undefined for z = 0");

    auto remainder = [&](Vec const& p) -> Vec {
        return marcus_flow(field, p, z, ode_steps) - p - field(p, z);
    };
    Vec const rx = remainder(x);

    FlowDiagnostics out;
    out.second_order_residual = rx.norm() / (zn * zn);
    double const dxy = (x - y).norm();
    if (dxy > 0.0)
        out.lipschitz_ratio = (rx - remainder(y)).norm() / (dxy * zn * zn);
    return out;
}

void MarcusProblem::validate() const
{
    if (!drift || !jump_field)
        throw PreconditionError("Marcus problem needs drift and jump field");
    if (!(horizon >= 0.0) || !std::isfinite(horizon))
        throw PreconditionError("horizon must be finite and nonnegative");
    if (!(grid_step > 0.0))
        throw PreconditionError("grid step must be positive");
    if (horizon > 0.0 && grid_step > horizon)
        throw PreconditionError("grid step exceeds horizon");
    if (ode_steps < 1)
        throw PreconditionError("ode_steps must be >= 1");
    if (initial_point.size() == 0 || !initial_point.allFinite())
        throw PreconditionError("initial point must be finite");
    if (!std::is_sorted(stop_times.begin(), stop_times.end())
        || std::adjacent_find(stop_times.begin(), stop_times.end()) != stop_times.end())
        throw PreconditionError("stop times must be strictly increasing");
}

std::size_t uniform_step_count(double horizon, double step)
{
    double const ratio = horizon / step;
    double const nearest = std::round(ratio);
    if (std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, ratio))
        return static_cast<std::size_t>(nearest);
    return static_cast<std::size_t>(std::floor(ratio));
}

std::optional<ExitRecord> integrate_each(MarcusProblem const& problem,
                                         RegionPredicate const& exit_region,
                                         PointVisitor const& visit)
{
    problem.validate();

    double const horizon = problem.horizon;
    double const step = problem.grid_step;
    std::size_t const n_steps = horizon > 0.0 ? uniform_step_count(horizon, step) : 0;
    bool const snapped = std::abs(static_cast<double>(n_steps) * step - horizon)
                         <= merge_tolerance(horizon);
    auto grid_time = [&](std::size_t k) {
        return (k == n_steps && snapped) ? horizon : static_cast<double>(k) * step;
    };

    auto const& events = problem.levy_path.events;
    auto const& stops = problem.stop_times;
    std::size_t next_grid = 1;
    std::size_t next_event = 0;
    std::size_t next_stop = 0;
    bool end_pending = !snapped && horizon > 0.0;

    while (next_event < events.size() && events[next_event].time <= 0.0)
        ++next_event;

    Vec x = problem.initial_point;
    Vec left = x;
    std::optional<ExitRecord> exit;
    if (exit_region && !exit_region(x))
        exit = ExitRecord{0.0, 0};

    PathPoint point;
    point.index = 0;
    point.time = 0.0;
    point.left_limit = &left;
    point.state = &x;
    point.grid_index = 0;
    while (next_stop < stops.size() && stops[next_stop] <= merge_tolerance(0.0))
        point.stop_index = next_stop++;
    if (visit)
        visit(point);

    double t = 0.0;
    std::size_t index = 0;
    double constexpr inf = std::numeric_limits<double>::infinity();
    for (;;)
    {
        double const tg = next_grid <= n_steps ? grid_time(next_grid) : (end_pending ? horizon : inf);
        double const te = next_event < events.size() && events[next_event].time <= horizon
                              ? events[next_event].time
                              : inf;
        double const ts = next_stop < stops.size() && stops[next_stop] <= horizon ? stops[next_stop]
                                                                                 : inf;
        double const t_next = std::min({tg, te, ts});
        if (t_next == inf)
            break;

        double const tol = merge_tolerance(t_next);
        bool const hit_event = te - t_next <= tol;
        bool const hit_grid = tg - t_next <= tol;
        bool const hit_stop = ts - t_next <= tol;
        // An exact jump time wins over a nearby grid or stop time.
        double const t_point = hit_event ? te : (hit_grid ? tg : ts);

        double const dt = t_point - t;
        if (dt > 0.0)
        {
            x = rk4_step(problem.drift, x, dt);
            if (!x.allFinite())
                throw NonFiniteDriftError(t_point);
        }
        left = x;
        t = t_point;
        ++index;

        point = PathPoint{};
        point.index = index;
        point.time = t;
        point.left_limit = &left;
        point.state = &x;
        if (hit_grid)
        {
            if (next_grid <= n_steps)
                point.grid_index = next_grid++;
            else
                end_pending = false;
        }
        if (hit_stop)
            point.stop_index = next_stop++;
        if (hit_event)
        {
            try
            {
                x = marcus_flow(problem.jump_field, left, events[next_event].jump, problem.ode_steps);
            }
            catch (FlowDivergenceError const& e)
            {
                throw FlowDivergenceError(e.sigma_reached(), next_event);
            }
            point.event_index = next_event++;
        }

        if (exit_region && !exit && !exit_region(x))
            exit = ExitRecord{t, index};
        if (visit)
            visit(point);
    }
    return exit;
}

SamplePath integrate(MarcusProblem const& problem, RegionPredicate const& exit_region)
{
    SamplePath path;
    std::size_t const expected = problem.horizon > 0.0
                                     ? uniform_step_count(problem.horizon, problem.grid_step)
                                           + problem.levy_path.events.size() + 2
                                     : 1;
    path.times.reserve(expected);
    path.states.reserve(expected);
    path.left_limits.reserve(expected);

    path.exit = integrate_each(problem, exit_region, [&](PathPoint const& p) {
        path.times.push_back(p.time);
        path.states.push_back(*p.state);
        path.left_limits.push_back(*p.left_limit);
        if (p.is_jump())
            path.jump_points.push_back(p.index);
    });
    return path;
}

}  // namespace foliated
