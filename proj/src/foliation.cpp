#include "foliated/foliation.hpp"

#include "foliated/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <utility>

namespace foliated {
namespace {

FoliationChart box_chart(int leaf_dim, int transversal_dim, double half_width)
{
    FoliationChart chart;
    chart.leaf_dim = leaf_dim;
    chart.transversal_dim = transversal_dim;
    chart.region_lower = Vec::Constant(transversal_dim, -half_width);
    chart.region_upper = Vec::Constant(transversal_dim, half_width);
    chart.validate();
    return chart;
}

double integrate_unit(auto&& f, double a, double b)
{
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-14);
}

// E cos(U) for the stationary law of dU = -U dt + dZ with symmetric
// uniform(-a, a) jumps at rate rho: log E exp(iU) = rho int_0^1 (sinc(a y) - 1) / y dy.
double stationary_cos_mean_uniform(double rho, double a)
{
    double const integral = integrate_unit(
        [a](double y) {
            if (y == 0.0)
                return 0.0;
            double const ay = a * y;
            return (std::sin(ay) / ay - 1.0) / y;
        },
        0.0, 1.0);
    return std::exp(rho * integral);
}

// E[(sin(xi/2) / (xi/2))^2] for xi ~ uniform(-a, a).
double mean_sinc_squared_uniform(double a)
{
    double const integral = integrate_unit(
        [](double z) {
            if (z == 0.0)
                return 1.0;
            double const s = std::sin(0.5 * z) / (0.5 * z);
            return s * s;
        },
        0.0, a);
    return integral / a;
}

Vec transversal_scalar(double value)
{
    Vec v(1);
    v[0] = value;
    return v;
}

LevyMeasureSpec make_spec(double rate, JumpLaw const& law, int dimension)
{
    LevyMeasureSpec spec{rate, law, dimension};
    spec.validate();
    return spec;
}

// Closed form of Q when k is constant or zero, shared by every system.
std::optional<AveragedField> trivial_Q(SystemParams const& params)
{
    if (params.perturbation == PerturbationKind::zero)
        return AveragedField([](Vec const&) { return transversal_scalar(0.0); });
    if (params.perturbation == PerturbationKind::constant)
    {
        double const kappa = params.kappa;
        return AveragedField([kappa](Vec const&) { return transversal_scalar(kappa); });
    }
    return std::nullopt;
}

// K = (0, ..., 0, k(x)) according to the perturbation kind.
DriftField vertical_field(int state_dim, SystemParams const& params,
                          std::function<double(Vec const&)> standard_k)
{
    switch (params.perturbation)
    {
    case PerturbationKind::zero:
        return [state_dim](Vec const&) { return Vec(Vec::Zero(state_dim)); };
    case PerturbationKind::constant: {
        double const kappa = params.kappa;
        return [state_dim, kappa](Vec const&) {
            Vec out = Vec::Zero(state_dim);
            out[state_dim - 1] = kappa;
            return out;
        };
    }
    case PerturbationKind::standard:
        break;
    }
    return [state_dim, k = std::move(standard_k)](Vec const& x) {
        Vec out = Vec::Zero(state_dim);
        out[state_dim - 1] = k(x);
        return out;
    };
}

TransversalJumpField linear_transversal_jump(double beta)
{
    return [beta](Vec const& v, Vec const& z) { return Vec(beta * z[0] * v); };
}

// Leaf: dU = -U dt + dZ on horizontal lines.
TestSystem make_ou_lines(std::string name, SystemParams const& params, bool nonlinear)
{
    TestSystem sys;
    sys.name = std::move(name);
    sys.params = params;
    sys.p = params.p;
    sys.chart = box_chart(1, 1, params.region_half_width);
    sys.nu = make_spec(params.jump_rate, params.jump_law, 1);
    sys.nu_prime = make_spec(params.transversal_rate, params.transversal_law, 1);
    sys.initial_point = make_vec({params.leaf_start, params.transversal_start});

    sys.fields.leaf_drift = [](Vec const& x) { return make_vec({-x[0], 0.0}); };
    sys.fields.leaf_jump = [](Vec const&, Vec const& z) { return make_vec({z[0], 0.0}); };
    sys.fields.transversal_jump = linear_transversal_jump(params.beta);
    sys.fields.leaf_noise_dim = 1;
    sys.fields.transversal_noise_dim = 1;
    sys.fields.lipschitz_budget = std::max(1.0, std::abs(params.beta));

    double const c0 = params.c0;
    if (!nonlinear)
    {
        sys.fields.perturbation = vertical_field(
            2, params, [c0](Vec const& x) { return x[0] * x[0] + c0 - x[1]; });
        // E U^2 = Var U + (E U)^2 with E U = rho m1 and Var U = rho m2 / 2.
        double const rho = params.jump_rate;
        double const m1 = law_mean(params.jump_law, 1)[0];
        double const m2 = law_component_second_moment(params.jump_law, 1, 0);
        double const stationary_u2 = 0.5 * rho * m2 + (rho * m1) * (rho * m1);
        sys.closed_form_Q = trivial_Q(params);
        if (!sys.closed_form_Q)
            sys.closed_form_Q = AveragedField(
                [stationary_u2, c0](Vec const& v) { return transversal_scalar(stationary_u2 + c0 - v[0]); });
    }
    else
    {
        sys.fields.perturbation = vertical_field(
            2, params, [c0](Vec const& x) { return std::cos(x[0] + x[1]) + c0 - x[1]; });
        sys.closed_form_Q = trivial_Q(params);
        // Symmetric stationary law: E cos(U + v) = cos(v) E cos(U).
        if (!sys.closed_form_Q)
            if (auto const* uniform = std::get_if<UniformLaw>(&params.jump_law))
            {
                double const phi = stationary_cos_mean_uniform(params.jump_rate, uniform->half_width);
                sys.closed_form_Q = AveragedField([phi, c0](Vec const& v) {
                    return transversal_scalar(std::cos(v[0]) * phi + c0 - v[0]);
                });
            }
    }
    return sys;
}

// Leaf R^2, damped rotation with v-dependent angular speed; Z = (z1, z2)
// translates along u1 and rotates by z2.
TestSystem make_rotation_coupled(SystemParams const& params)
{
    TestSystem sys;
    sys.name = "rotation_coupled";
    sys.params = params;
    sys.p = params.p;
    sys.chart = box_chart(2, 1, params.region_half_width);
    sys.nu = make_spec(params.jump_rate, params.jump_law, 2);
    sys.nu_prime = make_spec(params.transversal_rate, params.transversal_law, 1);
    sys.initial_point = make_vec({params.leaf_start, 0.0, params.transversal_start});

    sys.fields.leaf_drift = [](Vec const& x) {
        double const omega = 1.0 + x[2] * x[2];
        return make_vec({-x[0] - omega * x[1], -x[1] + omega * x[0], 0.0});
    };
    sys.fields.leaf_jump = [](Vec const& x, Vec const& z) {
        return make_vec({z[0] - z[1] * x[1], z[1] * x[0], 0.0});
    };
    sys.fields.transversal_jump = linear_transversal_jump(params.beta);
    sys.fields.leaf_noise_dim = 2;
    sys.fields.transversal_noise_dim = 1;
    sys.fields.lipschitz_budget = 2.0;

    double const c0 = params.c0;
    sys.fields.perturbation = vertical_field(3, params, [c0](Vec const& x) {
        return x[0] * x[0] + x[1] * x[1] + c0 - x[2];
    });

    sys.closed_form_Q = trivial_Q(params);
    // Drift contracts |u|^2 at rate 2, rotations preserve it, and a jump adds
    // z1^2 sinc^2(z2 / 2) on average, so E|u|^2 = rho E[z1^2] E[sinc^2(z2/2)] / 2.
    if (!sys.closed_form_Q)
        if (auto const* uniform = std::get_if<UniformLaw>(&params.jump_law))
        {
            double const a = uniform->half_width;
            double const stationary = 0.5 * params.jump_rate * (a * a / 3.0)
                                      * mean_sinc_squared_uniform(a);
            sys.closed_form_Q = AveragedField(
                [stationary, c0](Vec const& v) { return transversal_scalar(stationary + c0 - v[0]); });
        }
    return sys;
}

}  // namespace

Vec FoliationChart::lift(Vec const& dv) const
{
    Vec out = Vec::Zero(state_dim());
    out.tail(transversal_dim) = dv;
    return out;
}

bool FoliationChart::contains_transversal(Vec const& v) const
{
    for (int i = 0; i < transversal_dim; ++i)
        if (!(v[i] > region_lower[i] && v[i] < region_upper[i]))
            return false;
    return true;
}

void FoliationChart::validate() const
{
    if (leaf_dim < 1 || transversal_dim < 1 || state_dim() > max_dim)
        throw PreconditionError("chart dimensions out of range");
    if (region_lower.size() != transversal_dim || region_upper.size() != transversal_dim)
        throw PreconditionError("transversal region has the wrong dimension");
    if (!contains_transversal(Vec::Zero(transversal_dim)))
        throw PreconditionError("transversal region must be open and contain the origin");
}

std::vector<std::string> builtin_system_names()
{
    return {"ou_lines", "ou_lines_nonlinear_K", "rotation_coupled"};
}

TestSystem builtin_system(std::string const& name, SystemParams const& params)
{
    if (!(params.p >= 2.0))
        throw PreconditionError("moment exponent p must be >= 2");
    if (name == "ou_lines")
        return make_ou_lines(name, params, false);
    if (name == "ou_lines_nonlinear_K")
        return make_ou_lines(name, params, true);
    if (name == "rotation_coupled")
        return make_rotation_coupled(params);
    throw PreconditionError("unknown built-in system: " + name);
}

TangencyReport assert_leaf_tangency(VectorFieldSet const& fields, FoliationChart const& chart,
                                    std::size_t sample_count, RngStream& stream)
{
    if (sample_count < 1)
        throw PreconditionError("tangency check needs at least one sample");
    chart.validate();

    constexpr double probe_radius = 10.0;
    int const n = chart.leaf_dim;
    int const d = chart.transversal_dim;

    TangencyReport report;
    report.samples = sample_count;
    for (std::size_t s = 0; s < sample_count; ++s)
    {
        Vec x(chart.state_dim());
        for (int i = 0; i < n; ++i)
            x[i] = stream.uniform(-probe_radius, probe_radius);
        for (int i = 0; i < d; ++i)
        {
            double const lo = std::max(chart.region_lower[i], -probe_radius);
            double const hi = std::min(chart.region_upper[i], probe_radius);
            x[n + i] = stream.uniform(lo, hi);
        }
        Vec z(fields.leaf_noise_dim);
        for (int i = 0; i < z.size(); ++i)
            z[i] = stream.normal();

        report.max_drift_violation = std::max(
            report.max_drift_violation, fields.leaf_drift(x).tail(d).cwiseAbs().maxCoeff());
        report.max_jump_violation = std::max(
            report.max_jump_violation, fields.leaf_jump(x, z).tail(d).cwiseAbs().maxCoeff());
    }
    if (report.max_drift_violation > tangency_tolerance)
        throw TangencyViolationError("F0", report.max_drift_violation);
    if (report.max_jump_violation > tangency_tolerance)
        throw TangencyViolationError("F", report.max_jump_violation);
    return report;
}

double check_Q_lipschitz(TestSystem const& system, std::vector<Vec> const& v_grid,
                         AveragedField const& estimator)
{
    if (v_grid.size() < 3)
        throw PreconditionError("Lipschitz check needs at least three grid points");
    for (auto const& v : v_grid)
        if (!system.chart.contains_transversal(v))
            throw PreconditionError("Lipschitz grid point outside the transversal region");

    std::vector<Vec> values;
    values.reserve(v_grid.size());
    for (auto const& v : v_grid)
        values.push_back(estimator(v));

    double worst = 0.0;
    for (std::size_t i = 0; i < v_grid.size(); ++i)
        for (std::size_t j = i + 1; j < v_grid.size(); ++j)
        {
            double const dv = (v_grid[i] - v_grid[j]).norm();
            if (dv > 0.0)
                worst = std::max(worst, (values[i] - values[j]).norm() / dv);
        }
    return worst;
}

MarcusProblem unperturbed_problem(TestSystem const& system, Vec const& x0, LevyPath leaf_path,
                                  double horizon, NumericParams const& numerics)
{
    MarcusProblem problem;
    problem.drift = system.fields.leaf_drift;
    problem.jump_field = system.fields.leaf_jump;
    problem.initial_point = x0;
    problem.levy_path = std::move(leaf_path);
    problem.horizon = horizon;
    problem.grid_step = std::min(numerics.grid_step, horizon > 0.0 ? horizon : numerics.grid_step);
    problem.ode_steps = numerics.ode_steps;
    return problem;
}

MarcusProblem perturbed_problem(TestSystem const& system, double eps, Vec const& x0,
                                LevyPath stacked_path, double horizon,
                                NumericParams const& numerics)
{
    FoliationChart const chart = system.chart;
    VectorFieldSet const& f = system.fields;
    int const r = f.leaf_noise_dim;
    int const r_tilde = f.transversal_noise_dim;

    MarcusProblem problem;
    problem.drift = [f0 = f.leaf_drift, k = f.perturbation, eps](Vec const& x) {
        return Vec(f0(x) + eps * k(x));
    };
    problem.jump_field = [chart, r, r_tilde, leaf = f.leaf_jump,
                          transversal = f.transversal_jump](Vec const& x, Vec const& zeta) {
        Vec out = leaf(x, zeta.head(r));
        Vec const zt = zeta.tail(r_tilde);
        if (!zt.isZero(0.0))
            out += chart.lift(transversal(chart.project(x), zt));
        return out;
    };
    problem.initial_point = x0;
    problem.levy_path = std::move(stacked_path);
    problem.horizon = horizon;
    problem.grid_step = std::min(numerics.grid_step, horizon > 0.0 ? horizon : numerics.grid_step);
    problem.ode_steps = numerics.ode_steps;
    return problem;
}

LevyPath stack_paths(LevyPath const& leaf_path, int leaf_dim, LevyPath const& transversal_path,
                     int transversal_dim, double eps)
{
    if (!(eps > 0.0))
        throw PreconditionError("time scale eps must be positive");
    LevyPath out;
    out.horizon = std::max(leaf_path.horizon, transversal_path.horizon / eps);
    out.events.reserve(leaf_path.events.size() + transversal_path.events.size());

    auto leaf_it = leaf_path.events.begin();
    auto tr_it = transversal_path.events.begin();
    auto push_leaf = [&] {
        Vec zeta = Vec::Zero(leaf_dim + transversal_dim);
        zeta.head(leaf_dim) = leaf_it->jump;
        out.events.push_back({leaf_it->time, zeta});
        ++leaf_it;
    };
    auto push_transversal = [&] {
        Vec zeta = Vec::Zero(leaf_dim + transversal_dim);
        zeta.tail(transversal_dim) = tr_it->jump;
        out.events.push_back({tr_it->time / eps, zeta});
        ++tr_it;
    };
    // Ties are ordered leaf first.
    while (leaf_it != leaf_path.events.end() || tr_it != transversal_path.events.end())
    {
        if (tr_it == transversal_path.events.end()
            || (leaf_it != leaf_path.events.end() && leaf_it->time <= tr_it->time / eps))
            push_leaf();
        else
            push_transversal();
    }
    return out;
}

}  // namespace foliated
