#include "foliated/averaging.hpp"

#include "foliated/errors.hpp"
#include "foliated/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace foliated {
namespace {

constexpr double time_tolerance = 1e-12;

// Replication mean about the first sample; equal samples give the sample exactly.
Vec shifted_mean(std::vector<Vec> const& samples)
{
    Vec const& first = samples.front();
    Vec acc = Vec::Zero(first.size());
    for (auto const& s : samples)
        acc += s - first;
    return first + acc / static_cast<double>(samples.size());
}

double max_standard_error(std::vector<Vec> const& samples, Vec const& mean)
{
    std::size_t const n = samples.size();
    if (n < 2)
        return 0.0;
    Vec sq = Vec::Zero(mean.size());
    for (auto const& s : samples)
        sq += (s - mean).cwiseAbs2();
    return std::sqrt(sq.maxCoeff() / static_cast<double>(n - 1) / static_cast<double>(n));
}

Vec leaf_point(TestSystem const& system, Vec const& v, std::optional<Vec> const& leaf_start)
{
    int const n = system.chart.leaf_dim;
    Vec x(system.chart.state_dim());
    if (leaf_start)
    {
        if (leaf_start->size() != n)
            throw PreconditionError("leaf start has the wrong dimension");
        x.head(n) = *leaf_start;
    }
    else
    {
        x.head(n) = system.initial_point.head(n);
    }
    x.tail(system.chart.transversal_dim) = v;
    return x;
}

// Trapezoidal integral of h - ref along a streamed path; intervals starting
// before `from` are skipped.
struct ShiftedIntegral
{
    std::function<Vec(Vec const&)> const& h;
    Vec ref;
    double from = 0.0;
    Vec acc;
    Vec prev_value;
    double prev_time = 0.0;

    ShiftedIntegral(std::function<Vec(Vec const&)> const& field, Vec const& x0, double start)
        : h(field), ref(field(x0)), from(start), acc(Vec::Zero(ref.size())), prev_value(ref)
    {
    }

    void add(PathPoint const& p)
    {
        if (p.index == 0)
            return;
        Vec const left = h(*p.left_limit);
        if (prev_time >= from - time_tolerance * std::max(1.0, from))
            acc += (0.5 * (p.time - prev_time)) * ((prev_value - ref) + (left - ref));
        prev_value = p.is_jump() ? h(*p.state) : left;
        prev_time = p.time;
    }

    Vec average(double length) const { return ref + acc / length; }
};

double fit_line(std::vector<double> const& x, std::vector<double> const& y, double& intercept,
                double& slope)
{
    double const n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    slope = sxx > 0.0 ? sxy / sxx : 0.0;
    intercept = my - slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
    {
        double const r = y[i] - intercept - slope * x[i];
        sse += r * r;
    }
    return sse;
}

}  // namespace

Observable vertical_perturbation_observable(TestSystem const& system)
{
    Observable h;
    h.id = "piK";
    h.field = [k = system.fields.perturbation, d = system.chart.transversal_dim](Vec const& x) {
        return Vec(k(x).tail(d));
    };
    h.known_average = system.closed_form_Q;
    return h;
}

Observable constant_observable(Vec value)
{
    Observable h;
    h.id = "constant";
    h.field = [value](Vec const&) { return value; };
    h.known_average = [value](Vec const&) { return value; };
    return h;
}

ErgodicEstimate estimate_Q(TestSystem const& system, Observable const& h, Vec const& v,
                           double time_horizon, std::size_t replications, StreamSeed const& seed,
                           NumericParams const& numerics, std::optional<Vec> leaf_start,
                           std::size_t threads)
{
    if (!system.chart.contains_transversal(v))
        throw PreconditionError("estimate_Q: v lies outside the transversal region");
    if (replications < 1)
        throw PreconditionError("estimate_Q needs at least one replication");
    if (!(numerics.burn_in_fraction >= 0.0 && numerics.burn_in_fraction < 1.0))
        throw PreconditionError("burn-in fraction must lie in [0, 1)");
    double const burn_in = numerics.burn_in_fraction * time_horizon;
    if (!(time_horizon > burn_in))
        throw PreconditionError("estimate_Q: time horizon must exceed the burn-in");

    Vec const x0 = leaf_point(system, v, leaf_start);
    std::vector<Vec> averages(replications);
    parallel_for(replications, threads, [&](std::size_t r) {
        RngStream stream = seed.stream(r, ProcessTag::leaf_noise);
        MarcusProblem problem = unperturbed_problem(
            system, x0, sample_levy_path(system.nu, time_horizon, stream), time_horizon, numerics);
        if (burn_in > 0.0)
            problem.stop_times = {burn_in};

        ShiftedIntegral integral(h.field, x0, burn_in);
        integrate_each(problem, {}, [&](PathPoint const& p) { integral.add(p); });
        averages[r] = integral.average(time_horizon - burn_in);
    });

    ErgodicEstimate out;
    out.v = v;
    out.h_id = h.id;
    out.value = shifted_mean(averages);
    out.time_horizon = time_horizon;
    out.replications = replications;
    out.std_error = max_standard_error(averages, out.value);
    return out;
}

double DecayFit::operator()(double t) const
{
    return kind == DecayKind::exponential ? amplitude * std::exp(-rate * t)
                                          : amplitude * std::pow(t, -rate);
}

std::optional<DecayFit> fit_decay(std::vector<double> const& times,
                                  std::vector<double> const& errors)
{
    std::vector<double> t, log_t, log_e;
    for (std::size_t i = 0; i < times.size() && i < errors.size(); ++i)
        if (times[i] > 0.0 && errors[i] > 0.0 && std::isfinite(errors[i]))
        {
            t.push_back(times[i]);
            log_t.push_back(std::log(times[i]));
            log_e.push_back(std::log(errors[i]));
        }
    if (t.size() < 2)
        return std::nullopt;

    double a_exp, b_exp, a_pow, b_pow;
    double const sse_exp = fit_line(t, log_e, a_exp, b_exp);
    double const sse_pow = fit_line(log_t, log_e, a_pow, b_pow);
    if (sse_exp < sse_pow)
        return DecayFit{DecayKind::exponential, std::exp(a_exp), -b_exp, sse_exp};
    return DecayFit{DecayKind::power, std::exp(a_pow), -b_pow, sse_pow};
}

MixingRateEstimate estimate_eta0(TestSystem const& system, Observable const& h, Vec const& v,
                                 std::vector<double> const& time_grid, std::size_t replications,
                                 double p, StreamSeed const& seed, NumericParams const& numerics,
                                 bool allow_reference_run, std::size_t threads)
{
    if (time_grid.empty())
        throw PreconditionError("estimate_eta0 needs a nonempty time grid");
    if (!(time_grid.front() > 0.0)
        || std::adjacent_find(time_grid.begin(), time_grid.end(), std::greater_equal<>())
               != time_grid.end())
        throw PreconditionError("estimate_eta0 time grid must be positive and increasing");
    if (!(p >= 2.0))
        throw PreconditionError("estimate_eta0 needs p >= 2");
    if (replications < 1)
        throw PreconditionError("estimate_eta0 needs at least one replication");
    if (!system.chart.contains_transversal(v))
        throw PreconditionError("estimate_eta0: v lies outside the transversal region");

    double const t_max = time_grid.back();
    MixingRateEstimate out;
    out.times = time_grid;
    if (h.known_average)
    {
        out.q_reference = (*h.known_average)(v);
    }
    else if (allow_reference_run)
    {
        // Independent streams placed after the ones used below.
        StreamSeed const reference_seed{seed.seed, seed.first_stream + replications};
        out.q_reference = estimate_Q(system, h, v, 10.0 * t_max, replications, reference_seed,
                                     numerics, std::nullopt, threads)
                              .value;
    }
    else
    {
        throw QUnavailableError("no leafwise average for observable '" + h.id
                                + "' and reference runs are disabled");
    }

    Vec const x0 = leaf_point(system, v, std::nullopt);
    std::size_t const n_times = time_grid.size();
    std::vector<std::vector<double>> powered(replications, std::vector<double>(n_times));
    parallel_for(replications, threads, [&](std::size_t r) {
        RngStream stream = seed.stream(r, ProcessTag::leaf_noise);
        MarcusProblem problem = unperturbed_problem(
            system, x0, sample_levy_path(system.nu, t_max, stream), t_max, numerics);
        problem.stop_times = time_grid;

        ShiftedIntegral integral(h.field, x0, 0.0);
        integrate_each(problem, {}, [&](PathPoint const& pt) {
            integral.add(pt);
            if (pt.stop_index != npos)
            {
                double const dev = (integral.average(pt.time) - out.q_reference).norm();
                powered[r][pt.stop_index] = std::pow(dev, p);
            }
        });
    });

    out.lp_errors.resize(n_times);
    out.std_errors.resize(n_times);
    double const n = static_cast<double>(replications);
    for (std::size_t j = 0; j < n_times; ++j)
    {
        double mean = 0.0;
        for (std::size_t r = 0; r < replications; ++r)
            mean += powered[r][j];
        mean /= n;
        double var = 0.0;
        for (std::size_t r = 0; r < replications; ++r)
            var += (powered[r][j] - mean) * (powered[r][j] - mean);
        double const se_mean = replications > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;

        out.lp_errors[j] = std::pow(mean, 1.0 / p);
        // Delta method for m -> m^(1/p).
        out.std_errors[j] = mean > 0.0 ? out.lp_errors[j] / (p * mean) * se_mean : 0.0;
    }
    out.fit = fit_decay(out.times, out.lp_errors);
    return out;
}

AveragedField as_field(QSource const& source)
{
    if (auto const* f = std::get_if<AveragedField>(&source))
        return *f;
    QTable const table = std::get<QTable>(source);
    return [table](Vec const& v) { return table.evaluate(v); };
}

SamplePath integrate_averaged(TestSystem const& system, QSource const& q_source, Vec const& v0,
                              double T, LevyPath const& transversal_path, double step,
                              int ode_steps)
{
    FoliationChart const& chart = system.chart;
    if (v0.size() != chart.transversal_dim || !chart.contains_transversal(v0))
        throw PreconditionError("averaged SDE must start inside the transversal region");

    MarcusProblem problem;
    problem.drift = as_field(q_source);
    problem.jump_field = system.fields.transversal_jump;
    problem.initial_point = v0;
    problem.levy_path = transversal_path;
    problem.horizon = T;
    problem.grid_step = T > 0.0 ? std::min(step, T) : step;
    problem.ode_steps = ode_steps;
    return integrate(problem, [&chart](Vec const& v) { return chart.contains_transversal(v); });
}

std::string to_string(TruncationCause cause)
{
    switch (cause)
    {
    case TruncationCause::horizon:
        return "horizon";
    case TruncationCause::tau_exit:
        return "tau_exit";
    case TruncationCause::sigma_exit:
        return "sigma_exit";
    }
    return "unknown";
}

CoupledErrorSample coupled_error(TestSystem const& system, double eps, double T,
                                 QSource const& q_source, std::uint64_t seed,
                                 std::uint64_t path_index, NumericParams const& numerics)
{
    if (!(eps > 0.0 && eps <= 1.0))
        throw PreconditionError("coupled_error needs eps in (0, 1]");
    if (!(T >= 0.0 && T <= 1.0))
        throw PreconditionError("coupled_error needs T in [0, 1]");

    FoliationChart const& chart = system.chart;
    int const r = system.fields.leaf_noise_dim;
    int const r_tilde = system.fields.transversal_noise_dim;
    Vec const x0 = system.initial_point;
    Vec const v0 = chart.project(x0);
    if (!chart.contains_transversal(v0))
        throw ExitAtStartError("initial point lies outside the foliated chart");

    double const fast_horizon = T / eps;
    double const fast_step = numerics.grid_step;
    double const slow_step = eps * fast_step;

    RngStream leaf_stream(seed, path_index, ProcessTag::leaf_noise);
    RngStream transversal_stream(seed, path_index, ProcessTag::transversal_noise);
    LevyPath const transversal_path = sample_levy_path(system.nu_prime, T, transversal_stream);
    LevyPath const leaf_path = sample_levy_path(system.nu, fast_horizon, leaf_stream);

    CoupledErrorSample out;
    out.eps = eps;
    out.T = T;
    if (T == 0.0)
        return out;

    std::size_t const n_grid = uniform_step_count(fast_horizon, fast_step);
    if (uniform_step_count(T, slow_step) != n_grid)
        throw Error("fast and slow grids disagree; choose T / (eps * h) closer to an integer");
    std::size_t const n_jumps = transversal_path.events.size();

    struct Trace
    {
        std::vector<Vec> grid;
        std::vector<Vec> jump_left;
        std::vector<Vec> jump_right;
        Vec end;
        std::optional<ExitRecord> exit;
    };
    auto make_trace = [&] {
        Trace t;
        t.grid.resize(n_grid + 1);
        t.jump_left.resize(n_jumps);
        t.jump_right.resize(n_jumps);
        return t;
    };

    // X^eps in fast time.
    Trace fast = make_trace();
    {
        MarcusProblem problem = perturbed_problem(
            system, eps, x0, stack_paths(leaf_path, r, transversal_path, r_tilde, eps),
            fast_horizon, numerics);
        problem.stop_times = {fast_horizon};
        auto const& events = problem.levy_path.events;
        std::size_t transversal_seen = 0;
        fast.exit = integrate_each(
            problem, [&chart](Vec const& x) { return chart.contains_state(x); },
            [&](PathPoint const& p) {
                if (p.grid_index != npos)
                    fast.grid[p.grid_index] = chart.project(*p.state);
                if (p.is_jump() && events[p.event_index].jump.head(r).isZero(0.0))
                {
                    fast.jump_left[transversal_seen] = chart.project(*p.left_limit);
                    fast.jump_right[transversal_seen] = chart.project(*p.state);
                    ++transversal_seen;
                }
                if (p.stop_index != npos)
                    fast.end = chart.project(*p.state);
            });
    }

    // w in slow time, same Z~ events.
    Trace slow = make_trace();
    {
        MarcusProblem problem;
        problem.drift = as_field(q_source);
        problem.jump_field = system.fields.transversal_jump;
        problem.initial_point = v0;
        problem.levy_path = transversal_path;
        problem.horizon = T;
        problem.grid_step = slow_step;
        problem.ode_steps = numerics.ode_steps;
        problem.stop_times = {T};
        slow.exit = integrate_each(
            problem, [&chart](Vec const& v) { return chart.contains_transversal(v); },
            [&](PathPoint const& p) {
                if (p.grid_index != npos)
                    slow.grid[p.grid_index] = *p.state;
                if (p.is_jump())
                {
                    slow.jump_left[p.event_index] = *p.left_limit;
                    slow.jump_right[p.event_index] = *p.state;
                }
                if (p.stop_index != npos)
                    slow.end = *p.state;
            });
    }

    double const tau_slow = fast.exit ? eps * fast.exit->time : T;
    double const sigma = slow.exit ? slow.exit->time : T;
    out.truncation_time = std::min({T, tau_slow, sigma});
    if (fast.exit && tau_slow <= out.truncation_time)
        out.truncation_cause = TruncationCause::tau_exit;
    else if (slow.exit && sigma <= out.truncation_time)
        out.truncation_cause = TruncationCause::sigma_exit;
    if (out.truncation_cause != TruncationCause::horizon && out.truncation_time == 0.0)
        throw ExitAtStartError("coupled processes exit at time 0");

    double const limit = out.truncation_time + time_tolerance * std::max(1.0, out.truncation_time);
    double sup = 0.0;
    for (std::size_t k = 0; k <= n_grid; ++k)
    {
        if (static_cast<double>(k) * slow_step > limit)
            break;
        sup = std::max(sup, (fast.grid[k] - slow.grid[k]).norm());
    }
    for (std::size_t j = 0; j < n_jumps; ++j)
    {
        if (transversal_path.events[j].time > limit)
            break;
        sup = std::max(sup, (fast.jump_left[j] - slow.jump_left[j]).norm());
        sup = std::max(sup, (fast.jump_right[j] - slow.jump_right[j]).norm());
    }
    if (T <= limit)
        sup = std::max(sup, (fast.end - slow.end).norm());
    out.sup_error = sup;
    return out;
}

}  // namespace foliated
