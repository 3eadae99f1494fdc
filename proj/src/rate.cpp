#include "foliated/rate.hpp"

#include "foliated/errors.hpp"
#include "foliated/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace foliated {
namespace {

// Stream ids far above any path index, so auxiliary runs never reuse path noise.
constexpr std::uint64_t eta0_stream_base = std::uint64_t{1} << 40;
constexpr std::uint64_t q_stream_base = std::uint64_t{1} << 41;

double eta0_at(std::optional<DecayFit> const& fit, double t)
{
    return fit ? (*fit)(t) : 0.0;
}

double bound_constant_for(std::vector<RatePoint> const& points, double T, double lambda, double c,
                          std::optional<DecayFit> const& eta0_fit)
{
    double best = 0.0;
    for (auto const& pt : points)
    {
        double const shape
            = T * (std::pow(pt.eps, lambda) + eta0_at(eta0_fit, c * T * std::abs(std::log(pt.eps))));
        best = std::max(best, pt.lp_sup_error / shape);
    }
    return best;
}

// Block-wise trapezoid of a field along the path, relative to the block's start value.
struct BlockIntegral
{
    Vec ref;
    Vec acc;
    Vec prev;

    void start(Vec const& value)
    {
        ref = value;
        acc = Vec::Zero(value.size());
        prev = value;
    }
    void add(double dt, Vec const& left)
    {
        acc += (0.5 * dt) * ((prev - ref) + (left - ref));
    }
    Vec total(double length) const { return length * ref + acc; }
};

}  // namespace

double admissible_lambda_ceiling(double p)
{
    if (!(p >= 2.0))
        throw PreconditionError("p must be at least 2");
    return (p - 1.0) / (p * p);
}

double c_lambda(double p, double lambda, double k2)
{
    double const ceiling = admissible_lambda_ceiling(p);
    if (!(lambda > 0.0 && lambda < ceiling))
        throw PreconditionError("lambda must lie in (0, (p-1)/p^2)");
    if (!(k2 > 0.0))
        throw PreconditionError("k2 must be positive");
    return (ceiling - lambda) / k2;
}

void ExperimentConfig::validate() const
{
    double const ceiling = admissible_lambda_ceiling(p);
    if (!(T > 0.0 && T <= 1.0))
        throw PreconditionError("T must lie in (0, 1]");
    if (eps_grid.empty())
        throw PreconditionError("eps grid is empty");
    for (std::size_t i = 0; i < eps_grid.size(); ++i)
    {
        if (!(eps_grid[i] > 0.0 && eps_grid[i] <= 1.0))
            throw PreconditionError("eps grid values must lie in (0, 1]");
        if (i > 0 && !(eps_grid[i] < eps_grid[i - 1]))
            throw PreconditionError("eps grid must be strictly decreasing");
    }
    if (n_paths < 2)
        throw PreconditionError("n_paths must be at least 2");
    if (!(lambda_target > 0.0 && lambda_target < ceiling))
        throw PreconditionError("lambda_target must lie in (0, (p-1)/p^2)");
    if (!(c_constant > 0.0))
        throw PreconditionError("c must be positive");
    if (!(numerics.grid_step > 0.0) || numerics.ode_steps < 1)
        throw PreconditionError("grid step and ode steps must be positive");
}

QSource resolve_q_source(TestSystem const& system, ExperimentConfig const& config,
                         std::size_t threads)
{
    if (system.closed_form_Q)
        return *system.closed_form_Q;
    auto const& settings = config.q_estimation;
    if (settings.table_path)
        return QTable::read(*settings.table_path);

    FoliationChart const& chart = system.chart;
    if (chart.transversal_dim != 1)
        throw QUnavailableError("Q tables are only estimated for one transversal dimension");
    if (settings.grid_points < 2)
        throw PreconditionError("Q table needs at least two grid points");

    // Endpoints pulled just inside the open region V.
    double const lower = chart.region_lower[0];
    double const width = chart.region_upper[0] - lower;
    double const inset = 1e-9 * width;
    Observable const h = vertical_perturbation_observable(system);
    std::vector<QTable::Row> rows;
    for (std::size_t i = 0; i < settings.grid_points; ++i)
    {
        double v = lower + width * static_cast<double>(i)
                               / static_cast<double>(settings.grid_points - 1);
        v = std::clamp(v, lower + inset, lower + width - inset);
        StreamSeed const seed{config.seed, q_stream_base + i * settings.replications};
        auto const est = estimate_Q(system, h, make_vec({v}), settings.horizon,
                                    settings.replications, seed, config.numerics, std::nullopt,
                                    threads);
        rows.push_back({v, est.value[0], est.std_error, est.time_horizon, est.replications});
    }
    return QTable(std::move(rows));
}

RateFitResult fit_rate(std::vector<RatePoint> points, ExperimentConfig const& config,
                       std::optional<DecayFit> eta0_fit)
{
    std::size_t const n = points.size();
    if (n < 3)
        throw PreconditionError("rate fit needs at least three eps values");
    bool weighted = true;
    for (auto const& pt : points)
    {
        if (!(pt.lp_sup_error > 0.0) || !std::isfinite(pt.lp_sup_error))
            throw DegenerateExperimentError("nonpositive L^p error at eps = "
                                            + std::to_string(pt.eps));
        if (!(pt.std_error > 0.0))
            weighted = false;
    }

    double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::vector<double> x(n), y(n), w(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        x[i] = std::log(points[i].eps);
        y[i] = std::log(points[i].lp_sup_error);
        // Var(ln err) ~ (se / err)^2
        w[i] = weighted ? std::pow(points[i].lp_sup_error / points[i].std_error, 2) : 1.0;
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
        sxx += w[i] * x[i] * x[i];
        sxy += w[i] * x[i] * y[i];
    }
    double const det = sw * sxx - sx * sx;
    if (!(det > 0.0))
        throw DegenerateExperimentError("eps grid gives a singular rate fit");

    RateFitResult out;
    out.lambda_hat = (sw * sxy - sx * sy) / det;
    out.intercept = (sy - out.lambda_hat * sx) / sw;

    double chi2 = 0.0;
    for (std::size_t i = 0; i < n; ++i)
    {
        double const r = y[i] - out.intercept - out.lambda_hat * x[i];
        chi2 += w[i] * r * r;
    }
    double const dispersion = chi2 / static_cast<double>(n - 2);
    double const scale = weighted ? std::max(1.0, dispersion) : dispersion;
    out.lambda_half_width = 1.96 * std::sqrt(scale * sw / det);

    out.points = std::move(points);
    out.p = config.p;
    out.T = config.T;
    out.n_paths = config.n_paths;
    out.fitted_constant = std::exp(out.intercept) / config.T;
    out.lambda_target = config.lambda_target;
    out.lambda_ceiling = admissible_lambda_ceiling(config.p);
    out.c_constant = config.c_constant;
    out.eta0_fit = eta0_fit;
    out.bound_constant = bound_constant_for(out.points, config.T, config.lambda_target,
                                            config.c_constant, eta0_fit);
    for (auto& pt : out.points)
        pt.bound_value = out.bound_constant * config.T
                         * (std::pow(pt.eps, config.lambda_target) + pt.eta0_value);
    for (double factor : {0.5, 1.0, 2.0})
    {
        double const c = factor * config.c_constant;
        out.c_sensitivity.emplace_back(
            c, bound_constant_for(out.points, config.T, config.lambda_target, c, eta0_fit));
    }
    return out;
}

RateFitResult run_rate_experiment(ExperimentConfig const& config, std::size_t threads)
{
    config.validate();
    double const c = config.c_constant;
    double const T = config.T;

    if (config.synthetic)
    {
        std::vector<RatePoint> points;
        for (double eps : config.eps_grid)
        {
            RatePoint pt;
            pt.eps = eps;
            pt.lp_sup_error = config.synthetic_amplitude * std::pow(eps, config.synthetic_exponent);
            points.push_back(pt);
        }
        return fit_rate(std::move(points), config, std::nullopt);
    }

    SystemParams params = config.system_params;
    params.p = config.p;
    TestSystem const system = builtin_system(config.system, params);
    QSource const q_source = resolve_q_source(system, config, threads);

    Observable h = vertical_perturbation_observable(system);
    if (!h.known_average)
    {
        h.known_average = as_field(q_source);
    }
    auto const eta0 = estimate_eta0(system, h, system.chart.project(system.initial_point),
                                    config.eta0.times, config.eta0.replications, config.p,
                                    StreamSeed{config.seed, eta0_stream_base}, config.numerics,
                                    false, threads);

    std::size_t const n_eps = config.eps_grid.size();
    std::size_t const n_paths = config.n_paths;
    std::vector<CoupledErrorSample> samples(n_eps * n_paths);
    std::vector<char> exit_at_start(samples.size(), 0);
    parallel_for(samples.size(), threads, [&](std::size_t task) {
        std::size_t const e = task / n_paths;
        std::size_t const path = task % n_paths;
        try
        {
            samples[task] = coupled_error(system, config.eps_grid[e], T, q_source, config.seed,
                                          path, config.numerics);
        }
        catch (ExitAtStartError const&)
        {
            exit_at_start[task] = 1;
            samples[task].truncation_cause = TruncationCause::tau_exit;
        }
    });

    std::vector<RatePoint> points;
    for (std::size_t e = 0; e < n_eps; ++e)
    {
        double const eps = config.eps_grid[e];
        std::size_t zero_time = 0, truncated = 0;
        std::vector<double> powered(n_paths);
        for (std::size_t i = 0; i < n_paths; ++i)
        {
            auto const& s = samples[e * n_paths + i];
            zero_time += static_cast<std::size_t>(exit_at_start[e * n_paths + i]);
            if (s.truncation_cause != TruncationCause::horizon)
                ++truncated;
            powered[i] = std::pow(s.sup_error, config.p);
        }
        if (zero_time == n_paths)
            throw DegenerateExperimentError("every path is truncated at time 0 for eps = "
                                            + std::to_string(eps));

        double mean = 0.0;
        for (double v : powered)
            mean += v;
        mean /= static_cast<double>(n_paths);
        double var = 0.0;
        for (double v : powered)
            var += (v - mean) * (v - mean);
        double const se_mean = std::sqrt(var / static_cast<double>(n_paths - 1)
                                         / static_cast<double>(n_paths));

        RatePoint pt;
        pt.eps = eps;
        pt.lp_sup_error = std::pow(mean, 1.0 / config.p);
        pt.std_error = mean > 0.0 ? pt.lp_sup_error / (config.p * mean) * se_mean : 0.0;
        pt.trunc_frac = static_cast<double>(truncated) / static_cast<double>(n_paths);
        pt.eta0_value = eta0_at(eta0.fit, c * T * std::abs(std::log(eps)));
        points.push_back(pt);
    }
    return fit_rate(std::move(points), config, eta0.fit);
}

PartitionScheme partition(double eps, double c, double T)
{
    if (!(eps > 0.0 && eps < 1.0))
        throw PreconditionError("partition needs eps in (0, 1)");
    if (!(c > 0.0) || !(T > 0.0))
        throw PreconditionError("partition needs c > 0 and T > 0");
    PartitionScheme out;
    out.eps = eps;
    out.c = c;
    out.T = T;
    double const log_eps = std::log(eps);
    out.delta = -c * T * log_eps;
    out.N = static_cast<std::size_t>(std::floor(1.0 / (c * eps * std::abs(log_eps))));
    return out;
}

Decomposition decompose_error(TestSystem const& system, double eps, double T, double c,
                              QSource const& q_source, std::uint64_t seed,
                              std::uint64_t path_index, NumericParams const& numerics)
{
    PartitionScheme const part = partition(eps, c, T);
    FoliationChart const& chart = system.chart;
    Vec const x0 = system.initial_point;
    if (!chart.contains_state(x0))
        throw ExitAtStartError("initial point lies outside the foliated chart");

    std::size_t const n_blocks = part.N + 1;
    double const fast_end = part.point(n_blocks);

    RngStream leaf_stream(seed, path_index, ProcessTag::leaf_noise);
    RngStream transversal_stream(seed, path_index, ProcessTag::transversal_noise);
    LevyPath const transversal_path
        = sample_levy_path(system.nu_prime, eps * fast_end, transversal_stream);
    LevyPath const leaf_path = sample_levy_path(system.nu, fast_end, leaf_stream);

    DriftField const h = vertical_perturbation_observable(system).field;
    AveragedField const Q = as_field(q_source);

    MarcusProblem problem
        = perturbed_problem(system, eps, x0,
                            stack_paths(leaf_path, system.fields.leaf_noise_dim, transversal_path,
                                        system.fields.transversal_noise_dim, eps),
                            fast_end, numerics);
    for (std::size_t n = 1; n <= n_blocks; ++n)
        problem.stop_times.push_back(part.point(n));

    // Per block: start state, start time, length, and integrals of h and Q o pi.
    std::vector<Vec> block_start{x0};
    std::vector<double> block_time{0.0};
    std::vector<double> block_length;
    std::vector<Vec> integral_h, integral_q;

    BlockIntegral ih, iq;
    ih.start(h(x0));
    iq.start(Q(chart.project(x0)));
    double prev_time = 0.0;
    bool done = false;
    Decomposition out;

    auto close_block = [&](double t) {
        double const length = t - block_time.back();
        block_length.push_back(length);
        integral_h.push_back(ih.total(length));
        integral_q.push_back(iq.total(length));
    };

    integrate_each(problem, {}, [&](PathPoint const& p) {
        if (done || p.index == 0)
            return;
        Vec const& left = *p.left_limit;
        double const dt = p.time - prev_time;
        Vec const h_left = h(left);
        Vec const v_left = chart.project(left);
        bool const inside = chart.contains_transversal(v_left);
        Vec const q_left = inside ? Q(v_left) : iq.prev;
        ih.add(dt, h_left);
        iq.add(dt, q_left);
        prev_time = p.time;

        if (!inside || !chart.contains_state(*p.state))
        {
            // Blocks end at the first exit from the chart.
            close_block(p.time);
            out.truncated = true;
            done = true;
            return;
        }
        ih.prev = p.is_jump() ? h(*p.state) : h_left;
        iq.prev = p.is_jump() ? Q(chart.project(*p.state)) : q_left;
        if (p.stop_index != npos)
        {
            close_block(p.time);
            if (p.stop_index + 1 == n_blocks)
            {
                done = true;
                return;
            }
            block_start.push_back(*p.state);
            block_time.push_back(p.time);
            ih.start(h(*p.state));
            iq.start(Q(chart.project(*p.state)));
        }
    });
    out.blocks = block_length.size();

    int const d = chart.transversal_dim;
    Vec A1 = Vec::Zero(d), A2 = Vec::Zero(d), A3 = Vec::Zero(d), delta = Vec::Zero(d);
    for (std::size_t n = 0; n < out.blocks; ++n)
    {
        double const length = block_length[n];
        double const t_n = block_time[n];
        Vec const q_start = Q(chart.project(block_start[n]));

        // Frozen leaf flow from X^eps_{t_n}, driven by the same Z increments.
        Vec frozen = length * h(block_start[n]);
        if (length > 0.0)
        {
            LevyPath shifted;
            shifted.horizon = length;
            for (auto const& ev : leaf_path.events)
                if (ev.time > t_n && ev.time <= t_n + length)
                    shifted.events.push_back({ev.time - t_n, ev.jump});
            NumericParams block_numerics = numerics;
            block_numerics.grid_step = std::min(numerics.grid_step, length);
            BlockIntegral jf;
            jf.start(h(block_start[n]));
            double prev = 0.0;
            integrate_each(unperturbed_problem(system, block_start[n], std::move(shifted), length,
                                               block_numerics),
                           {}, [&](PathPoint const& p) {
                               if (p.index == 0)
                                   return;
                               Vec const left = h(*p.left_limit);
                               jf.add(p.time - prev, left);
                               jf.prev = p.is_jump() ? h(*p.state) : left;
                               prev = p.time;
                           });
            frozen = jf.total(length);
        }

        A1 += eps * (integral_h[n] - frozen);
        A2 += eps * (frozen - length * q_start);
        A3 += eps * (length * q_start - integral_q[n]);
        delta += eps * (integral_h[n] - integral_q[n]);
    }
    out.A1 = A1.norm();
    out.A2 = A2.norm();
    out.A3 = A3.norm();
    out.delta = delta.norm();
    double const sum = out.A1 + out.A2 + out.A3;
    out.holds = out.delta <= sum + 1e-12 * (1.0 + sum);
    return out;
}

}  // namespace foliated
