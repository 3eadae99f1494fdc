// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include "foliated/averaging.hpp"
#include "foliated/bihari.hpp"
#include "foliated/config.hpp"
#include "foliated/errors.hpp"
#include "foliated/foliation.hpp"
#include "foliated/marcus.hpp"
#include "foliated/parallel.hpp"
#include "foliated/rate.hpp"
#include "foliated/runner.hpp"

#include "oracles.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace foliated;
namespace fs = std::filesystem;

namespace {

struct Outcome
{
    bool pass = false;
    std::string detail;
};

std::string fmt(double x)
{
    std::ostringstream s;
    s.precision(4);
    s << x;
    return s.str();
}

bool run_criterion(std::string const& id, double limit_seconds,
                   std::function<Outcome()> const& body)
{
    auto const start = std::chrono::steady_clock::now();
    Outcome out;
    try
    {
        out = body();
    }
    catch (std::exception const& e)
    {
        out = {false, std::string("exception: ") + e.what()};
    }
    double const secs
        = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool const in_time = limit_seconds <= 0 || secs < limit_seconds;
    bool const pass = out.pass && in_time;
    std::cout << id << ' ' << (pass ? "PASS" : "FAIL") << "  " << out.detail << "  [" << fmt(secs)
              << " s";
    if (limit_seconds > 0)
        std::cout << (in_time ? " < " : " >= ") << limit_seconds << " s";
    std::cout << "]" << std::endl;
    return pass;
}

std::size_t threads()
{
    return resolve_thread_count();
}

Outcome leaf_invariance()
{
    NumericParams numerics;
    numerics.grid_step = 1e-2;
    double const horizon = 10.0;
    std::size_t const n_paths = 1000;
    std::ostringstream detail;
    bool pass = true;
    for (std::string const name : {"ou_lines", "rotation_coupled"})
    {
        SystemParams params;
        params.transversal_start = 0.3;
        auto const sys = builtin_system(name, params);
        double const v0 = sys.chart.project(sys.initial_point)[0];
        std::vector<double> worst(n_paths, 0.0);
        std::vector<std::size_t> jumps(n_paths, 0);
        parallel_for(n_paths, threads(), [&](std::size_t i) {
            RngStream stream(101, i, ProcessTag::leaf_noise);
            auto path = sample_levy_path(sys.nu, horizon, stream);
            jumps[i] = path.events.size();
            integrate_each(unperturbed_problem(sys, sys.initial_point, std::move(path), horizon,
                                               numerics),
                           {}, [&](PathPoint const& p) {
                               worst[i] = std::max(
                                   {worst[i], std::abs(sys.chart.project(*p.state)[0] - v0),
                                    std::abs(sys.chart.project(*p.left_limit)[0] - v0)});
                           });
        });
        double const sup = *std::max_element(worst.begin(), worst.end());
        std::size_t total_jumps = 0;
        for (auto j : jumps)
            total_jumps += j;
        pass = pass && sup == 0.0 && total_jumps > 0;
        detail << name << " sup|dv| = " << sup << " (" << total_jumps << " jumps); ";
    }
    return {pass, detail.str()};
}

Outcome marcus_flow_oracle()
{
    // F(x) z = z J x, flow exp(z J).
    JumpField const rotation = [](Vec const& x, Vec const& z) {
        return make_vec({-z[0] * x[1], z[0] * x[0]});
    };
    double const pi = std::acos(-1.0);
    double flow_error = 0.0;
    double worst_z = 0.0;
    for (int i = 1; i <= 32; ++i)
    {
        double const zn = pi * i / 32.0;
        for (double sign : {1.0, -1.0})
        {
            Vec const x = make_vec({0.6, -0.8});
            Vec const y = marcus_flow(rotation, x, make_vec({sign * zn}), 64);
            auto const E = oracle::expm({{{0.0, -sign * zn}, {sign * zn, 0.0}}});
            double const ex = E[0][0] * x[0] + E[0][1] * x[1];
            double const ey = E[1][0] * x[0] + E[1][1] * x[1];
            double const err = std::hypot(y[0] - ex, y[1] - ey);
            if (err > flow_error)
            {
                flow_error = err;
                worst_z = zn;
            }
        }
    }

    // Raw second-order residual |Phi(x) - x - F(x) z| under z-halving.
    std::vector<double> lz, lr;
    Vec const x = make_vec({0.6, -0.8});
    for (double zn = 1.0; zn > 1.0 / 128; zn /= 2)
    {
        auto const d = flow_difference_diagnostics(rotation, x, x, make_vec({zn}));
        lz.push_back(std::log(zn));
        lr.push_back(std::log(d.second_order_residual * zn * zn));
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lz.size(); ++i)
    {
        mx += lz[i];
        my += lr[i];
    }
    mx /= static_cast<double>(lz.size());
    my /= static_cast<double>(lz.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lz.size(); ++i)
    {
        sxy += (lz[i] - mx) * (lr[i] - my);
        sxx += (lz[i] - mx) * (lz[i] - mx);
    }
    double const slope = sxy / sxx;
    bool const pass = flow_error < 1e-8 && std::abs(slope - 2.0) <= 0.2;
    return {pass, "max flow error " + fmt(flow_error) + " at |z| = " + fmt(worst_z)
                      + " (need < 1e-8); residual slope " + fmt(slope)};
}

Outcome ergodic_average()
{
    auto const sys = builtin_system("ou_lines");
    Observable h;
    h.id = "u2";
    h.field = [](Vec const& x) { return make_vec({x[0] * x[0]}); };
    std::size_t const reps = 64;
    double const horizon = 1e3;
    auto const est = estimate_Q(sys, h, make_vec({0.0}), horizon, reps, {2024, 0}, {},
                                std::nullopt, threads());

    double sum = 0, sq = 0;
    for (std::size_t r = 0; r < reps; ++r)
    {
        double const m = oracle::ou_time_average_u2(1.0, 1.0, horizon, 0.1 * horizon, 5000 + r);
        sum += m;
        sq += m * m;
    }
    double const sim = sum / static_cast<double>(reps);
    double const sim_se
        = std::sqrt((sq / static_cast<double>(reps) - sim * sim) / static_cast<double>(reps - 1));
    double const ode = oracle::ou_second_moment_ode(1.0, 1.0 / 3.0, 30.0);

    double const value = est.value[0];
    double const combined = std::hypot(est.std_error, sim_se);
    bool const pass = std::abs(value - 1.0 / 6.0) <= 4 * combined
                      && std::abs(value - sim) <= 4 * combined && std::abs(ode - 1.0 / 6.0) < 1e-4;
    return {pass, "Q = " + fmt(value) + " +- " + fmt(est.std_error) + ", stationary 1/6, ODE "
                      + fmt(ode) + ", independent sim " + fmt(sim) + " +- " + fmt(sim_se)};
}

ExperimentConfig shipped_experiment()
{
    return load_config(FOLIATED_CONFIG_DIR "/default.ini").experiment;
}

Outcome averaging_property()
{
    ExperimentConfig config = shipped_experiment();
    config.p = 2;
    config.T = 1;
    config.eps_grid = {0.2, 0.1, 0.05, 0.025};
    config.n_paths = 200;
    auto const base = run_rate_experiment(config, threads());

    bool monotone = true;
    for (std::size_t i = 1; i < base.points.size(); ++i)
    {
        auto const& a = base.points[i - 1];
        auto const& b = base.points[i];
        if (b.lp_sup_error > a.lp_sup_error + 4 * std::hypot(a.std_error, b.std_error))
            monotone = false;
    }
    bool const positive = base.lambda_hat - base.lambda_half_width > 0;

    config.eps_grid.push_back(0.0125);
    auto const extended = run_rate_experiment(config, threads());
    double const ratio = extended.bound_constant / base.bound_constant;
    bool const stable = ratio >= 0.5 && ratio <= 2.0;

    std::ostringstream detail;
    detail << "(a) errors";
    for (auto const& pt : base.points)
        detail << ' ' << fmt(pt.lp_sup_error);
    detail << (monotone ? " nonincreasing" : " NOT nonincreasing") << "; (b) lambda_hat = "
           << fmt(base.lambda_hat) << " +- " << fmt(base.lambda_half_width)
           << "; (c) C = " << fmt(base.bound_constant) << " -> " << fmt(extended.bound_constant)
           << " (ratio " << fmt(ratio) << ")";
    return {monotone && positive && stable, detail.str()};
}

Outcome exact_cancellation()
{
    SystemParams params;
    params.perturbation = PerturbationKind::constant;
    params.kappa = 0.7;
    params.beta = 0.0;
    auto const sys = builtin_system("ou_lines", params);
    std::vector<double> const eps_grid{0.2, 0.1, 0.05, 0.025, 0.0125};
    std::size_t const paths = 20;
    std::vector<double> sup(eps_grid.size() * paths);
    parallel_for(sup.size(), threads(), [&](std::size_t i) {
        sup[i] = coupled_error(sys, eps_grid[i / paths], 1.0, *sys.closed_form_Q, 7, i % paths)
                     .sup_error;
    });
    double const worst = *std::max_element(sup.begin(), sup.end());
    return {worst < 1e-8, "max sup_error " + fmt(worst) + " over " + std::to_string(sup.size())
                              + " coupled paths"};
}

Outcome decomposition_identity()
{
    ExperimentConfig const config = shipped_experiment();
    SystemParams params = config.system_params;
    params.p = config.p;
    auto const sys = builtin_system(config.system, params);
    QSource const q = resolve_q_source(sys, config, threads());
    std::size_t const n = 100;
    std::vector<char> holds(n, 0);
    std::vector<char> truncated(n, 0);
    parallel_for(n, threads(), [&](std::size_t i) {
        auto const d = decompose_error(sys, 0.1, config.T, config.c_constant, q, config.seed, i,
                                       config.numerics);
        holds[i] = d.holds;
        truncated[i] = d.truncated;
    });
    auto const violations = static_cast<std::size_t>(std::count(holds.begin(), holds.end(), 0));
    auto const cut = static_cast<std::size_t>(std::count(truncated.begin(), truncated.end(), 1));
    return {violations == 0, std::to_string(violations) + " violations in " + std::to_string(n)
                                 + " realizations (" + std::to_string(cut) + " truncated)"};
}

Outcome bihari_dominance()
{
    double c_min = 1e300, c_max = 0.0, identity_error = 0.0;
    std::size_t pointwise_failures = 0;
    for (double p : {2.0, 3.0, 4.0})
        for (double eps_T : {0.01, 0.05, 0.1})
        {
            BihariProblem problem;
            problem.p = p;
            problem.T = 1.0;
            problem.eps = eps_T / problem.T;
            auto const report = verify_dominance(problem);
            for (std::size_t i = 0; i < report.t.size(); ++i)
                if (report.psi[i] > corollary_bound(problem, report.t[i], report.fitted_constant))
                    ++pointwise_failures;
            c_min = std::min(c_min, report.fitted_constant);
            c_max = std::max(c_max, report.fitted_constant);

            PachpatteCoefficients const k(problem);
            for (double t : {0.0, 0.25, 0.5, 1.0})
                identity_error = std::max(identity_error,
                                          std::abs(k.a(t) - std::exp(problem.eps * problem.c * t)));
            for (double x : {1e-8, 1e-3, 0.5, 1.0, 42.0})
                identity_error
                    = std::max(identity_error, std::abs(k.F(k.F_inverse(x)) - x) / std::max(1.0, x));
        }
    bool const pass = pointwise_failures == 0 && c_max / c_min <= 10.0 && identity_error < 1e-10;
    return {pass, std::to_string(pointwise_failures) + " pointwise failures; fitted C in ["
                      + fmt(c_min) + ", " + fmt(c_max) + "]; identity error "
                      + fmt(identity_error)};
}

std::string slurp(fs::path const& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome reproducibility()
{
    fs::path const root = fs::temp_directory_path() / "foliated_acceptance_repro";
    fs::remove_all(root);
    std::vector<std::size_t> const thread_counts{1, 4};
    std::vector<std::string> csv;
    for (std::size_t t : thread_counts)
    {
        RunOptions options;
        options.subcommand = "rate";
        options.config_path = FOLIATED_CONFIG_DIR "/default.ini";
        options.out_dir = root / ("threads_" + std::to_string(t));
        options.threads = t;
        std::ostringstream out, err;
        if (run(options, out, err) != 0)
            return {false, "rate run failed: " + err.str()};
        csv.push_back(slurp(options.out_dir / "rate.csv"));
    }
    bool const same = !csv[0].empty() && csv[0] == csv[1];
    return {same, std::string("rate.csv at 1 and 4 threads ")
                      + (same ? "byte-identical" : "DIFFER") + " (" + std::to_string(csv[0].size())
                      + " bytes)"};
}

}  // namespace

int main()
{
    bool all = true;
    all &= run_criterion("AC1", 30, leaf_invariance);
    all &= run_criterion("AC2", 5, marcus_flow_oracle);
    all &= run_criterion("AC3", 120, ergodic_average);
    all &= run_criterion("AC4", 1200, averaging_property);
    all &= run_criterion("AC5", 60, exact_cancellation);
    all &= run_criterion("AC6", 300, decomposition_identity);
    all &= run_criterion("AC7", 60, bihari_dominance);
    all &= run_criterion("AC8", 0, reproducibility);
    return all ? 0 : 1;
}
