#include "foliated/runner.hpp"

#include "foliated/averaging.hpp"
#include "foliated/bihari.hpp"
#include "foliated/csv.hpp"
#include "foliated/errors.hpp"
#include "foliated/manifest.hpp"
#include "foliated/parallel.hpp"
#include "foliated/rate.hpp"

#include <json.hpp>

#include <fstream>
#include <functional>
#include <map>

namespace foliated {
namespace {

using json = nlohmann::ordered_json;

struct Context
{
    RunConfig const& config;
    std::filesystem::path dir;
    std::size_t threads;
    std::ostream& out;
    std::vector<std::string> files;

    CsvWriter csv(std::string const& name, std::vector<std::string> header)
    {
        files.push_back(name);
        return CsvWriter(dir / name, std::move(header));
    }

    void write_json(std::string const& name, json const& j)
    {
        files.push_back(name);
        std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
        if (!f)
            throw Error("cannot write " + (dir / name).string());
        f << j.dump(2) << '\n';
    }
};

json config_json(RunConfig const& cfg)
{
    auto const& ex = cfg.experiment;
    auto const& sys = ex.system_params;
    json j;
    j["system"] = ex.system;
    j["p"] = ex.p;
    j["T"] = ex.T;
    j["eps_grid"] = ex.eps_grid;
    j["n_paths"] = ex.n_paths;
    j["lambda_target"] = ex.lambda_target;
    j["c"] = ex.c_constant;
    j["seed"] = ex.seed;
    j["synthetic"] = ex.synthetic;
    j["numerics"] = {{"grid_step", ex.numerics.grid_step},
                     {"ode_steps", ex.numerics.ode_steps},
                     {"burn_in_fraction", ex.numerics.burn_in_fraction}};
    j["system_params"] = {{"jump_rate", sys.jump_rate},
                          {"jump_law", law_name(sys.jump_law)},
                          {"transversal_rate", sys.transversal_rate},
                          {"transversal_law", law_name(sys.transversal_law)},
                          {"beta", sys.beta},
                          {"c0", sys.c0},
                          {"kappa", sys.kappa},
                          {"region_half_width", sys.region_half_width},
                          {"leaf_start", sys.leaf_start},
                          {"transversal_start", sys.transversal_start}};
    return j;
}

TestSystem make_system(ExperimentConfig const& ex)
{
    SystemParams params = ex.system_params;
    params.p = ex.p;
    return builtin_system(ex.system, params);
}

int cmd_validate(Context& ctx)
{
    auto const& ex = ctx.config.experiment;
    TestSystem const system = make_system(ex);
    auto const report = validate_hypothesis1(system.nu, system.nu_prime, ex.p);
    RngStream stream(ex.seed, 0, ProcessTag::auxiliary);
    auto const tangency = assert_leaf_tangency(system.fields, system.chart, 1000, stream);

    json j;
    j["system"] = system.name;
    j["p"] = report.p;
    j["hypothesis1"] = {{"leaf_moment_p", report.leaf_moment},
                        {"transversal_moment_2p", report.transversal_moment},
                        {"pass", report.pass}};
    j["leaf_tangency"] = {{"samples", tangency.samples},
                          {"max_drift_violation", tangency.max_drift_violation},
                          {"max_jump_violation", tangency.max_jump_violation}};
    j["lambda_ceiling"] = admissible_lambda_ceiling(ex.p);
    j["lambda_target"] = ex.lambda_target;
    ctx.write_json("validate.json", j);

    ctx.out << "system " << system.name << ", p = " << format_double(ex.p) << '\n'
            << "hypothesis 1: " << (report.pass ? "pass" : "FAIL")
            << " (int |z|^p nu = " << format_double(report.leaf_moment)
            << ", int |z|^2p nu' = " << format_double(report.transversal_moment) << ")\n"
            << "leaf tangency: max violation "
            << format_double(std::max(tangency.max_drift_violation, tangency.max_jump_violation))
            << " over " << tangency.samples << " samples\n";
    return report.pass ? 0 : 1;
}

int cmd_simulate(Context& ctx)
{
    auto const& ex = ctx.config.experiment;
    auto const& sim = ctx.config.simulate;
    TestSystem const system = make_system(ex);
    QSource const q = resolve_q_source(system, ex, ctx.threads);

    auto coupled = ctx.csv("coupled.csv",
                           {"path", "eps", "sup_error", "truncation_cause", "truncation_time"});
    std::vector<std::string> header{"path", "t"};
    for (int i = 0; i < system.chart.state_dim(); ++i)
        header.push_back("x" + std::to_string(i));
    auto trajectory = ctx.csv("trajectory.csv", header);

    std::vector<CoupledErrorSample> samples(sim.paths);
    parallel_for(sim.paths, ctx.threads, [&](std::size_t i) {
        samples[i] = coupled_error(system, sim.eps, ex.T, q, ex.seed, i, ex.numerics);
    });
    for (std::size_t i = 0; i < sim.paths; ++i)
    {
        auto const& s = samples[i];
        coupled.cell(i).cell(s.eps).cell(s.sup_error).cell(to_string(s.truncation_cause))
            .cell(s.truncation_time);
        coupled.end_row();

        // Same streams as coupled_error, recorded in slow time.
        RngStream leaf_stream(ex.seed, i, ProcessTag::leaf_noise);
        RngStream transversal_stream(ex.seed, i, ProcessTag::transversal_noise);
        LevyPath const z_tilde = sample_levy_path(system.nu_prime, ex.T, transversal_stream);
        LevyPath const z = sample_levy_path(system.nu, ex.T / sim.eps, leaf_stream);
        auto const problem = perturbed_problem(
            system, sim.eps, system.initial_point,
            stack_paths(z, system.fields.leaf_noise_dim, z_tilde,
                        system.fields.transversal_noise_dim, sim.eps),
            ex.T / sim.eps, ex.numerics);
        integrate_each(problem, {}, [&](PathPoint const& p) {
            trajectory.cell(i).cell(sim.eps * p.time);
            for (int k = 0; k < p.state->size(); ++k)
                trajectory.cell((*p.state)[k]);
            trajectory.end_row();
        });
        ctx.out << "path " << i << ": sup error " << format_double(s.sup_error) << " ("
                << to_string(s.truncation_cause) << ")\n";
    }
    return 0;
}

int cmd_estimate_q(Context& ctx)
{
    auto const& ex = ctx.config.experiment;
    auto const& settings = ex.q_estimation;
    TestSystem const system = make_system(ex);
    Observable const h = vertical_perturbation_observable(system);

    std::vector<QTable::Row> rows;
    auto const& grid = ctx.config.estimate_q.v_grid;
    for (std::size_t i = 0; i < grid.size(); ++i)
    {
        StreamSeed const seed{ex.seed, i * settings.replications};
        auto const est = estimate_Q(system, h, make_vec({grid[i]}), settings.horizon,
                                    settings.replications, seed, ex.numerics, std::nullopt,
                                    ctx.threads);
        rows.push_back({grid[i], est.value[0], est.std_error, est.time_horizon, est.replications});
        ctx.out << "Q(" << format_double(grid[i]) << ") = " << format_double(est.value[0])
                << " +- " << format_double(est.std_error);
        if (system.closed_form_Q)
            ctx.out << "  (closed form " << format_double((*system.closed_form_Q)(make_vec({grid[i]}))[0])
                    << ")";
        ctx.out << '\n';
    }
    QTable const table(std::move(rows));
    ctx.files.push_back("q_table.csv");
    std::ofstream f(ctx.dir / "q_table.csv", std::ios::binary | std::ios::trunc);
    f << table.to_csv();
    return 0;
}

int cmd_eta0(Context& ctx)
{
    auto const& ex = ctx.config.experiment;
    TestSystem const system = make_system(ex);
    Observable h = vertical_perturbation_observable(system);
    auto const est = estimate_eta0(system, h, system.chart.project(system.initial_point),
                                   ex.eta0.times, ex.eta0.replications, ex.p,
                                   StreamSeed{ex.seed, 0}, ex.numerics, true, ctx.threads);
    auto csv = ctx.csv("eta0.csv", {"t", "lp_error", "std_error"});
    for (std::size_t i = 0; i < est.times.size(); ++i)
    {
        csv.cell(est.times[i]).cell(est.lp_errors[i]).cell(est.std_errors[i]);
        csv.end_row();
    }
    json j;
    if (est.fit)
    {
        j["kind"] = est.fit->kind == DecayKind::exponential ? "exponential" : "power";
        j["amplitude"] = est.fit->amplitude;
        j["rate"] = est.fit->rate;
        j["sse"] = est.fit->sse;
        ctx.out << "eta0 fit: " << j["kind"].get<std::string>() << ", amplitude "
                << format_double(est.fit->amplitude) << ", rate " << format_double(est.fit->rate)
                << '\n';
    }
    else
    {
        ctx.out << "eta0 fit unavailable (fewer than two positive errors)\n";
    }
    ctx.write_json("eta0_fit.json", j);
    return 0;
}

int cmd_rate(Context& ctx)
{
    auto const& ex = ctx.config.experiment;
    auto const result = run_rate_experiment(ex, ctx.threads);

    auto csv = ctx.csv("rate.csv", {"eps", "p", "T", "n_paths", "lp_sup_error", "std_error",
                                    "trunc_frac", "bound_value"});
    for (auto const& pt : result.points)
    {
        csv.cell(pt.eps).cell(result.p).cell(result.T).cell(result.n_paths).cell(pt.lp_sup_error)
            .cell(pt.std_error).cell(pt.trunc_frac).cell(pt.bound_value);
        csv.end_row();
    }

    json j;
    j["lambda_hat"] = result.lambda_hat;
    j["lambda_half_width_95"] = result.lambda_half_width;
    j["lambda_target"] = result.lambda_target;
    j["lambda_ceiling"] = result.lambda_ceiling;
    j["fitted_constant"] = result.fitted_constant;
    j["bound_constant"] = result.bound_constant;
    j["c"] = result.c_constant;
    j["eps_grid"] = ex.eps_grid;
    j["seed"] = ex.seed;
    j["n_paths"] = ex.n_paths;
    json sens = json::array();
    for (auto const& [c, C] : result.c_sensitivity)
        sens.push_back({{"c", c}, {"bound_constant", C}});
    j["c_sensitivity"] = sens;
    if (result.eta0_fit)
        j["eta0_fit"] = {{"kind", result.eta0_fit->kind == DecayKind::exponential ? "exponential"
                                                                                  : "power"},
                         {"amplitude", result.eta0_fit->amplitude},
                         {"rate", result.eta0_fit->rate}};
    ctx.write_json("rate_summary.json", j);

    ctx.out << "lambda_hat = " << format_double(result.lambda_hat) << " +- "
            << format_double(result.lambda_half_width) << " (95%)\n"
            << "ceiling (p-1)/p^2 = " << format_double(result.lambda_ceiling)
            << ", lambda_target = " << format_double(result.lambda_target) << '\n'
            << "fitted constant = " << format_double(result.fitted_constant)
            << ", bound constant = " << format_double(result.bound_constant) << '\n';
    return 0;
}

int cmd_decompose(Context& ctx)
{
    auto const& ex = ctx.config.experiment;
    auto const& settings = ctx.config.decompose;
    TestSystem const system = make_system(ex);
    QSource const q = resolve_q_source(system, ex, ctx.threads);

    std::vector<Decomposition> results(settings.realizations);
    parallel_for(settings.realizations, ctx.threads, [&](std::size_t i) {
        results[i] = decompose_error(system, settings.eps, ex.T, ex.c_constant, q, ex.seed, i,
                                     ex.numerics);
    });
    auto csv = ctx.csv("decompose.csv",
                       {"realization", "A1", "A2", "A3", "delta", "blocks", "truncated", "holds"});
    std::size_t violations = 0;
    for (std::size_t i = 0; i < results.size(); ++i)
    {
        auto const& d = results[i];
        violations += d.holds ? 0 : 1;
        csv.cell(i).cell(d.A1).cell(d.A2).cell(d.A3).cell(d.delta).cell(d.blocks)
            .cell(std::string_view(d.truncated ? "1" : "0"))
            .cell(std::string_view(d.holds ? "1" : "0"));
        csv.end_row();
    }
    ctx.out << "decomposition: " << violations << " violations of |delta| <= A1 + A2 + A3 in "
            << results.size() << " realizations\n";
    return violations == 0 ? 0 : 1;
}

int cmd_bihari(Context& ctx)
{
    auto const& b = ctx.config.bihari;
    auto csv = ctx.csv("bihari.csv", {"p", "eps_T", "eps", "c", "T", "fitted_constant",
                                      "constant_at_T", "proof_constant", "min_margin",
                                      "max_envelope_ratio", "holds_with_constant_at_T"});
    for (double p : b.p_values)
        for (double eps_T : b.eps_T_values)
        {
            BihariProblem problem;
            problem.p = p;
            problem.eps = eps_T / b.T;
            problem.c = b.c;
            problem.T = b.T;
            problem.m = b.m;
            problem.smallness = b.smallness;
            auto const report = verify_dominance(problem);
            csv.cell(p).cell(eps_T).cell(problem.eps).cell(b.c).cell(b.T)
                .cell(report.fitted_constant).cell(report.constant_at_T)
                .cell(report.proof_constant).cell(report.min_margin)
                .cell(report.max_envelope_ratio)
                .cell(std::string_view(report.holds_with_constant_at_T ? "1" : "0"));
            csv.end_row();
            ctx.out << "p = " << format_double(p) << ", eps T = " << format_double(eps_T)
                    << ": C = " << format_double(report.fitted_constant)
                    << ", max Psi*/envelope = " << format_double(report.max_envelope_ratio)
                    << '\n';
        }
    return 0;
}

std::map<std::string, std::function<int(Context&)>> const& commands()
{
    static std::map<std::string, std::function<int(Context&)>> const table{
        {"simulate", cmd_simulate}, {"estimate-q", cmd_estimate_q}, {"eta0", cmd_eta0},
        {"rate", cmd_rate},         {"decompose", cmd_decompose},   {"bihari", cmd_bihari},
        {"validate", cmd_validate}};
    return table;
}

}  // namespace

std::vector<std::string> subcommand_names()
{
    return {"simulate", "estimate-q", "eta0", "rate", "decompose", "bihari", "validate"};
}

RunConfig effective_config(RunOptions const& options)
{
    RunConfig cfg = options.config_path ? load_config(*options.config_path) : default_config();
    auto& ex = cfg.experiment;
    if (options.seed)
        ex.seed = *options.seed;
    if (options.paths)
    {
        ex.n_paths = *options.paths;
        cfg.simulate.paths = *options.paths;
        cfg.decompose.realizations = *options.paths;
    }
    if (options.eps)
    {
        ex.eps_grid = *options.eps;
        if (!options.eps->empty())
        {
            cfg.simulate.eps = options.eps->front();
            cfg.decompose.eps = options.eps->front();
        }
    }
    try
    {
        ex.validate();
    }
    catch (PreconditionError const& e)
    {
        throw ConfigError(std::string("after command-line overrides: ") + e.what());
    }
    return cfg;
}

int run(RunOptions const& options, std::ostream& out, std::ostream& err)
{
    auto const cmd = commands().find(options.subcommand);
    if (cmd == commands().end())
    {
        err << "unknown subcommand '" << options.subcommand << "'\n";
        return 2;
    }

    RunManifest manifest;
    manifest.subcommand = options.subcommand;
    manifest.version = version_string();
    manifest.started_utc = utc_timestamp();
    manifest.threads = resolve_thread_count(options.threads);

    std::error_code ec;
    std::filesystem::create_directories(options.out_dir, ec);
    if (ec)
    {
        err << "cannot create output directory " << options.out_dir.string() << ": "
            << ec.message() << '\n';
        return 1;
    }
    std::filesystem::remove(options.out_dir / failure_marker_name, ec);

    std::optional<RunConfig> config;
    std::vector<std::string> files;
    int status = 1;
    try
    {
        config = effective_config(options);
        manifest.seed = config->experiment.seed;
        manifest.config_text = config->source_text;
        manifest.effective_config_json = config_json(*config).dump();
        manifest.defaulted_keys = config->defaulted_keys;

        Context ctx{*config, options.out_dir, manifest.threads, out, {}};
        try
        {
            status = cmd->second(ctx);
        }
        catch (...)
        {
            files = ctx.files;
            throw;
        }
        files = ctx.files;
    }
    catch (std::exception const& e)
    {
        manifest.failed = true;
        manifest.error = e.what();
        err << "error: " << e.what() << '\n';
        std::ofstream marker(options.out_dir / failure_marker_name, std::ios::trunc);
        marker << e.what() << '\n';
        status = 1;
    }
    manifest.finished_utc = utc_timestamp();
    try
    {
        write_manifest(options.out_dir, manifest, files);
    }
    catch (std::exception const& e)
    {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return status;
}

}  // namespace foliated
