#include "foliated/config.hpp"

#include "foliated/csv.hpp"
#include "foliated/errors.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace foliated {
namespace {

std::string trim(std::string_view s)
{
    auto const first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
        return {};
    auto const last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::uint64_t parse_unsigned(std::string const& text)
{
    std::uint64_t value = 0;
    auto const [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw Error("not a nonnegative integer: '" + text + "'");
    return value;
}

bool parse_bool(std::string const& text)
{
    if (text == "true" || text == "yes" || text == "1")
        return true;
    if (text == "false" || text == "no" || text == "0")
        return false;
    throw Error("not a boolean: '" + text + "'");
}

struct LawKeys
{
    std::string name = "uniform";
    double half_width = 1.0;
    std::string atoms;
    double sigma = 1.0;
    double cutoff = 3.0;
    double alpha = 1.0;
    double lower = 0.1;
    double upper = 1.0;

    JumpLaw build() const
    {
        if (name == "uniform")
            return UniformLaw{half_width};
        if (name == "truncated_normal")
            return TruncatedNormalLaw{sigma, cutoff};
        if (name == "power")
            return SymmetricPowerLaw{alpha, lower, upper};
        if (name == "atoms")
        {
            // "z1 z2 : prob; ..." with whitespace-separated point components
            AtomLaw law;
            std::istringstream entries(atoms);
            std::string entry;
            while (std::getline(entries, entry, ';'))
            {
                if (trim(entry).empty())
                    continue;
                auto const colon = entry.find(':');
                if (colon == std::string::npos)
                    throw Error("atom '" + trim(entry) + "' lacks ': probability'");
                std::istringstream coords(entry.substr(0, colon));
                std::vector<double> point;
                std::string token;
                while (coords >> token)
                    point.push_back(parse_double(token));
                Vec z(static_cast<Eigen::Index>(point.size()));
                for (std::size_t i = 0; i < point.size(); ++i)
                    z[static_cast<Eigen::Index>(i)] = point[i];
                law.atoms.push_back({z, parse_double(trim(entry.substr(colon + 1)))});
            }
            if (law.atoms.empty())
                throw Error("atom law needs at least one atom");
            return law;
        }
        throw Error("unknown jump law '" + name + "'");
    }
};

using Setter = std::function<void(std::string const&)>;

struct Schema
{
    std::map<std::string, Setter> setters; // "section.key"
    LawKeys leaf_law;
    LawKeys transversal_law;
    bool lambda_given = false;
};

void add_law_keys(Schema& schema, std::string const& prefix, LawKeys& law)
{
    auto& s = schema.setters;
    s["system." + prefix + "law"] = [&law](auto const& v) { law.name = v; };
    s["system." + prefix + "half_width"] = [&law](auto const& v) { law.half_width = parse_double(v); };
    s["system." + prefix + "atoms"] = [&law](auto const& v) { law.atoms = v; };
    s["system." + prefix + "sigma"] = [&law](auto const& v) { law.sigma = parse_double(v); };
    s["system." + prefix + "cutoff"] = [&law](auto const& v) { law.cutoff = parse_double(v); };
    s["system." + prefix + "alpha"] = [&law](auto const& v) { law.alpha = parse_double(v); };
    s["system." + prefix + "lower"] = [&law](auto const& v) { law.lower = parse_double(v); };
    s["system." + prefix + "upper"] = [&law](auto const& v) { law.upper = parse_double(v); };
}

void build_schema(Schema& schema, RunConfig& cfg)
{
    auto& s = schema.setters;
    auto& ex = cfg.experiment;
    auto& sys = ex.system_params;

    s["experiment.system"] = [&](auto const& v) { ex.system = v; };
    s["experiment.p"] = [&](auto const& v) { ex.p = parse_double(v); };
    s["experiment.T"] = [&](auto const& v) { ex.T = parse_double(v); };
    s["experiment.eps_grid"] = [&](auto const& v) { ex.eps_grid = parse_double_list(v); };
    s["experiment.n_paths"] = [&](auto const& v) { ex.n_paths = parse_unsigned(v); };
    s["experiment.lambda_target"] = [&](auto const& v) {
        ex.lambda_target = parse_double(v);
        schema.lambda_given = true;
    };
    s["experiment.c"] = [&](auto const& v) { ex.c_constant = parse_double(v); };
    s["experiment.seed"] = [&](auto const& v) { ex.seed = parse_unsigned(v); };
    s["experiment.synthetic"] = [&](auto const& v) { ex.synthetic = parse_bool(v); };
    s["experiment.synthetic_amplitude"] = [&](auto const& v) { ex.synthetic_amplitude = parse_double(v); };
    s["experiment.synthetic_exponent"] = [&](auto const& v) { ex.synthetic_exponent = parse_double(v); };

    s["numerics.grid_step"] = [&](auto const& v) { ex.numerics.grid_step = parse_double(v); };
    s["numerics.ode_steps"] = [&](auto const& v) {
        ex.numerics.ode_steps = static_cast<int>(parse_unsigned(v));
    };
    s["numerics.burn_in_fraction"] = [&](auto const& v) { ex.numerics.burn_in_fraction = parse_double(v); };

    s["system.jump_rate"] = [&](auto const& v) { sys.jump_rate = parse_double(v); };
    s["system.transversal_rate"] = [&](auto const& v) { sys.transversal_rate = parse_double(v); };
    add_law_keys(schema, "jump_", schema.leaf_law);
    add_law_keys(schema, "transversal_", schema.transversal_law);
    s["system.beta"] = [&](auto const& v) { sys.beta = parse_double(v); };
    s["system.c0"] = [&](auto const& v) { sys.c0 = parse_double(v); };
    s["system.perturbation"] = [&](auto const& v) {
        if (v == "standard")
            sys.perturbation = PerturbationKind::standard;
        else if (v == "constant")
            sys.perturbation = PerturbationKind::constant;
        else if (v == "zero")
            sys.perturbation = PerturbationKind::zero;
        else
            throw Error("perturbation must be standard, constant or zero");
    };
    s["system.kappa"] = [&](auto const& v) { sys.kappa = parse_double(v); };
    s["system.region_half_width"] = [&](auto const& v) { sys.region_half_width = parse_double(v); };
    s["system.leaf_start"] = [&](auto const& v) { sys.leaf_start = parse_double(v); };
    s["system.transversal_start"] = [&](auto const& v) { sys.transversal_start = parse_double(v); };

    auto& q = ex.q_estimation;
    s["q_estimation.table"] = [&](auto const& v) { q.table_path = v; };
    s["q_estimation.grid_points"] = [&](auto const& v) { q.grid_points = parse_unsigned(v); };
    s["q_estimation.horizon"] = [&](auto const& v) { q.horizon = parse_double(v); };
    s["q_estimation.replications"] = [&](auto const& v) { q.replications = parse_unsigned(v); };

    s["eta0.times"] = [&](auto const& v) { ex.eta0.times = parse_double_list(v); };
    s["eta0.replications"] = [&](auto const& v) { ex.eta0.replications = parse_unsigned(v); };

    s["simulate.eps"] = [&](auto const& v) { cfg.simulate.eps = parse_double(v); };
    s["simulate.paths"] = [&](auto const& v) { cfg.simulate.paths = parse_unsigned(v); };

    s["estimate_q.v_grid"] = [&](auto const& v) { cfg.estimate_q.v_grid = parse_double_list(v); };

    s["decompose.eps"] = [&](auto const& v) { cfg.decompose.eps = parse_double(v); };
    s["decompose.realizations"] = [&](auto const& v) { cfg.decompose.realizations = parse_unsigned(v); };

    auto& b = cfg.bihari;
    s["bihari.p_values"] = [&](auto const& v) { b.p_values = parse_double_list(v); };
    s["bihari.eps_T_values"] = [&](auto const& v) { b.eps_T_values = parse_double_list(v); };
    s["bihari.c"] = [&](auto const& v) { b.c = parse_double(v); };
    s["bihari.T"] = [&](auto const& v) { b.T = parse_double(v); };
    s["bihari.m"] = [&](auto const& v) { b.m = parse_unsigned(v); };
    s["bihari.smallness"] = [&](auto const& v) { b.smallness = parse_double(v); };
}

}  // namespace

std::vector<double> parse_double_list(std::string const& text)
{
    std::vector<double> out;
    for (auto const& cell : split_csv_line(text))
    {
        std::string const t = trim(cell);
        if (t.empty())
            throw Error("empty entry in list '" + text + "'");
        out.push_back(parse_double(t));
    }
    return out;
}

RunConfig parse_config(std::string const& text)
{
    RunConfig cfg;
    cfg.source_text = text;
    Schema schema;
    build_schema(schema, cfg);

    std::map<std::string, std::size_t> seen; // key -> line
    std::istringstream in(text);
    std::string raw;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, raw))
    {
        ++line_no;
        std::string line = raw;
        if (auto const hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty() || line.front() == ';')
            continue;

        if (line.front() == '[')
        {
            if (line.back() != ']')
                throw ConfigError("malformed section header", line_no);
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            bool known = false;
            for (auto const& [key, setter] : schema.setters)
                known = known || key.rfind(section + ".", 0) == 0;
            if (!known)
                throw ConfigError("unknown section [" + section + "]", line_no, section);
            continue;
        }

        auto const eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected 'key = value'", line_no);
        std::string const key = trim(std::string_view(line).substr(0, eq));
        std::string const value = trim(std::string_view(line).substr(eq + 1));
        if (section.empty())
            throw ConfigError("key outside of any section", line_no, key);
        std::string const full = section + "." + key;

        auto const it = schema.setters.find(full);
        if (it == schema.setters.end())
            throw ConfigError("unknown key", line_no, full);
        if (auto const prev = seen.find(full); prev != seen.end())
            throw ConfigError("duplicate key (first set on line " + std::to_string(prev->second)
                                  + ")",
                              line_no, full);
        if (value.empty())
            throw ConfigError("empty value", line_no, full);
        try
        {
            it->second(value);
        }
        catch (Error const& e)
        {
            throw ConfigError(e.what(), line_no, full);
        }
        seen[full] = line_no;
    }

    for (auto const& [key, setter] : schema.setters)
        if (!seen.count(key))
            cfg.defaulted_keys.push_back(key);

    auto line_of = [&](std::string const& key) {
        auto const it = seen.find(key);
        return it == seen.end() ? std::size_t{0} : it->second;
    };

    auto& ex = cfg.experiment;
    try
    {
        ex.system_params.jump_law = schema.leaf_law.build();
    }
    catch (Error const& e)
    {
        throw ConfigError(e.what(), line_of("system.jump_law"), "system.jump_law");
    }
    try
    {
        ex.system_params.transversal_law = schema.transversal_law.build();
    }
    catch (Error const& e)
    {
        throw ConfigError(e.what(), line_of("system.transversal_law"), "system.transversal_law");
    }
    ex.system_params.p = ex.p;

    if (!(ex.p >= 2.0))
        throw ConfigError("p must be at least 2", line_of("experiment.p"), "experiment.p");
    double const ceiling = admissible_lambda_ceiling(ex.p);
    if (!schema.lambda_given)
        ex.lambda_target = 0.8 * ceiling;
    if (!(ex.lambda_target > 0.0 && ex.lambda_target < ceiling))
        throw ConfigError("lambda_target must lie in (0, (p-1)/p^2) = (0, "
                              + format_double(ceiling) + ")",
                          line_of("experiment.lambda_target"), "experiment.lambda_target");
    for (std::size_t i = 1; i < ex.eps_grid.size(); ++i)
        if (!(ex.eps_grid[i] < ex.eps_grid[i - 1]))
            throw ConfigError("eps_grid must be strictly decreasing", line_of("experiment.eps_grid"),
                              "experiment.eps_grid");
    try
    {
        ex.validate();
    }
    catch (PreconditionError const& e)
    {
        throw ConfigError(e.what());
    }
    return cfg;
}

RunConfig load_config(std::filesystem::path const& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot read config file " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

RunConfig default_config()
{
    return parse_config("");
}

}  // namespace foliated
