#include "foliated/levy.hpp"

#include "foliated/errors.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace foliated {
namespace {

template<class... Ts>
struct overloaded : Ts...
{
    using Ts::operator()...;
};

bool is_even_integer(double q)
{
    return q >= 0 && std::floor(q) == q && std::fmod(q, 2.0) == 0.0;
}

// E|xi|^q for one scalar component of a product law.
double uniform_component_moment(double a, double q)
{
    return std::pow(a, q) / (q + 1.0);
}

double truncated_normal_component_moment(double sigma, double cutoff, double q)
{
    double const x = cutoff * cutoff / (2.0 * sigma * sigma);
    double const mass = std::erf(cutoff / (sigma * std::numbers::sqrt2));
    return std::pow(sigma, q) * std::pow(2.0, q / 2.0)
           * boost::math::tgamma_lower((q + 1.0) / 2.0, x)
           / (std::sqrt(std::numbers::pi) * mass);
}

// int_lo^hi z^(s-1) dz
double power_integral(double s, double lo, double hi)
{
    if (s == 0.0)
        return std::log(hi / lo);
    return (std::pow(hi, s) - std::pow(lo, s)) / s;
}

double power_law_moment(SymmetricPowerLaw const& law, double q)
{
    return power_integral(q - law.alpha, law.lower, law.upper)
           / power_integral(-law.alpha, law.lower, law.upper);
}

// E (sum_i xi_i^2)^k for i.i.d. components with E xi^(2j) = component(2j).
template<class ComponentMoment>
double product_even_moment(int dimension, int k, ComponentMoment component)
{
    std::vector<double> single(k + 1);
    for (int j = 0; j <= k; ++j)
        single[j] = component(2.0 * j);

    // Binomial convolution over components.
    std::vector<double> acc(k + 1, 0.0);
    acc[0] = 1.0;
    for (int dim = 0; dim < dimension; ++dim)
    {
        std::vector<double> next(k + 1, 0.0);
        for (int total = 0; total <= k; ++total)
        {
            double binom = 1.0;
            for (int j = 0; j <= total; ++j)
            {
                next[total] += binom * single[j] * acc[total - j];
                binom = binom * (total - j) / (j + 1);
            }
        }
        acc = std::move(next);
    }
    return acc[k];
}

template<class ComponentMoment>
double product_law_moment(int dimension, double order, ComponentMoment component,
                          std::string const& name)
{
    if (dimension == 1)
        return component(order);
    if (!is_even_integer(order))
    {
        std::ostringstream os;
        os << "no closed-form moment of order " << order << " for " << name
           << " law in dimension " << dimension << " (even integer orders only)";
        throw UnsupportedMomentError(os.str());
    }
    return product_even_moment(dimension, static_cast<int>(order / 2), component);
}

double sample_truncated_normal(TruncatedNormalLaw const& law, RngStream& stream)
{
    for (;;)
    {
        double const x = law.sigma * stream.normal();
        if (std::abs(x) <= law.cutoff)
            return x;
    }
}

}  // namespace

std::string law_name(JumpLaw const& law)
{
    return std::visit(overloaded{[](UniformLaw const&) { return std::string("uniform"); },
                                 [](AtomLaw const&) { return std::string("atoms"); },
                                 [](TruncatedNormalLaw const&) {
                                     return std::string("truncated_normal");
                                 },
                                 [](SymmetricPowerLaw const&) {
                                     return std::string("symmetric_power");
                                 }},
                      law);
}

void LevyMeasureSpec::validate() const
{
    if (!(rate > 0.0) || !std::isfinite(rate))
        throw PreconditionError("Levy measure rate must be positive and finite");
    if (dimension < 1 || dimension > max_dim)
        throw PreconditionError("jump dimension out of range");

    std::visit(
        overloaded{
            [](UniformLaw const& u) {
                if (!(u.half_width > 0.0) || !std::isfinite(u.half_width))
                    throw PreconditionError("uniform half width must be positive");
            },
            [this](AtomLaw const& a) {
                if (a.atoms.empty())
                    throw PreconditionError("atom law needs at least one atom");
                double total = 0.0;
                for (auto const& atom : a.atoms)
                {
                    if (atom.point.size() != dimension)
                        throw PreconditionError("atom dimension does not match the measure dimension");
                    if (!(atom.probability >= 0.0))
                        throw PreconditionError("atom probability must be nonnegative");
                    if (atom.point.norm() == 0.0)
                        throw PreconditionError("Levy measure may not charge the origin");
                    total += atom.probability;
                }
                if (std::abs(total - 1.0) > 1e-12)
                    throw PreconditionError("atom probabilities must sum to 1");
            },
            [](TruncatedNormalLaw const& t) {
                if (!(t.sigma > 0.0) || !(t.cutoff > 0.0))
                    throw PreconditionError("truncated normal needs sigma, cutoff > 0");
            },
            [this](SymmetricPowerLaw const& s) {
                if (dimension != 1)
                    throw PreconditionError("symmetric power law is one-dimensional");
                if (!(s.lower > 0.0) || !(s.upper > s.lower) || !(s.alpha > 0.0))
                    throw PreconditionError("symmetric power law needs 0 < lower < upper");
            }},
        law);
}

std::size_t LevyPath::count_events(double a, double b) const
{
    return static_cast<std::size_t>(
        std::count_if(events.begin(), events.end(), [=](JumpEvent const& e) {
            return e.time > a && e.time <= b;
        }));
}

Vec sample_jump(JumpLaw const& law, int dimension, RngStream& stream)
{
    Vec z(dimension);
    do
    {
        std::visit(
            overloaded{
                [&](UniformLaw const& u) {
                    for (int i = 0; i < dimension; ++i)
                        z[i] = stream.uniform(-u.half_width, u.half_width);
                },
                [&](AtomLaw const& a) {
                    double const u = stream.uniform_open();
                    double cumulative = 0.0;
                    z = a.atoms.back().point;
                    for (auto const& atom : a.atoms)
                    {
                        cumulative += atom.probability;
                        if (u < cumulative)
                        {
                            z = atom.point;
                            break;
                        }
                    }
                },
                [&](TruncatedNormalLaw const& t) {
                    for (int i = 0; i < dimension; ++i)
                        z[i] = sample_truncated_normal(t, stream);
                },
                [&](SymmetricPowerLaw const& s) {
                    double const lo = std::pow(s.lower, -s.alpha);
                    double const hi = std::pow(s.upper, -s.alpha);
                    double const magnitude
                        = std::pow(lo - stream.uniform_open() * (lo - hi), -1.0 / s.alpha);
                    z[0] = stream.uniform_open() < 0.5 ? -magnitude : magnitude;
                }},
            law);
    } while (z.norm() == 0.0);
    return z;
}

LevyPath sample_levy_path(LevyMeasureSpec const& spec, double horizon, RngStream& stream)
{
    if (!(horizon >= 0.0) || !std::isfinite(horizon))
        throw PreconditionError("Levy path horizon must be finite and nonnegative");
    spec.validate();

    LevyPath path;
    path.horizon = horizon;
    if (horizon == 0.0)
        return path;

    double t = 0.0;
    for (;;)
    {
        t += stream.exponential(spec.rate);
        if (t > horizon)
            break;
        path.events.push_back({t, sample_jump(spec.law, spec.dimension, stream)});
    }
    return path;
}

double law_abs_moment(JumpLaw const& law, int dimension, double order)
{
    return std::visit(
        overloaded{
            [&](UniformLaw const& u) {
                return product_law_moment(
                    dimension, order,
                    [&](double q) { return uniform_component_moment(u.half_width, q); },
                    "uniform");
            },
            [&](AtomLaw const& a) {
                double sum = 0.0;
                for (auto const& atom : a.atoms)
                    sum += atom.probability * std::pow(atom.point.norm(), order);
                return sum;
            },
            [&](TruncatedNormalLaw const& t) {
                return product_law_moment(
                    dimension, order,
                    [&](double q) {
                        return truncated_normal_component_moment(t.sigma, t.cutoff, q);
                    },
                    "truncated_normal");
            },
            [&](SymmetricPowerLaw const& s) { return power_law_moment(s, order); }},
        law);
}

Vec law_mean(JumpLaw const& law, int dimension)
{
    Vec mean = Vec::Zero(dimension);
    if (auto const* atoms = std::get_if<AtomLaw>(&law))
    {
        for (auto const& atom : atoms->atoms)
            mean += atom.probability * atom.point;
    }
    return mean;
}

double law_component_second_moment(JumpLaw const& law, int dimension, int component)
{
    if (component < 0 || component >= dimension)
        throw PreconditionError("component index out of range");
    return std::visit(
        overloaded{
            [](UniformLaw const& u) { return uniform_component_moment(u.half_width, 2.0); },
            [&](AtomLaw const& a) {
                double sum = 0.0;
                for (auto const& atom : a.atoms)
                    sum += atom.probability * atom.point[component] * atom.point[component];
                return sum;
            },
            [](TruncatedNormalLaw const& t) {
                return truncated_normal_component_moment(t.sigma, t.cutoff, 2.0);
            },
            [](SymmetricPowerLaw const& s) { return power_law_moment(s, 2.0); }},
        law);
}

double moment(LevyMeasureSpec const& spec, double order)
{
    if (!(order >= 1.0) || !std::isfinite(order))
        throw PreconditionError("moment order must be >= 1");
    spec.validate();
    return spec.rate * law_abs_moment(spec.law, spec.dimension, order);
}

Hypothesis1Report validate_hypothesis1(LevyMeasureSpec const& leaf_spec,
                                       LevyMeasureSpec const& transversal_spec,
                                       double p)
{
    if (!(p >= 2.0))
        throw PreconditionError("moment exponent p must be >= 2");
    Hypothesis1Report report;
    report.p = p;
    report.leaf_moment = moment(leaf_spec, p);
    report.transversal_moment = moment(transversal_spec, 2.0 * p);
    report.pass = std::isfinite(report.leaf_moment) && std::isfinite(report.transversal_moment);
    return report;
}

TruncationResult truncate_small_jumps(PowerLevyDensity const& density, double cutoff)
{
    if (!(density.alpha > 0.0 && density.alpha < 2.0))
        throw PreconditionError("power Levy density needs alpha in (0, 2)");
    if (!(density.scale > 0.0))
        throw PreconditionError("power Levy density needs a positive scale");
    if (!(cutoff > 0.0 && cutoff < density.max_jump))
        throw PreconditionError("truncation cutoff must lie in (0, max_jump)");

    TruncationResult result;
    // Both signs contribute, hence the factor 2.
    result.spec.rate = 2.0 * density.scale * power_integral(-density.alpha, cutoff, density.max_jump);
    result.spec.dimension = 1;
    result.spec.law = SymmetricPowerLaw{density.alpha, cutoff, density.max_jump};
    result.discarded_second_moment
        = 2.0 * density.scale * std::pow(cutoff, 2.0 - density.alpha) / (2.0 - density.alpha);
    return result;
}

}  // namespace foliated
