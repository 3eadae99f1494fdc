#include "foliated/bihari.hpp"

#include "foliated/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>

namespace foliated {
namespace {

constexpr double picard_tolerance = 1e-12;
constexpr std::size_t picard_max_iterations = 10000;
constexpr double envelope_tolerance = 1e-9;
// Tighter targets stall the adaptive rule on rounding noise at some t.
constexpr double quadrature_tolerance = 1e-12;

double grid_time(BihariProblem const& problem, std::size_t i)
{
    return problem.T * static_cast<double>(i) / static_cast<double>(problem.m);
}

}  // namespace

void BihariProblem::validate() const
{
    if (!(p >= 2.0))
        throw PreconditionError("Bihari problem needs p >= 2");
    if (!(eps >= 0.0) || !(c > 0.0) || !(T > 0.0))
        throw PreconditionError("Bihari problem needs eps >= 0, c > 0 and T > 0");
    if (m < 10)
        throw PreconditionError("Bihari grid needs m >= 10");
    if (eps * T > smallness)
        throw SmallnessViolationError("eps T = " + std::to_string(eps * T)
                                      + " exceeds the smallness threshold "
                                      + std::to_string(smallness));
}

PachpatteCoefficients::PachpatteCoefficients(BihariProblem const& problem)
    : p_(problem.p), q_(problem.exponent()), ec_(problem.eps * problem.c)
{
}

double PachpatteCoefficients::a(double t) const
{
    return std::exp(ec_ * t);
}

double PachpatteCoefficients::e(double t) const
{
    return ec_ * std::pow(t, p_);
}

double PachpatteCoefficients::A(double t) const
{
    if (ec_ == 0.0 || t <= 0.0)
        return 0.0;
    auto const integrand = [this](double s) { return ec_ * std::pow(a(s) * e(s), q_); };
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, t, 15,
                                                                         quadrature_tolerance);
}

double PachpatteCoefficients::F(double x) const
{
    return p_ * std::pow(x, 1.0 / p_);
}

double PachpatteCoefficients::F_inverse(double y) const
{
    return std::pow(y, p_) / std::pow(p_, p_);
}

double PachpatteCoefficients::root_integral(double t) const
{
    if (ec_ == 0.0)
        return 0.0;
    // int_0^t ec exp(ec q s) ds
    return std::expm1(ec_ * q_ * t) / q_;
}

double PachpatteCoefficients::envelope(double t) const
{
    return a(t) * (e(t) + F_inverse(F(A(t)) + root_integral(t)));
}

double bound_shape(BihariProblem const& problem, double t)
{
    double const tp = std::pow(t, problem.p);
    return problem.eps * tp + tp * std::pow(problem.eps * t, problem.exponent());
}

double proof_constant(BihariProblem const& problem)
{
    problem.validate();
    if (problem.eps == 0.0)
        return 0.0;
    PachpatteCoefficients const coeffs(problem);
    double best = 0.0;
    for (std::size_t i = 1; i <= problem.m; ++i)
    {
        double const t = grid_time(problem, i);
        best = std::max(best, coeffs.envelope(t) / bound_shape(problem, t));
    }
    return best;
}

double corollary_bound(BihariProblem const& problem, double t, std::optional<double> constant)
{
    problem.validate();
    if (!(t >= 0.0 && t <= problem.T))
        throw PreconditionError("corollary bound evaluated outside [0, T]");
    double const C = constant ? *constant : proof_constant(problem);
    return C * bound_shape(problem, t);
}

MaximalSolution maximal_solution(BihariProblem const& problem)
{
    problem.validate();
    std::size_t const m = problem.m;
    double const ec = problem.eps * problem.c;
    double const q = problem.exponent();
    double const dt = problem.T / static_cast<double>(m);

    MaximalSolution out;
    out.t.resize(m + 1);
    std::vector<double> forcing(m + 1);
    for (std::size_t i = 0; i <= m; ++i)
    {
        out.t[i] = grid_time(problem, i);
        forcing[i] = ec * std::pow(out.t[i], problem.p);
    }
    out.psi = forcing;
    if (ec == 0.0)
        return out;

    auto integrand = [&](double psi) {
        return problem.drop_root_term ? psi : psi + std::pow(psi, q);
    };
    std::vector<double> next(m + 1);
    for (std::size_t iter = 1; iter <= picard_max_iterations; ++iter)
    {
        double integral = 0.0;
        double change = 0.0;
        next[0] = forcing[0];
        for (std::size_t i = 1; i <= m; ++i)
        {
            integral += 0.5 * dt * (integrand(out.psi[i - 1]) + integrand(out.psi[i]));
            next[i] = forcing[i] + ec * integral;
            change = std::max(change, std::abs(next[i] - out.psi[i]));
        }
        out.psi.swap(next);
        out.iterations = iter;
        if (change < picard_tolerance)
            return out;
    }
    throw NonConvergenceError("maximal solution did not converge in "
                              + std::to_string(picard_max_iterations) + " iterations");
}

DominanceReport verify_dominance(BihariProblem const& problem)
{
    MaximalSolution const sol = maximal_solution(problem);
    PachpatteCoefficients const coeffs(problem);
    std::size_t const n = sol.t.size();

    // Quadrature error allowance from a half-resolution solve, spread to odd nodes.
    BihariProblem coarse_problem = problem;
    coarse_problem.m = problem.m / 2;
    coarse_problem.T = problem.T * static_cast<double>(2 * coarse_problem.m)
                       / static_cast<double>(problem.m);
    std::vector<double> allowance(n, 0.0);
    if (coarse_problem.m >= 10 && problem.eps > 0.0)
    {
        MaximalSolution const coarse = maximal_solution(coarse_problem);
        for (std::size_t i = 0; i < coarse.psi.size(); ++i)
            allowance[2 * i] = std::abs(sol.psi[2 * i] - coarse.psi[i]);
        for (std::size_t i = 1; i < n; i += 2)
            allowance[i] = std::max(allowance[i - 1], i + 1 < n ? allowance[i + 1] : 0.0);
    }

    DominanceReport out;
    out.t = sol.t;
    out.psi = sol.psi;
    out.envelope.resize(n);
    out.bound.resize(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        double const t = sol.t[i];
        out.envelope[i] = coeffs.envelope(t);
        out.max_allowance = std::max(out.max_allowance, allowance[i]);
        if (sol.psi[i] > out.envelope[i] * (1.0 + envelope_tolerance) + allowance[i])
            throw DominanceFailureError(t, sol.psi[i], out.envelope[i]);
        if (out.envelope[i] > 0.0)
            out.max_envelope_ratio = std::max(out.max_envelope_ratio,
                                              (sol.psi[i] - allowance[i]) / out.envelope[i]);
        if (t > 0.0 && problem.eps > 0.0)
            out.fitted_constant
                = std::max(out.fitted_constant, sol.psi[i] / bound_shape(problem, t));
    }
    if (problem.eps > 0.0)
    {
        out.constant_at_T = sol.psi.back() / bound_shape(problem, problem.T);
        out.proof_constant = proof_constant(problem);
    }

    out.holds_with_constant_at_T = true;
    out.min_margin = 0.0;
    for (std::size_t i = 0; i < n; ++i)
    {
        double const shape = bound_shape(problem, sol.t[i]);
        out.bound[i] = out.fitted_constant * shape;
        double const margin = out.bound[i] - sol.psi[i];
        out.min_margin = i == 0 ? margin : std::min(out.min_margin, margin);
        if (sol.psi[i] > out.constant_at_T * shape)
            out.holds_with_constant_at_T = false;
    }
    return out;
}

}  // namespace foliated
