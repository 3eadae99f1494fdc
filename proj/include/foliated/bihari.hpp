#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace foliated {

/*!
 * Integral inequality Psi(t) <= eps c t^p + eps c int_0^t (Psi + Psi^((p-1)/p)) ds
 * on [0, T], discretized on m uniform intervals.
 */
struct BihariProblem
{
    double p = 2.0;
    double eps = 0.01;
    double c = 1.0;
    double T = 1.0;
    std::size_t m = 1000;
    double smallness = 0.1;      //!< eps T must not exceed this
    bool drop_root_term = false; //!< linear variant without Psi^((p-1)/p)

    void validate() const;
    double exponent() const noexcept { return (p - 1.0) / p; }
};

/*!
 * Coefficients of the Pachpatte comparison for this inequality: e = eps c t^p,
 * g = 1, f = h = eps c, phi = id, v(u) = u^((p-1)/p).
 */
class PachpatteCoefficients
{
  public:
    explicit PachpatteCoefficients(BihariProblem const& problem);

    double a(double t) const;         //!< exp(eps c t)
    double e(double t) const;         //!< eps c t^p
    double A(double t) const;         //!< int_0^t h v(a e) ds
    double F(double x) const;         //!< p x^(1/p)
    double F_inverse(double y) const; //!< y^p / p^p
    double root_integral(double t) const; //!< int_0^t h v(a) ds
    /// a(t) [e(t) + F^{-1}(F(A(t)) + root_integral(t))]
    double envelope(double t) const;

  private:
    double p_;
    double q_;
    double ec_;
};

/// eps t^p + t^p (eps t)^((p-1)/p)
double bound_shape(BihariProblem const& problem, double t);

/// sup over the grid of envelope / shape; 0 when eps == 0.
double proof_constant(BihariProblem const& problem);

/// C (eps t^p + t^p (eps t)^((p-1)/p)); C defaults to proof_constant.
double corollary_bound(BihariProblem const& problem, double t,
                       std::optional<double> constant = std::nullopt);

struct MaximalSolution
{
    std::vector<double> t;
    std::vector<double> psi;
    std::size_t iterations = 0;
};

/// Picard iteration of the equality version with trapezoidal quadrature.
MaximalSolution maximal_solution(BihariProblem const& problem);

struct DominanceReport
{
    double fitted_constant = 0.0; //!< smallest C dominating on the whole grid
    double constant_at_T = 0.0;   //!< Psi*(T) / shape(T)
    double proof_constant = 0.0;
    bool holds_with_constant_at_T = false;
    std::vector<double> t;
    std::vector<double> psi;
    std::vector<double> envelope;
    std::vector<double> bound;  //!< with fitted_constant
    double min_margin = 0.0;    //!< min of (bound - psi)
    double max_envelope_ratio = 0.0; //!< max (psi - allowance) / envelope
    double max_allowance = 0.0;      //!< largest quadrature allowance used in the envelope check
};

/*!
 * Throws DominanceFailureError when Psi* exceeds the Pachpatte envelope by more
 * than its quadrature error, estimated against a solve on m / 2 intervals.
 */
DominanceReport verify_dominance(BihariProblem const& problem);

}  // namespace foliated
