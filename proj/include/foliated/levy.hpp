#pragma once

#include "foliated/rng.hpp"
#include "foliated/types.hpp"

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

namespace foliated {

//---------------------------------------------------------------------------//
// Jump laws of a finite-activity Levy measure nu = rate * law.
//---------------------------------------------------------------------------//

/// Independent uniform(-a, a) components.
struct UniformLaw
{
    double half_width = 1.0;
};

/// Discrete law on finitely many nonzero atoms.
struct AtomLaw
{
    struct Atom
    {
        Vec point;
        double probability = 0.0;
    };
    std::vector<Atom> atoms;
};

/// Independent N(0, sigma^2) components conditioned on |z_i| <= cutoff.
struct TruncatedNormalLaw
{
    double sigma = 1.0;
    double cutoff = 3.0;
};

/// One-dimensional symmetric law with density proportional to |z|^(-1-alpha)
/// on lower <= |z| <= upper. Produced by small-jump truncation.
struct SymmetricPowerLaw
{
    double alpha = 1.0;
    double lower = 0.1;
    double upper = 1.0;
};

using JumpLaw = std::variant<UniformLaw, AtomLaw, TruncatedNormalLaw, SymmetricPowerLaw>;

std::string law_name(JumpLaw const& law);

//---------------------------------------------------------------------------//
/*!
 * Finite-activity Levy measure: jumps arrive at Poisson rate `rate` and are
 * drawn i.i.d. from `law` in R^dimension.
 */
struct LevyMeasureSpec
{
    double rate = 1.0;
    JumpLaw law = UniformLaw{};
    int dimension = 1;

    /// Throws PreconditionError when an invariant fails.
    void validate() const;
};

struct JumpEvent
{
    double time = 0.0;
    Vec jump;
};

/// Jump times strictly increasing in (0, horizon], every jump nonzero.
struct LevyPath
{
    double horizon = 0.0;
    std::vector<JumpEvent> events;

    /// Events with time in (a, b].
    std::size_t count_events(double a, double b) const;
};

/// Draw one path on [0, horizon]. Deterministic given the stream state.
LevyPath sample_levy_path(LevyMeasureSpec const& spec, double horizon, RngStream& stream);

/// Draw one jump vector from the law.
Vec sample_jump(JumpLaw const& law, int dimension, RngStream& stream);

/// E|xi|^order for one draw of the law (no rate factor).
double law_abs_moment(JumpLaw const& law, int dimension, double order);

/// E[xi] componentwise.
Vec law_mean(JumpLaw const& law, int dimension);

/// E[xi_i^2] for component i.
double law_component_second_moment(JumpLaw const& law, int dimension, int component);

/// Integral of |z|^order against nu, i.e. rate * E|xi|^order.
double moment(LevyMeasureSpec const& spec, double order);

struct Hypothesis1Report
{
    double p = 2.0;
    double leaf_moment = 0.0;        //!< int |z|^p nu(dz)
    double transversal_moment = 0.0; //!< int |z|^(2p) nu'(dz)
    bool pass = false;
};

/// Check the p-th moment of nu and the 2p-th moment of nu'.
Hypothesis1Report validate_hypothesis1(LevyMeasureSpec const& leaf_spec,
                                       LevyMeasureSpec const& transversal_spec,
                                       double p);

//---------------------------------------------------------------------------//
// Small-jump truncation of infinite-activity measures.
//---------------------------------------------------------------------------//

/// nu(dz) = scale * |z|^(-1-alpha) dz on 0 < |z| <= max_jump, alpha in (0, 2).
struct PowerLevyDensity
{
    double scale = 1.0;
    double alpha = 1.0;
    double max_jump = 1.0;
};

struct TruncationResult
{
    LevyMeasureSpec spec;
    /// int_{|z| < cutoff} |z|^2 nu(dz), the second-moment mass that was dropped.
    double discarded_second_moment = 0.0;
};

/// Replace nu by its restriction to |z| >= cutoff.
TruncationResult truncate_small_jumps(PowerLevyDensity const& density, double cutoff);

}  // namespace foliated
