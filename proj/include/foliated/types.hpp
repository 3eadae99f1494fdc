#pragma once

#include <Eigen/Core>

#include <functional>

namespace foliated {

// States, jump vectors and transversal coordinates are short; capping the
// dimension keeps them on the stack.
inline constexpr int max_dim = 8;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, max_dim, 1>;

/// x -> F0(x)
using DriftField = std::function<Vec(Vec const&)>;
/// (x, z) -> F(x) z
using JumpField = std::function<Vec(Vec const&, Vec const&)>;
/// Region membership test used for first-exit detection.
using RegionPredicate = std::function<bool(Vec const&)>;

inline Vec make_vec(std::initializer_list<double> values)
{
    Vec v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values)
        v[i++] = x;
    return v;
}

}  // namespace foliated
