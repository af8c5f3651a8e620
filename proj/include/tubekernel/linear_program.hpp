#pragma once

#include <span>
#include <vector>

namespace tubekernel::detail {

// max c.t subject to A t <= b, with t free and b > 0 componentwise (so t = 0
// is feasible and the slack basis is a valid start). `a` is row-major m x n.
// Returns +inf when the problem is unbounded.
double maximize_over_polyhedron(std::span<const double> c, std::span<const double> a,
                                std::span<const double> b);

}  // namespace tubekernel::detail
