#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tubekernel/convex_function.hpp"
#include "tubekernel/quadrature.hpp"

namespace tubekernel {

enum class Provenance { Analytic, Grid, Quadrature };

std::string_view provenance_name(Provenance p);

struct TransformResult {
    ConvexFunction function;
    Provenance provenance = Provenance::Analytic;
    std::vector<std::string> warnings;
};

struct LegendreOptions {
    // Dual axes for the grid algorithm (required for Grid and Sum inputs).
    std::optional<std::vector<Vector>> dual_axes;
    // Axes on which non-grid inputs are sampled before the grid algorithm.
    std::optional<std::vector<Vector>> primal_axes;
    // Skip the analytic rules.
    bool force_grid = false;
};

// phi*(t) = sup_x (t.x - phi(x)).
TransformResult legendre(const ConvexFunction& phi, const LegendreOptions& opts = {});

// Discrete conjugate of a grid function on the given dual axes, computed one
// axis at a time. Warnings are appended when dual points fall outside the
// slope range of the data (values then come from the grid hull).
GridFunction grid_legendre(const GridFunction& f, const std::vector<Vector>& dual_axes,
                           std::vector<std::string>* warnings = nullptr);

// Samples phi on a tensor grid (+inf outside the domain).
GridFunction sample_on_grid(const ConvexFunction& phi, const std::vector<Vector>& axes);

// Symmetric axis with `count` (odd) nodes on [-half_width, half_width].
Vector symmetric_axis(double half_width, std::size_t count);

// phi*(t) at a single point: exact for analytic representations, discrete
// maximum over the nodes for grids. Throws NotComputable otherwise.
double conjugate_at(const ConvexFunction& phi, std::span<const double> t);

// c * phi for c > 0, keeping the representation analytic where possible.
ConvexFunction scaled(const ConvexFunction& phi, double c);

struct LogLaplaceValue {
    double value = 0.0;  // log of the integral
    double error = 0.0;  // absolute error of value
    std::uint64_t evaluations = 0;
};

// tilde phi(t) = log int e^{2 x.t - phi(x)} dx.
LogLaplaceValue log_laplace_detailed(const ConvexFunction& phi, std::span<const double> t, const QuadSpec& spec = {});
double log_laplace(const ConvexFunction& phi, std::span<const double> t, const QuadSpec& spec = {});

struct MidpointBound {
    double lhs = 0.0;  // e^{tilde Phi(t)}, Phi = 2 phi
    double rhs = 0.0;  // 2^{-n} e^{phi*(t)} int e^{-phi}
    double lhs_error = 0.0;
    double rhs_error = 0.0;
};

MidpointBound log_laplace_midpoint_lower(const ConvexFunction& phi, std::span<const double> t,
                                         const QuadSpec& spec = {});

}  // namespace tubekernel
