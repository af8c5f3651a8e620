#pragma once

#include <Eigen/Dense>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "tubekernel/body.hpp"
#include "tubekernel/ext_real.hpp"

namespace tubekernel {

// Tensor grid of samples. Nodes along every axis are strictly increasing,
// symmetric about 0 and contain 0. Values are row-major (last axis fastest)
// and may be +inf. Evaluation is multilinear inside the hull, +inf outside.
class GridFunction {
public:
    GridFunction(std::vector<Vector> axes, std::vector<double> values);

    [[nodiscard]] std::size_t dim() const { return axes_.size(); }
    [[nodiscard]] const std::vector<Vector>& axes() const { return axes_; }
    [[nodiscard]] const std::vector<double>& values() const { return values_; }
    [[nodiscard]] std::size_t size() const { return values_.size(); }
    [[nodiscard]] double value(std::span<const double> x) const;
    [[nodiscard]] double hull_half_width(std::size_t axis) const { return axes_[axis].back(); }

private:
    std::vector<Vector> axes_;
    std::vector<double> values_;
    std::vector<std::size_t> strides_;
};

// Restriction of g to a ray: g(s y) = a2 s^2 + a1 s for 0 <= s < rho and
// +inf for s > rho (rho may be +inf).
struct RayForm {
    double a2 = 0.0;
    double a1 = 0.0;
    double rho = std::numeric_limits<double>::infinity();
};

class ConvexFunction {
public:
    enum class Kind { Indicator, Support, Quadratic, GaugePower, Dilate, Sum, Grid };

    static ConvexFunction indicator(const Body& k);
    static ConvexFunction support(const Body& k);
    // x.Mx/2 for symmetric positive semidefinite M.
    static ConvexFunction quadratic(const Eigen::MatrixXd& m);
    // gauge_K(x)^p / p, p >= 1.
    static ConvexFunction gauge_power(const Body& k, double p);
    static ConvexFunction sum(const std::vector<ConvexFunction>& terms);
    static ConvexFunction grid(GridFunction g);

    [[nodiscard]] std::size_t dim() const;
    [[nodiscard]] Kind kind() const;

    [[nodiscard]] ExtReal eval(std::span<const double> x) const;
    // Same as eval, with +inf as a plain double. Hot path for integrators.
    [[nodiscard]] double value(std::span<const double> x) const;

    [[nodiscard]] const Body& body() const;                   // Indicator, Support, GaugePower
    [[nodiscard]] const Eigen::MatrixXd& matrix() const;      // Quadratic
    [[nodiscard]] double order() const;                       // GaugePower
    [[nodiscard]] const ConvexFunction& inner() const;        // Dilate
    [[nodiscard]] double factor() const;                      // Dilate
    [[nodiscard]] const std::vector<ConvexFunction>& terms() const;  // Sum
    [[nodiscard]] const GridFunction& grid_function() const;  // Grid

    // Structural power homogeneity: phi(s x) = s^p phi(x).
    [[nodiscard]] std::optional<double> homogeneity_degree() const;

    // sup{s >= 0 : phi(s d) < inf}; +inf when the ray stays in the domain.
    [[nodiscard]] double domain_radius(std::span<const double> d) const;
    // Half-widths of a box containing the effective domain, if bounded.
    [[nodiscard]] std::optional<Vector> domain_half_widths() const;
    // Closed form along the ray through y when the representation has one.
    [[nodiscard]] std::optional<RayForm> ray_form(std::span<const double> y) const;
    [[nodiscard]] bool has_ray_form() const;
    // Polytope whose facet cones follow the kinks of phi (used to split
    // integration domains); nullopt when there is no natural choice.
    [[nodiscard]] std::optional<Body> partition_body() const;

    [[nodiscard]] bool same_storage(const ConvexFunction& other) const { return node_ == other.node_; }

    struct Node;

private:
    explicit ConvexFunction(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    friend ConvexFunction dilate(const ConvexFunction& phi, double s);
    std::shared_ptr<const Node> node_;
};

// x -> phi(s x). Nested dilations are flattened; s = 1 returns phi itself.
ConvexFunction dilate(const ConvexFunction& phi, double s);

ExtReal eval(const ConvexFunction& phi, std::span<const double> x);
std::optional<double> homogeneity_degree(const ConvexFunction& phi);

}  // namespace tubekernel
