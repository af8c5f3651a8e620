#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tubekernel/convex_function.hpp"

namespace tubekernel {

// `polar` is the facet-cone scheme used by `auto` in dimension <= 3.
enum class Method { Auto, TensorGauss, Adaptive1D, MonteCarlo, Polar };

std::string_view method_name(Method m);
std::optional<Method> parse_method(std::string_view name);

struct QuadSpec {
    std::optional<double> rel_tol;  // default: 1e-8 for n = 1, 1e-6 otherwise
    double truncation_mass = 1e-12;
    Method method = Method::Auto;
    std::uint64_t mc_samples = 1'000'000;
    std::uint64_t seed = 0;
    std::uint64_t max_evals = 20'000'000;

    [[nodiscard]] double tolerance(std::size_t dim) const;
    void validate() const;
};

struct QuadResult {
    double value = 0.0;
    double error_estimate = 0.0;
    Method method = Method::Auto;
    // Radius beyond which mass was dropped under the tail certificate; +inf
    // when no truncation happened (closed-form tails or mapped ranges).
    double truncation_radius = std::numeric_limits<double>::infinity();
    std::uint64_t evaluations = 0;
    bool converged = true;
};

// Integral represented as mantissa * exp(log_scale), for integrands that may
// over- or underflow.
struct ScaledIntegral {
    double mantissa = 0.0;
    double error = 0.0;
    double log_scale = 0.0;
    double truncation_radius = std::numeric_limits<double>::infinity();
    std::uint64_t evaluations = 0;
    Method method = Method::Auto;
    bool converged = true;

    [[nodiscard]] double log_value() const;
    [[nodiscard]] double value() const;
    [[nodiscard]] double relative_error() const;
};

// A convex exponent g: R^n -> (-inf, +inf] with g(0) finite; the integrand
// is e^{-g}. Optional structure lets integrators take shortcuts.
class ConvexExponent {
public:
    virtual ~ConvexExponent() = default;
    [[nodiscard]] virtual std::size_t dim() const = 0;
    [[nodiscard]] virtual double value(std::span<const double> x) const = 0;
    [[nodiscard]] virtual double domain_radius(std::span<const double>) const {
        return std::numeric_limits<double>::infinity();
    }
    [[nodiscard]] virtual std::optional<Vector> domain_half_widths() const { return std::nullopt; }
    [[nodiscard]] virtual bool has_ray_form() const { return false; }
    [[nodiscard]] virtual std::optional<RayForm> ray_form(std::span<const double>) const { return std::nullopt; }
    [[nodiscard]] virtual std::optional<Body> partition_body() const { return std::nullopt; }
    // g(-x) = g(x): the minimum along every ray from 0 sits at 0.
    [[nodiscard]] virtual bool symmetric() const { return false; }
    // Directions worth probing for the maximum of e^{-g}.
    [[nodiscard]] virtual std::vector<Vector> probe_directions() const { return {}; }
};

// g(x) = phi(x) - tilt.x (tilt empty means zero).
class FunctionExponent final : public ConvexExponent {
public:
    explicit FunctionExponent(ConvexFunction phi, Vector tilt = {});

    [[nodiscard]] std::size_t dim() const override { return phi_.dim(); }
    [[nodiscard]] double value(std::span<const double> x) const override;
    [[nodiscard]] double domain_radius(std::span<const double> d) const override { return phi_.domain_radius(d); }
    [[nodiscard]] std::optional<Vector> domain_half_widths() const override { return phi_.domain_half_widths(); }
    [[nodiscard]] bool has_ray_form() const override { return phi_.has_ray_form(); }
    [[nodiscard]] std::optional<RayForm> ray_form(std::span<const double> y) const override;
    [[nodiscard]] std::optional<Body> partition_body() const override { return phi_.partition_body(); }
    [[nodiscard]] bool symmetric() const override { return tilt_.empty(); }
    [[nodiscard]] std::vector<Vector> probe_directions() const override;

private:
    ConvexFunction phi_;
    Vector tilt_;
};

// Integral of e^{-g} over R^n.
ScaledIntegral integrate_exp_neg_scaled(const ConvexExponent& g, const QuadSpec& spec);

// Integral of e^{-phi} over R^n. Throws DivergenceError when the integral is
// infinite and ToleranceNotReached when the adaptive budget runs out.
QuadResult integrate_exp_neg(const ConvexFunction& phi, const QuadSpec& spec = {});

struct EndpointHints {
    bool log_singular_a = false;
    bool log_singular_b = false;
    std::vector<double> breakpoints;
};

// Adaptive Gauss-Kronrod on (a, b), either end possibly infinite. Endpoints
// flagged as logarithmically singular are treated with x = a + (m - a) e^{-u}.
QuadResult integrate_1d(const std::function<double(double)>& f, double a, double b,
                        const QuadSpec& spec = {}, const EndpointHints& hints = {});

namespace detail {

// exp(x^2) erfc(x).
double erfcx(double x);

// exp(shift) * int_0^rho s^k exp(-a2 s^2 - a1 s) ds for a2 >= 0.
double radial_moment(int k, double a2, double a1, double rho, double shift);

struct Adaptive1DResult {
    double value = 0.0;
    double error = 0.0;
    std::uint64_t evaluations = 0;
    bool converged = true;
};

// Global adaptive GK15 on a finite interval until error <= max(abs_tol,
// rel_tol |value|).
Adaptive1DResult adaptive_gk15(const std::function<double(double)>& f, double a, double b, double rel_tol,
                               double abs_tol, std::size_t max_intervals = 400);

}  // namespace detail

}  // namespace tubekernel
