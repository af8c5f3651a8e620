#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "tubekernel/convex_function.hpp"
#include "tubekernel/quadrature.hpp"

namespace tubekernel {

enum class KernelMethod { Formula, Gram, Conformal, ClosedForm };

std::string_view kernel_method_name(KernelMethod m);

struct KernelValue {
    double value = 0.0;
    double error_estimate = 0.0;  // absolute
    KernelMethod method = KernelMethod::Formula;
    std::uint64_t evaluations = 0;
};

// int e^{2 t.x - psi(t)} dt: the diagonal kernel of PW(e^psi) at Re z = x.
KernelValue kernel_pw(const ConvexFunction& psi, std::span<const double> x, const QuadSpec& spec = {});

// (2 pi)^{-n} int e^{2 t.x - tilde phi(t)} dt: the diagonal kernel of
// A^2(e^{-phi}) on the tube over dom phi at Re z = x. Every evaluation of the
// outer integrand runs an inner log-Laplace quadrature.
KernelValue kernel_tube(const ConvexFunction& phi, std::span<const double> x, const QuadSpec& spec = {});
KernelValue kernel_tube(const ConvexFunction& phi, const QuadSpec& spec = {});

// Weight x -> phi1(s x) + phi2(x) of the real-parameter family. For s = +-1
// and phi1, phi2 sharing storage this is 2 phi1. Indicators of one body K
// give I_K for |s| <= 1 and I_{K/|s|} for |s| >= 1.
ConvexFunction family_weight(const ConvexFunction& phi1, const ConvexFunction& phi2, double s);

// B_s(0) for real s != 0.
KernelValue kernel_family_s(const ConvexFunction& phi1, const ConvexFunction& phi2, double s,
                            const QuadSpec& spec = {});

// Separable weight e^{-wx(x) - wy(y)} on C = R^2 (n = 1). The weight of the
// family at s = i is wx = phi2, wy = phi1.
struct PlaneWeight {
    ConvexFunction wx;
    ConvexFunction wy;
};

struct GramOptions {
    std::size_t radial_nodes = 96;   // per radial panel, doubled for the error estimate
    std::size_t angular_nodes = 48;  // per angular panel
    double max_condition = 1e12;
};

struct GramResult {
    // kernel[k] = kernel at 0 of polynomials of degree <= k; nondecreasing.
    std::vector<double> kernel;
    std::vector<double> error;
    std::vector<double> condition;  // of the equilibrated leading Gram block
    std::size_t degree = 0;
    double truncation_radius = 0.0;
};

// Kernel at 0 of the polynomial subspace of degree <= N in
// L^2(C, weight dlambda), from the inverse Gram matrix of 1, z, ..., z^N.
// Throws IllConditioned when the equilibrated Gram matrix has condition above
// the limit.
GramResult gram_oracle(const PlaneWeight& w, std::size_t degree, const GramOptions& opts = {});
KernelValue kernel_gram_oracle(const PlaneWeight& w, std::size_t degree, const GramOptions& opts = {});

// Largest degree <= max_degree whose Gram matrix stays within the condition
// limit (at least 0).
std::size_t gram_max_degree(const PlaneWeight& w, std::size_t max_degree, const GramOptions& opts = {});

// Bergman kernel at 0 of the strip {|Re z| < w} through the Riemann map
// z -> tan(pi z / (4 w)): pi / (16 w^2).
KernelValue kernel_strip_conformal(double half_width = 1.0);

// Compactly supported Paley-Wiener profile on [-a, a] (n = 1).
enum class Profile { Box, Triangle, RaisedCosine, Biweight };

std::string_view profile_name(Profile p);

struct PWElement {
    Profile profile = Profile::Triangle;
    double half_width = 1.0;
    double amplitude = 1.0;

    [[nodiscard]] double value(double t) const;
    [[nodiscard]] double total_variation() const;
    // Total variation of the derivative; +inf for the box.
    [[nodiscard]] double derivative_variation() const;
    // Total variation of the second derivative; +inf unless the profile is C^1.
    [[nodiscard]] double second_derivative_variation() const;
    [[nodiscard]] double l1_norm() const;
    [[nodiscard]] double l2_norm_squared() const;
    [[nodiscard]] std::vector<double> breakpoints() const;
};

// f(z) = int e^{t z} tilde f(t) dt.
std::complex<double> pw_eval(const PWElement& f, std::complex<double> z);

struct IsometryResult {
    double a2_norm_squared = 0.0;  // int |f(x + iy)|^2 e^{-phi(x)} dx dy
    double pw_side = 0.0;          // 2 pi int |tilde f|^2 e^{tilde phi}
    double a2_error = 0.0;
    double pw_error = 0.0;
    double y_cutoff = 0.0;
    double residual = 0.0;  // |a2 - pw| / pw
};

IsometryResult isometry_check(const PWElement& f, const ConvexFunction& phi, const QuadSpec& spec = {});
double isometry_residual(const PWElement& f, const ConvexFunction& phi, const QuadSpec& spec = {});

}  // namespace tubekernel
