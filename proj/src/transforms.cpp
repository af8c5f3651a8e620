#include "tubekernel/transforms.hpp"

#include <algorithm>
#include <cmath>

#include "tubekernel/errors.hpp"

namespace tubekernel {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// max_j (t x_j - f_j) for every t in ts (increasing), via the lower convex
// hull of the finite samples and a monotone walk over its slopes.
std::size_t conjugate_1d(const Vector& xs, const double* fs, std::size_t stride, const Vector& ts, double* out,
                         std::size_t out_stride) {
    std::vector<std::size_t> hull;
    for (std::size_t j = 0; j < xs.size(); ++j) {
        const double f = fs[j * stride];
        if (std::isinf(f)) continue;
        while (hull.size() >= 2) {
            const std::size_t a = hull[hull.size() - 2], b = hull.back();
            const double fa = fs[a * stride], fb = fs[b * stride];
            // Drop b when it lies on or above the chord from a to j.
            if ((fb - fa) * (xs[j] - xs[a]) >= (f - fa) * (xs[b] - xs[a])) {
                hull.pop_back();
            } else {
                break;
            }
        }
        hull.push_back(j);
    }
    if (hull.empty()) {
        for (std::size_t k = 0; k < ts.size(); ++k) out[k * out_stride] = -kInf;
        return 0;
    }
    std::size_t clamped = 0;
    std::size_t h = 0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        const double t = ts[k];
        while (h + 1 < hull.size()) {
            const std::size_t a = hull[h], b = hull[h + 1];
            const double slope = (fs[b * stride] - fs[a * stride]) / (xs[b] - xs[a]);
            if (t > slope) {
                ++h;
            } else {
                break;
            }
        }
        const std::size_t j = hull[h];
        out[k * out_stride] = t * xs[j] - fs[j * stride];
        if (hull.size() < 2) {
            ++clamped;
        } else {
            const std::size_t f0 = hull[0], f1 = hull[1];
            const std::size_t l0 = hull[hull.size() - 2], l1 = hull.back();
            const double first = (fs[f1 * stride] - fs[f0 * stride]) / (xs[f1] - xs[f0]);
            const double last = (fs[l1 * stride] - fs[l0 * stride]) / (xs[l1] - xs[l0]);
            if (t < first || t > last) ++clamped;
        }
    }
    return clamped;
}

bool analytic_available(const ConvexFunction& phi) {
    using K = ConvexFunction::Kind;
    switch (phi.kind()) {
        case K::Indicator:
        case K::Support:
        case K::GaugePower:
            return true;
        case K::Quadratic: {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(phi.matrix());
            const double hi = es.eigenvalues().maxCoeff();
            return hi > 0.0 && es.eigenvalues().minCoeff() > 1e-12 * hi;
        }
        case K::Dilate: return analytic_available(phi.inner());
        case K::Sum:
        case K::Grid:
            return false;
    }
    return false;
}

ConvexFunction analytic_legendre(const ConvexFunction& phi) {
    using K = ConvexFunction::Kind;
    switch (phi.kind()) {
        case K::Indicator: return ConvexFunction::support(phi.body());
        case K::Support: return ConvexFunction::indicator(phi.body());
        case K::Quadratic: {
            const Eigen::MatrixXd inv = phi.matrix().inverse();
            return ConvexFunction::quadratic(0.5 * (inv + inv.transpose()));
        }
        case K::GaugePower: {
            const double p = phi.order();
            const Body polar = phi.body().polar();
            if (p == 1.0) return ConvexFunction::indicator(polar);
            return ConvexFunction::gauge_power(polar, p / (p - 1.0));
        }
        case K::Dilate: return dilate(analytic_legendre(phi.inner()), 1.0 / phi.factor());
        default: break;
    }
    throw InvalidArgument("no analytic Legendre rule for this representation");
}

}  // namespace

std::string_view provenance_name(Provenance p) {
    switch (p) {
        case Provenance::Analytic: return "analytic";
        case Provenance::Grid: return "grid";
        case Provenance::Quadrature: return "quadrature";
    }
    return "analytic";
}

Vector symmetric_axis(double half_width, std::size_t count) {
    if (count < 3 || count % 2 == 0) throw InvalidArgument("axis node count must be odd and >= 3");
    if (!(half_width > 0.0) || !std::isfinite(half_width)) throw InvalidArgument("axis half-width must be positive");
    Vector a(count);
    const std::size_t mid = count / 2;
    for (std::size_t k = 0; k < mid; ++k) {
        const double v = half_width * static_cast<double>(mid - k) / static_cast<double>(mid);
        a[k] = -v;
        a[count - 1 - k] = v;
    }
    a[mid] = 0.0;
    return a;
}

GridFunction sample_on_grid(const ConvexFunction& phi, const std::vector<Vector>& axes) {
    const std::size_t n = phi.dim();
    if (axes.size() != n) throw DimensionMismatch(n, axes.size());
    std::size_t total = 1;
    for (const auto& a : axes) total *= a.size();
    std::vector<double> values(total);
    Vector x(n);
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t rem = idx;
        for (std::size_t d = n; d-- > 0;) {
            x[d] = axes[d][rem % axes[d].size()];
            rem /= axes[d].size();
        }
        values[idx] = phi.value(x);
    }
    return GridFunction(axes, std::move(values));
}

GridFunction grid_legendre(const GridFunction& f, const std::vector<Vector>& dual_axes,
                           std::vector<std::string>* warnings) {
    const std::size_t n = f.dim();
    if (dual_axes.size() != n) throw DimensionMismatch(n, dual_axes.size());
    for (const auto& a : dual_axes)
        for (std::size_t k = 1; k < a.size(); ++k)
            if (!(a[k] > a[k - 1])) throw InvalidArgument("dual axis nodes must be strictly increasing");

    std::vector<std::size_t> shape(n);
    for (std::size_t d = 0; d < n; ++d) shape[d] = f.axes()[d].size();
    std::vector<double> cur = f.values();
    std::size_t clamped = 0;
    for (std::size_t step = 0; step < n; ++step) {
        const std::size_t d = n - 1 - step;
        // Conjugate the convex function -cur (phi itself on the first step).
        if (step > 0)
            for (double& v : cur) v = -v;
        std::size_t outer = 1, inner = 1;
        for (std::size_t k = 0; k < d; ++k) outer *= shape[k];
        for (std::size_t k = d + 1; k < n; ++k) inner *= shape[k];
        const std::size_t m_in = shape[d], m_out = dual_axes[d].size();
        std::vector<double> next(outer * m_out * inner);
        for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t i = 0; i < inner; ++i) {
                const double* src = cur.data() + o * m_in * inner + i;
                double* dst = next.data() + o * m_out * inner + i;
                clamped += conjugate_1d(f.axes()[d], src, inner, dual_axes[d], dst, inner);
            }
        cur = std::move(next);
        shape[d] = m_out;
    }
    if (clamped > 0 && warnings)
        warnings->push_back(std::to_string(clamped) +
                            " dual nodes lie outside the slope range of the primal grid; values there come "
                            "from the grid hull (clamped)");
    return GridFunction(dual_axes, std::move(cur));
}

TransformResult legendre(const ConvexFunction& phi, const LegendreOptions& opts) {
    if (!opts.force_grid && analytic_available(phi)) return {analytic_legendre(phi), Provenance::Analytic, {}};
    if (!opts.dual_axes) {
        if (phi.kind() == ConvexFunction::Kind::Quadratic)
            throw InvalidArgument("quadratic form is singular; supply a dual grid for the grid algorithm");
        throw InvalidArgument("this representation needs a dual grid for its Legendre transform");
    }
    TransformResult out{phi, Provenance::Grid, {}};
    if (phi.kind() == ConvexFunction::Kind::Grid) {
        out.function = ConvexFunction::grid(grid_legendre(phi.grid_function(), *opts.dual_axes, &out.warnings));
        return out;
    }
    if (!opts.primal_axes) throw InvalidArgument("sampling a non-grid function needs primal axes");
    const GridFunction sampled = sample_on_grid(phi, *opts.primal_axes);
    out.function = ConvexFunction::grid(grid_legendre(sampled, *opts.dual_axes, &out.warnings));
    return out;
}

double conjugate_at(const ConvexFunction& phi, std::span<const double> t) {
    if (t.size() != phi.dim()) throw DimensionMismatch(phi.dim(), t.size());
    if (analytic_available(phi)) return analytic_legendre(phi).value(t);
    if (phi.kind() == ConvexFunction::Kind::Grid) {
        const GridFunction& g = phi.grid_function();
        const std::size_t n = g.dim();
        double best = -kInf;
        Vector x(n);
        for (std::size_t idx = 0; idx < g.size(); ++idx) {
            const double v = g.values()[idx];
            if (std::isinf(v)) continue;
            std::size_t rem = idx;
            double s = 0.0;
            for (std::size_t d = n; d-- > 0;) {
                s += t[d] * g.axes()[d][rem % g.axes()[d].size()];
                rem /= g.axes()[d].size();
            }
            best = std::max(best, s - v);
        }
        return best;
    }
    throw NotComputable("pointwise Legendre transform needs an analytic or grid representation");
}

ConvexFunction scaled(const ConvexFunction& phi, double c) {
    if (!(c > 0.0) || !std::isfinite(c)) throw InvalidArgument("scale factor must be positive and finite");
    if (c == 1.0) return phi;
    using K = ConvexFunction::Kind;
    switch (phi.kind()) {
        case K::Indicator: return phi;
        case K::Support: return ConvexFunction::support(phi.body().scaled(c));
        case K::Quadratic: return ConvexFunction::quadratic(c * phi.matrix());
        case K::GaugePower: {
            const double p = phi.order();
            return ConvexFunction::gauge_power(phi.body().scaled(std::pow(c, -1.0 / p)), p);
        }
        case K::Dilate: return dilate(scaled(phi.inner(), c), phi.factor());
        case K::Sum: {
            std::vector<ConvexFunction> terms;
            for (const auto& t : phi.terms()) terms.push_back(scaled(t, c));
            return ConvexFunction::sum(terms);
        }
        case K::Grid: {
            const GridFunction& g = phi.grid_function();
            std::vector<double> v = g.values();
            for (double& x : v)
                if (std::isfinite(x)) x *= c;
            return ConvexFunction::grid(GridFunction(g.axes(), std::move(v)));
        }
    }
    throw InvalidArgument("unknown representation");
}

LogLaplaceValue log_laplace_detailed(const ConvexFunction& phi, std::span<const double> t, const QuadSpec& spec) {
    if (t.size() != phi.dim()) throw DimensionMismatch(phi.dim(), t.size());
    Vector tilt(t.begin(), t.end());
    for (double& v : tilt) v *= 2.0;
    FunctionExponent g(phi, std::move(tilt));
    const ScaledIntegral s = integrate_exp_neg_scaled(g, spec);
    if (!s.converged && s.method != Method::TensorGauss && s.method != Method::MonteCarlo)
        throw ToleranceNotReached("log-Laplace integral did not reach the requested tolerance", s.relative_error());
    if (!(s.mantissa > 0.0)) throw InvalidArgument("log-Laplace integral vanished (empty effective domain)");
    return {s.log_value(), s.relative_error(), s.evaluations};
}

double log_laplace(const ConvexFunction& phi, std::span<const double> t, const QuadSpec& spec) {
    return log_laplace_detailed(phi, t, spec).value;
}

MidpointBound log_laplace_midpoint_lower(const ConvexFunction& phi, std::span<const double> t,
                                         const QuadSpec& spec) {
    const std::size_t n = phi.dim();
    const LogLaplaceValue big = log_laplace_detailed(scaled(phi, 2.0), t, spec);
    const double conj = conjugate_at(phi, t);
    if (std::isinf(conj)) throw InvalidArgument("t lies outside the domain of the Legendre transform");
    const QuadResult mass = integrate_exp_neg(phi, spec);
    MidpointBound b;
    b.lhs = std::exp(big.value);
    b.lhs_error = b.lhs * big.error;
    b.rhs = std::pow(2.0, -static_cast<double>(n)) * std::exp(conj) * mass.value;
    b.rhs_error = b.rhs * mass.error_estimate / mass.value;
    return b;
}

}  // namespace tubekernel
