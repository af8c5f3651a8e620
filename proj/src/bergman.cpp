#include "tubekernel/bergman.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>

#include "tubekernel/errors.hpp"
#include "tubekernel/gauss.hpp"
#include "tubekernel/transforms.hpp"

namespace tubekernel {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = std::numbers::pi;

void atomic_max(std::atomic<double>& a, double v) {
    double cur = a.load(std::memory_order_relaxed);
    while (v > cur && !a.compare_exchange_weak(cur, v, std::memory_order_relaxed)) {
    }
}

bool all_zero(std::span<const double> x) {
    return std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; });
}

// t -> tilde phi(t) - 2 t.x, each value an inner log-Laplace quadrature.
// tilde phi is real analytic, so the default cross-polytope cells are used.
//
// Inner accuracy is relaxed where the outer integrand is small: with
// psi(t) = g(t) - g(0), a relative inner error delta(t) <= eps e^{psi(t)/4}
// perturbs the outer integral by at most (4/3)^n eps relative, because
// int e^{-3 psi/4} <= (4/3)^n int e^{-psi} for convex psi >= psi(t*) .
class TubeExponent final : public ConvexExponent {
public:
    TubeExponent(ConvexFunction phi, Vector x, QuadSpec inner, double reference, double eps)
        : phi_(std::move(phi)), x_(std::move(x)), inner_(std::move(inner)), reference_(reference), eps_(eps) {}

    [[nodiscard]] std::size_t dim() const override { return phi_.dim(); }

    [[nodiscard]] double value(std::span<const double> t) const override {
        try {
            double s = 0.0;
            for (std::size_t i = 0; i < t.size(); ++i) s += t[i] * x_[i];
            QuadSpec spec = inner_;
            spec.rel_tol = kLooseInner;
            LogLaplaceValue v = log_laplace_detailed(phi_, t, spec);
            std::uint64_t evals = v.evaluations;
            auto allowed = [&](double g) {
                return std::min(kLooseInner, eps_ * std::exp(0.25 * (g - reference_)));
            };
            // Lower the estimate by the loose error before deciding.
            const double need = allowed(v.value - 2.0 * s - 2.0 * v.error);
            if (v.error > need) {
                spec.rel_tol = need;
                v = log_laplace_detailed(phi_, t, spec);
                evals += v.evaluations;
            }
            const double g = v.value - 2.0 * s;
            atomic_max(max_weighted_error_, v.error * std::exp(-0.25 * (g - reference_)));
            inner_evals_.fetch_add(evals, std::memory_order_relaxed);
            return g;
        } catch (const DivergenceError&) {
            return kInf;
        }
    }

    [[nodiscard]] bool symmetric() const override { return all_zero(x_); }

    [[nodiscard]] std::vector<Vector> probe_directions() const override {
        if (all_zero(x_)) return {};
        return {x_};
    }

    // Bound on the relative outer error caused by inner errors.
    [[nodiscard]] double inner_error_bound() const {
        return std::pow(4.0 / 3.0, static_cast<double>(dim())) * max_weighted_error_.load();
    }
    [[nodiscard]] std::uint64_t inner_evaluations() const { return inner_evals_.load(); }

private:
    static constexpr double kLooseInner = 1e-2;
    ConvexFunction phi_;
    Vector x_;
    QuadSpec inner_;
    double reference_;
    double eps_;
    mutable std::atomic<double> max_weighted_error_{0.0};
    mutable std::atomic<std::uint64_t> inner_evals_{0};
};

// u -> g(A u). The integral of e^{-g} is |det A| times that of the pullback.
class LinearPullback final : public ConvexExponent {
public:
    LinearPullback(const ConvexExponent& g, Eigen::MatrixXd a) : g_(g), a_(std::move(a)), inv_(a_.inverse()) {}

    [[nodiscard]] std::size_t dim() const override { return g_.dim(); }

    [[nodiscard]] double value(std::span<const double> u) const override {
        const Eigen::Map<const Eigen::VectorXd> uv(u.data(), static_cast<Eigen::Index>(u.size()));
        const Eigen::VectorXd t = a_ * uv;
        return g_.value(std::span<const double>(t.data(), static_cast<std::size_t>(t.size())));
    }

    [[nodiscard]] bool symmetric() const override { return g_.symmetric(); }

    [[nodiscard]] std::vector<Vector> probe_directions() const override {
        std::vector<Vector> out;
        for (const auto& p : g_.probe_directions()) {
            const Eigen::Map<const Eigen::VectorXd> pv(p.data(), static_cast<Eigen::Index>(p.size()));
            const Eigen::VectorXd q = inv_ * pv;
            out.emplace_back(q.data(), q.data() + q.size());
        }
        return out;
    }

private:
    const ConvexExponent& g_;
    Eigen::MatrixXd a_;
    Eigen::MatrixXd inv_;
};

// A with g(A u) ~ g(0) + |u|^2 near 0, from a finite-difference Hessian of
// the even part of g. Identity when the estimate is not positive definite.
Eigen::MatrixXd whitening(const ConvexExponent& g, double g0) {
    const std::size_t n = g.dim();
    const auto ni = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd id = Eigen::MatrixXd::Identity(ni, ni);
    if (n < 2) return id;
    auto even = [&](const Vector& t) {
        Vector m(t);
        for (double& v : m) v = -v;
        return 0.5 * (g.value(t) + g.value(m)) - g0;
    };
    Vector step(n, 0.25);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(ni, ni);
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t i = 0; i < n; ++i) {
            Vector t(n, 0.0);
            t[i] = step[i];
            const double d = even(t);
            if (!(d > 0.0) || !std::isfinite(d)) return id;
            h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 2.0 * d / (step[i] * step[i]);
            step[i] = 1.0 / std::sqrt(h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)));
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            Vector t(n, 0.0);
            t[i] = step[i];
            t[j] = step[j];
            const double dp = even(t);
            t[j] = -step[j];
            const double dm = even(t);
            const double hij = (dp - dm) / (2.0 * step[i] * step[j]);
            h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = hij;
            h(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = hij;
        }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    const Eigen::VectorXd lam = es.eigenvalues();
    if (!(lam.minCoeff() > 1e-12 * lam.maxCoeff()) || !std::isfinite(lam.maxCoeff())) return id;
    const Eigen::VectorXd scale = (2.0 * lam.cwiseInverse()).cwiseSqrt();
    return es.eigenvectors() * scale.asDiagonal() * es.eigenvectors().transpose();
}

void check_point(const ConvexFunction& f, std::span<const double> x) {
    if (x.size() != f.dim()) throw DimensionMismatch(f.dim(), x.size());
    for (double v : x)
        if (!std::isfinite(v)) throw InvalidArgument("kernel point must be finite");
}

}  // namespace

std::string_view kernel_method_name(KernelMethod m) {
    switch (m) {
        case KernelMethod::Formula: return "formula";
        case KernelMethod::Gram: return "gram";
        case KernelMethod::Conformal: return "conformal";
        case KernelMethod::ClosedForm: return "closed_form";
    }
    return "formula";
}

KernelValue kernel_pw(const ConvexFunction& psi, std::span<const double> x, const QuadSpec& spec) {
    check_point(psi, x);
    Vector tilt(x.begin(), x.end());
    for (double& v : tilt) v *= 2.0;
    FunctionExponent g(psi, std::move(tilt));
    const ScaledIntegral s = integrate_exp_neg_scaled(g, spec);
    if (!s.converged && s.method != Method::TensorGauss && s.method != Method::MonteCarlo)
        throw ToleranceNotReached("kernel integral did not reach the requested tolerance", s.relative_error());
    return {s.value(), s.error * std::exp(s.log_scale), KernelMethod::Formula, s.evaluations};
}

KernelValue kernel_tube(const ConvexFunction& phi, std::span<const double> x, const QuadSpec& spec) {
    check_point(phi, x);
    spec.validate();
    const std::size_t n = phi.dim();
    const double tol = spec.tolerance(n);
    const double eps = 0.25 * tol * std::pow(0.75, static_cast<double>(n));
    QuadSpec inner = spec;
    inner.rel_tol = eps;
    const Vector zero(n, 0.0);
    const LogLaplaceValue at0 = log_laplace_detailed(phi, zero, inner);
    TubeExponent g(phi, Vector(x.begin(), x.end()), inner, at0.value, eps);
    // Whitened coordinates keep the outer cells balanced for elongated bodies.
    const Eigen::MatrixXd a = whitening(g, at0.value - 0.0);
    LinearPullback pulled(g, a);
    ScaledIntegral s = integrate_exp_neg_scaled(pulled, spec);
    s.log_scale += std::log(std::abs(a.determinant()));
    if (!s.converged && s.method != Method::TensorGauss && s.method != Method::MonteCarlo)
        throw ToleranceNotReached("kernel integral did not reach the requested tolerance", s.relative_error());
    const double norm = std::pow(2.0 * kPi, -static_cast<double>(n));
    KernelValue k;
    k.value = norm * s.value();
    k.error_estimate = k.value * (s.relative_error() + g.inner_error_bound());
    k.method = KernelMethod::Formula;
    k.evaluations = s.evaluations + g.inner_evaluations() + at0.evaluations;
    return k;
}

KernelValue kernel_tube(const ConvexFunction& phi, const QuadSpec& spec) {
    const Vector zero(phi.dim(), 0.0);
    return kernel_tube(phi, zero, spec);
}

ConvexFunction family_weight(const ConvexFunction& phi1, const ConvexFunction& phi2, double s) {
    if (phi1.dim() != phi2.dim()) throw DimensionMismatch(phi1.dim(), phi2.dim());
    if (!std::isfinite(s) || s == 0.0) throw InvalidArgument("family parameter s must be real and nonzero");
    const double a = std::abs(s);
    if (a == 1.0 && phi1.same_storage(phi2)) return scaled(phi1, 2.0);
    // I_K(s x) + I_K(x) is I_K for s <= 1 and I_{K/s} for s >= 1.
    using K = ConvexFunction::Kind;
    if (phi1.kind() == K::Indicator && phi2.kind() == K::Indicator && phi1.body().same_storage(phi2.body()))
        return a <= 1.0 ? phi2 : dilate(phi1, a);
    return ConvexFunction::sum({dilate(phi1, a), phi2});
}

KernelValue kernel_family_s(const ConvexFunction& phi1, const ConvexFunction& phi2, double s, const QuadSpec& spec) {
    return kernel_tube(family_weight(phi1, phi2, s), spec);
}

// ------------------------------------------------------------------ Gram

namespace {

struct GramData {
    Eigen::MatrixXcd g;
    double truncation_radius = kInf;
};

double axis_extent(const ConvexFunction& f, double sign) {
    const double d[1] = {sign};
    return f.domain_radius(d);
}

// Radius beyond which r^{2N+1} e^{-g(r)} carries negligible mass on every
// ray, from concavity of (2N+1) log r - g(r).
double gram_truncation(const PlaneWeight& w, std::size_t degree) {
    const double m = 2.0 * static_cast<double>(degree) + 1.0;
    double radius = 0.0;
    bool truncated = false;
    const int probes = 64;
    for (int k = 0; k < probes; ++k) {
        const double th = 2.0 * kPi * (k + 0.5) / probes;
        const double c = std::cos(th), s = std::sin(th);
        auto h = [&](double r) {
            const double px[1] = {r * c}, py[1] = {r * s};
            const double g = w.wx.value(px) + w.wy.value(py);
            return m * std::log(r) - g;
        };
        double r = 1.0, best = h(1.0);
        double prev_r = r, prev_h = best;
        bool done = false;
        for (int it = 0; it < 200; ++it) {
            const double r2 = 2.0 * r;
            const double h2 = h(r2);
            if (std::isinf(h2) && h2 < 0) {
                radius = std::max(radius, r2);
                done = true;
                break;
            }
            best = std::max(best, h2);
            // Past the peak with the chord slope certifying a tiny tail.
            if (h2 < prev_h && h2 < best - 60.0) {
                radius = std::max(radius, r2);
                truncated = true;
                done = true;
                break;
            }
            prev_r = r2;
            prev_h = h2;
            r = r2;
        }
        (void)prev_r;
        if (!done) throw DivergenceError("Gram weight does not decay along a ray");
    }
    return truncated ? radius : -radius;
}

std::vector<double> angular_breaks(const PlaneWeight& w, double rt) {
    const double hx = std::min(axis_extent(w.wx, 1.0), axis_extent(w.wx, -1.0));
    const double hy = std::min(axis_extent(w.wy, 1.0), axis_extent(w.wy, -1.0));
    std::vector<double> q;
    if (std::isfinite(hx) && std::isfinite(hy)) q.push_back(std::atan2(hy, hx));
    if (hx < rt) q.push_back(std::acos(std::min(1.0, hx / rt)));
    if (hy < rt) q.push_back(std::asin(std::min(1.0, hy / rt)));
    std::vector<double> b{0.0, kPi / 2, kPi, 1.5 * kPi, 2.0 * kPi};
    for (double a : q) {
        if (!(a > 0.0 && a < kPi / 2)) continue;
        b.push_back(a);
        b.push_back(kPi - a);
        b.push_back(kPi + a);
        b.push_back(2.0 * kPi - a);
    }
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end(), [](double u, double v) { return std::abs(u - v) < 1e-14; }), b.end());
    return b;
}

GramData gram_matrix(const PlaneWeight& w, std::size_t degree, std::size_t mr, std::size_t ma) {
    if (w.wx.dim() != 1 || w.wy.dim() != 1) throw InvalidArgument("Gram oracle weights must be one-dimensional");
    const double tr = gram_truncation(w, degree);
    const double rt = std::abs(tr);
    GramData out;
    out.truncation_radius = tr > 0 ? rt : kInf;
    const std::size_t mom = 2 * degree + 1;
    const auto breaks = angular_breaks(w, rt);
    const auto& ra = detail::gauss_legendre(ma);
    const auto& rr = detail::gauss_legendre(mr);
    const std::size_t nn = degree + 1;
    // Accumulate sum over angles of M_m(theta) e^{i d theta}, d = j - k.
    std::vector<std::complex<double>> acc(static_cast<std::size_t>(mom * (2 * degree + 1)), 0.0);
    auto at = [&](std::size_t m, long d) -> std::complex<double>& {
        return acc[m * (2 * degree + 1) + static_cast<std::size_t>(d + static_cast<long>(degree))];
    };
    std::vector<double> moments(mom);
    for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
        const double a = breaks[p], b = breaks[p + 1];
        const double ha = 0.5 * (b - a), ca = 0.5 * (a + b);
        for (std::size_t i = 0; i < ma; ++i) {
            const double th = ca + ha * ra.x[i];
            const double wt = ha * ra.w[i];
            const double c = std::cos(th), s = std::sin(th);
            const double dx[1] = {c}, dy[1] = {s};
            const double rmax = std::min({w.wx.domain_radius(dx), w.wy.domain_radius(dy), rt});
            std::fill(moments.begin(), moments.end(), 0.0);
            const double hr = 0.5 * rmax;
            for (std::size_t j = 0; j < mr; ++j) {
                const double r = hr * (rr.x[j] + 1.0);
                const double px[1] = {r * c}, py[1] = {r * s};
                const double e = std::exp(-(w.wx.value(px) + w.wy.value(py)));
                double term = hr * rr.w[j] * e * r;
                for (std::size_t m = 0; m < mom; ++m) {
                    moments[m] += term;
                    term *= r;
                }
            }
            for (std::size_t m = 0; m < mom; ++m) {
                const long lim = static_cast<long>(std::min(m, 2 * degree - m));
                for (long d = -lim; d <= lim; d += 2) at(m, d) += wt * moments[m] * std::polar(1.0, d * th);
            }
        }
    }
    out.g.resize(static_cast<Eigen::Index>(nn), static_cast<Eigen::Index>(nn));
    for (std::size_t j = 0; j < nn; ++j)
        for (std::size_t k = 0; k < nn; ++k)
            out.g(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) =
                at(j + k, static_cast<long>(j) - static_cast<long>(k));
    // Exact Hermitian symmetry.
    out.g = 0.5 * (out.g + out.g.adjoint()).eval();
    return out;
}

struct BlockKernels {
    std::vector<double> kernel;
    std::vector<double> condition;
};

BlockKernels block_kernels(const Eigen::MatrixXcd& g) {
    const Eigen::Index nn = g.rows();
    Eigen::VectorXd d(nn);
    for (Eigen::Index k = 0; k < nn; ++k) d(k) = 1.0 / std::sqrt(g(k, k).real());
    const Eigen::MatrixXcd gh = d.asDiagonal() * g * d.asDiagonal();
    BlockKernels out;
    for (Eigen::Index k = 0; k < nn; ++k) {
        const Eigen::VectorXd lam =
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(gh.topLeftCorner(k + 1, k + 1), Eigen::EigenvaluesOnly)
                .eigenvalues();
        const double lo = lam.minCoeff(), hi = lam.maxCoeff();
        out.condition.push_back(lo > 0.0 ? hi / lo : kInf);
    }
    // With gh = L L^*, y = L^{-1} e_0 has the same leading entries for every
    // block, and (block^{-1})_{00} = sum_{j <= k} |y_j|^2. Partial sums keep
    // the sequence monotone in exact arithmetic and in floating point.
    Eigen::MatrixXcd l = Eigen::MatrixXcd::Zero(nn, nn);
    Eigen::VectorXcd y = Eigen::VectorXcd::Zero(nn);
    double sum = 0.0;
    bool broken = false;
    for (Eigen::Index j = 0; j < nn; ++j) {
        if (!broken) {
            std::complex<double> diag = gh(j, j);
            for (Eigen::Index m = 0; m < j; ++m) diag -= l(j, m) * std::conj(l(j, m));
            if (!(diag.real() > 0.0)) {
                broken = true;
            } else {
                l(j, j) = std::sqrt(diag.real());
                for (Eigen::Index i = j + 1; i < nn; ++i) {
                    std::complex<double> v = gh(i, j);
                    for (Eigen::Index m = 0; m < j; ++m) v -= l(i, m) * std::conj(l(j, m));
                    l(i, j) = v / l(j, j);
                }
                std::complex<double> r = j == 0 ? 1.0 : 0.0;
                for (Eigen::Index m = 0; m < j; ++m) r -= l(j, m) * y(m);
                y(j) = r / l(j, j);
                sum += std::norm(y(j));
            }
        }
        out.kernel.push_back(broken ? kInf : d(0) * d(0) * sum);
    }
    return out;
}

}  // namespace

GramResult gram_oracle(const PlaneWeight& w, std::size_t degree, const GramOptions& opts) {
    const GramData coarse = gram_matrix(w, degree, opts.radial_nodes, opts.angular_nodes);
    const GramData fine = gram_matrix(w, degree, 2 * opts.radial_nodes, 2 * opts.angular_nodes);
    const BlockKernels kc = block_kernels(coarse.g);
    const BlockKernels kf = block_kernels(fine.g);
    if (!(kf.condition.back() <= opts.max_condition))
        throw IllConditioned("Gram matrix condition exceeds the limit at degree " + std::to_string(degree) +
                                 "; lower the degree",
                             kf.condition.back());
    GramResult r;
    r.degree = degree;
    r.truncation_radius = fine.truncation_radius;
    r.kernel = kf.kernel;
    r.condition = kf.condition;
    for (std::size_t k = 0; k <= degree; ++k) {
        // Quadrature difference plus the rounding amplified by conditioning.
        r.error.push_back(std::abs(kf.kernel[k] - kc.kernel[k]) +
                          kf.kernel[k] * kf.condition[k] * std::numeric_limits<double>::epsilon());
    }
    return r;
}

KernelValue kernel_gram_oracle(const PlaneWeight& w, std::size_t degree, const GramOptions& opts) {
    const GramResult r = gram_oracle(w, degree, opts);
    return {r.kernel.back(), r.error.back(), KernelMethod::Gram, 0};
}

std::size_t gram_max_degree(const PlaneWeight& w, std::size_t max_degree, const GramOptions& opts) {
    const GramData g = gram_matrix(w, max_degree, 2 * opts.radial_nodes, 2 * opts.angular_nodes);
    const BlockKernels k = block_kernels(g.g);
    std::size_t best = 0;
    for (std::size_t d = 0; d <= max_degree; ++d) {
        if (!(k.condition[d] <= opts.max_condition)) break;
        best = d;
    }
    return best;
}

KernelValue kernel_strip_conformal(double half_width) {
    if (!(half_width > 0.0) || !std::isfinite(half_width)) throw InvalidArgument("strip half-width must be positive");
    // |f'(0)|^2 / pi with f(z) = tan(pi z / (4 w)) onto the unit disk.
    const double fp = kPi / (4.0 * half_width);
    return {fp * fp / kPi, 0.0, KernelMethod::Conformal, 0};
}

// ------------------------------------------------------------ Paley-Wiener

std::string_view profile_name(Profile p) {
    switch (p) {
        case Profile::Box: return "box";
        case Profile::Triangle: return "triangle";
        case Profile::RaisedCosine: return "raised_cosine";
        case Profile::Biweight: return "biweight";
    }
    return "triangle";
}

double PWElement::value(double t) const {
    const double u = t / half_width;
    if (std::abs(u) > 1.0) return 0.0;
    switch (profile) {
        case Profile::Box: return amplitude;
        case Profile::Triangle: return amplitude * (1.0 - std::abs(u));
        case Profile::RaisedCosine: return amplitude * 0.5 * (1.0 + std::cos(kPi * u));
        case Profile::Biweight: return amplitude * (1.0 - u * u) * (1.0 - u * u);
    }
    return 0.0;
}

double PWElement::total_variation() const { return 2.0 * std::abs(amplitude); }

double PWElement::derivative_variation() const {
    const double a = std::abs(amplitude) / half_width;
    switch (profile) {
        case Profile::Box: return kInf;
        case Profile::Triangle: return 4.0 * a;
        case Profile::RaisedCosine: return 2.0 * kPi * a;
        case Profile::Biweight: return 32.0 / (3.0 * std::sqrt(3.0)) * a;
    }
    return kInf;
}

double PWElement::second_derivative_variation() const {
    const double a = std::abs(amplitude) / (half_width * half_width);
    switch (profile) {
        case Profile::Box:
        case Profile::Triangle: return kInf;
        case Profile::RaisedCosine: return 3.0 * kPi * kPi * a;
        case Profile::Biweight: return 40.0 * a;
    }
    return kInf;
}

double PWElement::l1_norm() const {
    const double s = std::abs(amplitude) * half_width;
    switch (profile) {
        case Profile::Box: return 2.0 * s;
        case Profile::Triangle: return s;
        case Profile::RaisedCosine: return s;
        case Profile::Biweight: return 16.0 / 15.0 * s;
    }
    return 0.0;
}

double PWElement::l2_norm_squared() const {
    const double s = amplitude * amplitude * half_width;
    switch (profile) {
        case Profile::Box: return 2.0 * s;
        case Profile::Triangle: return 2.0 / 3.0 * s;
        case Profile::RaisedCosine: return 0.75 * s;
        case Profile::Biweight: return 256.0 / 315.0 * s;
    }
    return 0.0;
}

std::vector<double> PWElement::breakpoints() const {
    if (profile == Profile::Triangle) return {-half_width, 0.0, half_width};
    return {-half_width, half_width};
}

std::complex<double> pw_eval(const PWElement& f, std::complex<double> z) {
    if (!(f.half_width > 0.0) || !std::isfinite(f.half_width)) throw InvalidArgument("profile half-width must be positive");
    const auto& rule = detail::gauss_legendre(32);
    const auto bp = f.breakpoints();
    std::complex<double> sum = 0.0;
    for (std::size_t s = 0; s + 1 < bp.size(); ++s) {
        const double lo = bp[s], hi = bp[s + 1];
        // Panels short enough that the phase varies by at most 24 per panel.
        const double span = (hi - lo) * std::abs(z);
        const std::size_t panels = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span / 24.0)));
        const double w = (hi - lo) / static_cast<double>(panels);
        for (std::size_t p = 0; p < panels; ++p) {
            const double a = lo + w * static_cast<double>(p);
            const double h = 0.5 * w, c = a + h;
            for (std::size_t i = 0; i < rule.x.size(); ++i) {
                const double t = c + h * rule.x[i];
                sum += h * rule.w[i] * f.value(t) * std::exp(t * z);
            }
        }
    }
    return sum;
}

IsometryResult isometry_check(const PWElement& f, const ConvexFunction& phi, const QuadSpec& spec) {
    if (phi.dim() != 1) throw InvalidArgument("isometry check is implemented for n = 1");
    if (!std::isfinite(f.derivative_variation()))
        throw InvalidArgument("isometry check needs a continuous profile (box has no certified y-tail)");
    const double tol = spec.rel_tol.value_or(1e-5);
    IsometryResult r;

    // PW side: 2 pi int |f~|^2 e^{tilde phi}.
    QuadSpec inner = spec;
    inner.rel_tol = tol / 10.0;
    double inner_err = 0.0;
    auto pw_integrand = [&](double t) {
        const double tt[1] = {t};
        const LogLaplaceValue v = log_laplace_detailed(phi, tt, inner);
        inner_err = std::max(inner_err, v.error);
        const double ft = f.value(t);
        return ft * ft * std::exp(v.value);
    };
    QuadSpec outer = spec;
    outer.rel_tol = tol;
    EndpointHints hints;
    hints.breakpoints = f.breakpoints();
    const QuadResult pw = integrate_1d(pw_integrand, -f.half_width, f.half_width, outer, hints);
    r.pw_side = 2.0 * kPi * pw.value;
    r.pw_error = 2.0 * kPi * (pw.error_estimate + pw.value * inner_err);
    if (r.pw_side == 0.0) return r;

    // Domain of phi along the real axis; profiles are even, so x -> -x is a
    // symmetry of |f(x + iy)|.
    const double xp[1] = {1.0};
    const double xmax = phi.domain_radius(xp);
    const double a = f.half_width;
    const double tv = f.total_variation(), tv1 = f.derivative_variation(), l1 = f.l1_norm();
    // |f(x + iy)| <= c_k(x) / y^k after k integrations by parts in t; the
    // y-tail beyond Y is then at most 2 int e^{-phi} c_k^2 dx / ((2k - 1) Y^{2k - 1}).
    const double tv2 = f.second_derivative_variation();
    auto c2 = [&](double x) {
        const double ax = std::abs(x);
        return std::exp(a * ax) * (tv1 + 2.0 * ax * tv + x * x * l1);
    };
    auto c3 = [&](double x) {
        const double ax = std::abs(x);
        return std::exp(a * ax) * (tv2 + 3.0 * ax * tv1 + 3.0 * x * x * tv + ax * x * x * l1);
    };
    QuadSpec loose = spec;
    loose.rel_tol = 1e-4;
    auto moment = [&](const std::function<double(double)>& c) {
        const QuadResult q = integrate_1d(
            [&](double x) {
                const double xx[1] = {x};
                const double weight = std::exp(-phi.value(xx));
                if (weight == 0.0) return 0.0;
                const double v = c(x);
                return weight * v * v;
            },
            0.0, xmax, loose);
        return 2.0 * q.value * (1.0 + 1e-3);
    };
    const double tail_target = 0.1 * tol * r.pw_side;
    const double j2 = moment(c2);
    double ymax = std::max(10.0, std::cbrt(2.0 * j2 / (3.0 * tail_target)));
    double tail = 2.0 * j2 / (3.0 * ymax * ymax * ymax);
    if (std::isfinite(tv2)) {
        const double j3 = moment(c3);
        const double y3 = std::max(10.0, std::pow(2.0 * j3 / (5.0 * tail_target), 0.2));
        if (y3 < ymax) {
            ymax = y3;
            tail = 2.0 * j3 / (5.0 * std::pow(ymax, 5.0));
        }
    }
    r.y_cutoff = ymax;

    // y-panels of width 16, each split into 4 GK21 pieces by integrate_1d.
    std::vector<double> ybreaks;
    for (double y = 16.0; y < ymax; y += 16.0) ybreaks.push_back(y);
    double y_err_rel = 0.0;
    auto x_integrand = [&](double x) {
        const double xx[1] = {x};
        const double weight = std::exp(-phi.value(xx));
        if (weight == 0.0) return 0.0;
        EndpointHints yh;
        yh.breakpoints = ybreaks;
        QuadSpec ys = spec;
        ys.rel_tol = tol / 10.0;
        ys.method = Method::Adaptive1D;
        const QuadResult yq = integrate_1d(
            [&](double y) { return std::norm(pw_eval(f, {x, y})); }, 0.0, ymax, ys, yh);
        if (yq.value > 0.0) y_err_rel = std::max(y_err_rel, yq.error_estimate / yq.value);
        return 2.0 * weight * yq.value;
    };
    QuadSpec xs = spec;
    xs.rel_tol = tol;
    const QuadResult a2 = integrate_1d(x_integrand, 0.0, xmax, xs);
    r.a2_norm_squared = 2.0 * a2.value;
    r.a2_error = 2.0 * a2.error_estimate + r.a2_norm_squared * y_err_rel + tail;
    r.residual = std::abs(r.a2_norm_squared - r.pw_side) / r.pw_side;
    return r;
}

double isometry_residual(const PWElement& f, const ConvexFunction& phi, const QuadSpec& spec) {
    return isometry_check(f, phi, spec).residual;
}

}  // namespace tubekernel
