#include <doctest.h>

#include <cmath>
#include <limits>

#include "support.hpp"
#include "tubekernel/errors.hpp"
#include "tubekernel/transforms.hpp"

using namespace tubekernel;
using namespace testing_support;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// sup_x (t x - f(x)) by scanning a fine grid on [lo, hi].
template <class F>
double dense_scan_conjugate(F f, double t, double lo, double hi, int nodes) {
    double best = -kInf;
    for (int i = 0; i < nodes; ++i) {
        const double x = lo + (hi - lo) * i / (nodes - 1);
        best = std::max(best, t * x - f(x));
    }
    return best;
}

ConvexFunction one_d_grid(double half_width, std::size_t count, double (*f)(double)) {
    const Vector axis = symmetric_axis(half_width, count);
    std::vector<double> vals;
    for (double x : axis) vals.push_back(f(x));
    return ConvexFunction::grid(GridFunction({axis}, vals));
}

double quartic(double x) { return 0.25 * x * x * x * x; }

}  // namespace

TEST_CASE("analytic Legendre rules") {
    const TransformResult q = legendre(ConvexFunction::quadratic(Eigen::MatrixXd::Identity(2, 2)));
    CHECK(q.provenance == Provenance::Analytic);
    REQUIRE(q.function.kind() == ConvexFunction::Kind::Quadratic);
    CHECK((q.function.matrix() - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-15);

    const Body k = random_symmetric_polytope(3, 4, 8);
    const TransformResult h = legendre(ConvexFunction::indicator(k));
    REQUIRE(h.function.kind() == ConvexFunction::Kind::Support);
    CHECK(h.function.body().same_storage(k));
    const TransformResult back = legendre(h.function);
    REQUIRE(back.function.kind() == ConvexFunction::Kind::Indicator);
    CHECK(back.function.body().same_storage(k));

    Eigen::MatrixXd m(2, 2);
    m << 2.0, 0.5, 0.5, 1.0;
    const TransformResult qm = legendre(ConvexFunction::quadratic(m));
    CHECK((qm.function.matrix() - m.inverse()).norm() < 1e-14);
}

TEST_CASE("dilation rule for the conjugate") {
    Rng rng(3);
    Eigen::MatrixXd m(2, 2);
    m << 3.0, 1.0, 1.0, 2.0;
    const ConvexFunction phi = ConvexFunction::quadratic(m);
    for (double s : {0.5, 2.0, 3.0}) {
        const ConvexFunction d = legendre(dilate(phi, s)).function;
        for (int i = 0; i < 50; ++i) {
            const Vector t = random_point(rng, 2);
            Vector ts = t;
            for (double& v : ts) v /= s;
            CHECK(d.value(t) == doctest::Approx(conjugate_at(phi, ts)).epsilon(1e-12));
        }
    }
}

TEST_CASE("grid Legendre of the quartic") {
    // The conjugate of x^4/4 is (3/4)|t|^{4/3}; the grid answer is also checked
    // against a dense scan of the same sampled data.
    const ConvexFunction f = one_d_grid(3.0, 2001, quartic);
    const Vector dual = symmetric_axis(2.0, 401);
    LegendreOptions opts;
    opts.dual_axes = std::vector<Vector>{dual};
    const TransformResult r = legendre(f, opts);
    CHECK(r.provenance == Provenance::Grid);
    CHECK(r.warnings.empty());
    double worst = 0.0, worst_scan = 0.0;
    for (double t : dual) {
        const double tt[1] = {t};
        const double v = r.function.value(tt);
        worst = std::max(worst, std::abs(v - 0.75 * std::pow(std::abs(t), 4.0 / 3.0)));
        worst_scan = std::max(worst_scan, std::abs(v - dense_scan_conjugate(quartic, t, -3.0, 3.0, 2001)));
    }
    CHECK(worst <= 2e-3);
    CHECK(worst_scan <= 1e-12);
}

TEST_CASE("grid Legendre warns outside the slope range") {
    const ConvexFunction f = one_d_grid(1.0, 101, [](double x) { return 0.5 * x * x; });
    LegendreOptions opts;
    opts.dual_axes = std::vector<Vector>{symmetric_axis(3.0, 61)};
    const TransformResult r = legendre(f, opts);
    CHECK_FALSE(r.warnings.empty());
    // Beyond slope 1 the conjugate of the truncated data is linear: |t| - 1/2.
    const double t[1] = {3.0};
    CHECK(r.function.value(t) == doctest::Approx(2.5));
}

TEST_CASE("grid Legendre in two dimensions matches the separable answer") {
    const Vector axis = symmetric_axis(2.0, 81);
    std::vector<double> vals;
    for (double x : axis)
        for (double y : axis) vals.push_back(0.5 * x * x + y * y);
    const ConvexFunction f = ConvexFunction::grid(GridFunction({axis, axis}, vals));
    LegendreOptions opts;
    const Vector dual = symmetric_axis(1.0, 21);
    opts.dual_axes = std::vector<Vector>{dual, dual};
    const ConvexFunction g = legendre(f, opts).function;
    for (double s : dual)
        for (double t : dual) {
            const double p[2] = {s, t};
            // Conjugate of x^2/2 + y^2 is s^2/2 + t^2/4; grid spacing 0.05 bounds the error.
            CHECK(g.value(p) == doctest::Approx(0.5 * s * s + 0.25 * t * t).epsilon(0).scale(1.0).epsilon(2e-3));
            CHECK(g.value(p) <= 0.5 * s * s + 0.25 * t * t + 1e-12);
        }
}

TEST_CASE("Fenchel-Young inequality and equality on the subgradient") {
    Rng rng(4);
    for (std::size_t n = 1; n <= 3; ++n) {
        const Eigen::MatrixXd a = random_well_conditioned(rng, n);
        const Eigen::MatrixXd m = a.transpose() * a;
        const ConvexFunction q = ConvexFunction::quadratic(m);
        const Body k = random_symmetric_polytope(n, n + 2, 50 + n);
        const ConvexFunction h = ConvexFunction::support(k);
        const ConvexFunction gp = ConvexFunction::gauge_power(Body::pball(n, 3.0), 3.0);
        for (int i = 0; i < 200; ++i) {
            const Vector x = random_point(rng, n), t = random_point(rng, n);
            double xt = 0.0;
            for (std::size_t j = 0; j < n; ++j) xt += x[j] * t[j];
            for (const auto* phi : {&q, &h, &gp}) {
                const double lhs = phi->value(x) + conjugate_at(*phi, t);
                CHECK(lhs >= xt - 1e-12 * (1.0 + std::abs(xt)));
            }
            // t = Mx is the gradient of x.Mx/2.
            Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(n));
            const Eigen::VectorXd grad = m * xv;
            const Vector g(grad.data(), grad.data() + n);
            CHECK(q.value(x) + conjugate_at(q, g) == doctest::Approx(xv.dot(grad)).epsilon(1e-8));
            // For h_K the subgradient at x is a maximizing vertex; h_K(x) + I_K(v) = x.v.
            double best = -kInf;
            Vector arg;
            for (const auto& v : k.vertices()) {
                double s = 0.0;
                for (std::size_t j = 0; j < n; ++j) s += v[j] * x[j];
                if (s > best) {
                    best = s;
                    arg = v;
                }
            }
            CHECK(h.value(x) + conjugate_at(h, arg) == doctest::Approx(best).epsilon(1e-10));
        }
    }
}

TEST_CASE("biconjugation recovers the function inside the grid") {
    const ConvexFunction f = one_d_grid(2.0, 801, [](double x) { return 0.5 * x * x + std::abs(x); });
    LegendreOptions o1;
    o1.dual_axes = std::vector<Vector>{symmetric_axis(3.0, 1201)};
    const ConvexFunction star = legendre(f, o1).function;
    LegendreOptions o2;
    o2.dual_axes = std::vector<Vector>{symmetric_axis(1.5, 301)};
    const ConvexFunction bi = legendre(star, o2).function;
    for (double x : symmetric_axis(1.5, 301)) {
        const double p[1] = {x};
        CHECK(bi.value(p) == doctest::Approx(0.5 * x * x + std::abs(x)).epsilon(0).scale(1).epsilon(1e-5));
    }
}

TEST_CASE("log-Laplace examples") {
    const ConvexFunction sq = ConvexFunction::quadratic(2.0 * Eigen::MatrixXd::Identity(1, 1));
    for (double t : {0.0, 0.3, -1.2, 2.5}) {
        const double p[1] = {t};
        CHECK(log_laplace(sq, p) == doctest::Approx(t * t + 0.5 * std::log(kPi)).epsilon(1e-8));
    }
    const ConvexFunction box = ConvexFunction::indicator(Body::cube(1));
    for (double t : {0.1, 1.0, -3.0, 40.0}) {
        const double p[1] = {t};
        // log(sinh(2t)/t), written to avoid overflow for large t.
        const double expect = 2.0 * std::abs(t) + std::log1p(-std::exp(-4.0 * std::abs(t))) - std::log(2.0 * std::abs(t));
        CHECK(log_laplace(box, p) == doctest::Approx(expect).epsilon(1e-8));
    }
    const double zero[1] = {0.0};
    CHECK(log_laplace(box, zero) == doctest::Approx(std::log(2.0)).epsilon(1e-10));
    for (std::size_t n = 2; n <= 3; ++n) {
        const ConvexFunction phi = ConvexFunction::support(random_symmetric_polytope(n, n + 1, 60 + n));
        const Vector z(n, 0.0);
        CHECK(log_laplace(phi, z) == doctest::Approx(std::log(integrate_exp_neg(phi).value)).epsilon(1e-6));
    }
}

TEST_CASE("log-Laplace diverges outside the domain") {
    const ConvexFunction h = ConvexFunction::support(Body::cube(1));
    const double t[1] = {0.6};
    CHECK_THROWS_AS(log_laplace(h, t), DivergenceError);
}

TEST_CASE("log-Laplace is symmetric and midpoint convex") {
    Rng rng(5);
    for (std::size_t n = 1; n <= 2; ++n) {
        const ConvexFunction phi = ConvexFunction::sum(
            {ConvexFunction::support(random_symmetric_polytope(n, n + 1, 70 + n)),
             ConvexFunction::indicator(Body::euclidean_ball(n, 2.0))});
        for (int i = 0; i < 10; ++i) {
            const Vector s = random_point(rng, n), t = random_point(rng, n);
            Vector ms = s, mid(n);
            for (double& v : ms) v = -v;
            for (std::size_t j = 0; j < n; ++j) mid[j] = 0.5 * (s[j] + t[j]);
            const LogLaplaceValue a = log_laplace_detailed(phi, s), b = log_laplace_detailed(phi, t),
                                  c = log_laplace_detailed(phi, mid), d = log_laplace_detailed(phi, ms);
            CHECK(std::abs(a.value - d.value) <= a.error + d.error + 1e-12);
            CHECK(c.value <= 0.5 * (a.value + b.value) + c.error + 0.5 * (a.error + b.error));
        }
    }
}

TEST_CASE("log-Laplace is additive under convolution of Gaussians") {
    // e^{-x.Ax/2} * e^{-x.Bx/2} = c e^{-x.Cx/2}, C = (A^-1 + B^-1)^-1,
    // c = (2 pi)^{n/2} / sqrt(det(A + B)).
    Rng rng(6);
    for (std::size_t n = 1; n <= 2; ++n) {
        const Eigen::MatrixXd ra = random_well_conditioned(rng, n), rb = random_well_conditioned(rng, n);
        const Eigen::MatrixXd a = ra.transpose() * ra, b = rb.transpose() * rb;
        const Eigen::MatrixXd cm = (a.inverse() + b.inverse()).inverse();
        const double log_c = 0.5 * static_cast<double>(n) * std::log(2.0 * kPi) - 0.5 * std::log((a + b).determinant());
        const ConvexFunction fa = ConvexFunction::quadratic(a), fb = ConvexFunction::quadratic(b),
                             fc = ConvexFunction::quadratic(0.5 * (cm + cm.transpose()));
        for (int i = 0; i < 5; ++i) {
            const Vector t = random_point(rng, n, 0.5);
            const double lhs = log_laplace(fa, t) + log_laplace(fb, t);
            const double rhs = log_laplace(fc, t) + log_c;
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-7));
        }
    }
}

TEST_CASE("midpoint lower bound examples") {
    const double zero[1] = {0.0};
    const MidpointBound g = log_laplace_midpoint_lower(ConvexFunction::quadratic(Eigen::MatrixXd::Identity(1, 1)), zero);
    CHECK(g.lhs == doctest::Approx(std::sqrt(kPi)).epsilon(1e-8));
    CHECK(g.rhs == doctest::Approx(0.5 * std::sqrt(2.0 * kPi)).epsilon(1e-8));
    CHECK(g.lhs > g.rhs);
    const MidpointBound b = log_laplace_midpoint_lower(ConvexFunction::indicator(Body::cube(1)), zero);
    CHECK(b.lhs == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(b.rhs == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("errors") {
    Eigen::MatrixXd singular = Eigen::MatrixXd::Zero(2, 2);
    singular(0, 0) = 1.0;
    CHECK_THROWS_AS(legendre(ConvexFunction::quadratic(singular)), InvalidArgument);
    const ConvexFunction s = ConvexFunction::sum({ConvexFunction::indicator(Body::cube(1)),
                                                  ConvexFunction::quadratic(Eigen::MatrixXd::Identity(1, 1))});
    const double t[1] = {0.5};
    CHECK_THROWS_AS(conjugate_at(s, t), NotComputable);
    CHECK_THROWS_AS(legendre(s), InvalidArgument);
    CHECK_THROWS_AS(symmetric_axis(1.0, 4), InvalidArgument);
}
