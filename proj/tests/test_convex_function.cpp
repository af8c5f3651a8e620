#include <doctest.h>

#include <cmath>
#include <limits>
#include <string>

#include "support.hpp"
#include "tubekernel/convex_function.hpp"
#include "tubekernel/errors.hpp"

using namespace tubekernel;
using namespace testing_support;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd random_psd(Rng& rng, std::size_t n) {
    const Eigen::MatrixXd a = random_well_conditioned(rng, n);
    return a.transpose() * a;
}

// Convex grid on [-2, 2]^n sampled from |x|^2 / 2 + ||x||_1.
GridFunction sample_grid(std::size_t n) {
    Vector axis;
    for (int k = -8; k <= 8; ++k) axis.push_back(0.25 * k);
    std::vector<Vector> axes(n, axis);
    std::vector<double> values;
    std::vector<std::size_t> idx(n, 0);
    const std::size_t m = axis.size();
    std::size_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= m;
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t r = flat;
        double v = 0.0;
        for (std::size_t i = n; i-- > 0;) {
            const double x = axis[r % m];
            r /= m;
            v += 0.5 * x * x + std::abs(x);
        }
        values.push_back(v);
    }
    return GridFunction(axes, values);
}

struct Named {
    std::string name;
    ConvexFunction phi;
    bool smooth_or_indicator;
};

std::vector<Named> representations(std::size_t n, Rng& rng) {
    const Body poly = random_symmetric_polytope(n, 2 * n + 1, 31 * n);
    const Body hp = random_hpolytope(rng, n, n);
    std::vector<Named> out;
    out.push_back({"indicator", ConvexFunction::indicator(poly), true});
    out.push_back({"indicator_ball", ConvexFunction::indicator(Body::euclidean_ball(n, 1.3)), true});
    out.push_back({"support", ConvexFunction::support(hp), true});
    out.push_back({"quadratic", ConvexFunction::quadratic(random_psd(rng, n)), true});
    out.push_back({"gauge_power", ConvexFunction::gauge_power(Body::pball(n, 3.0), 2.5), true});
    out.push_back({"dilate", dilate(ConvexFunction::support(poly), 1.7), true});
    out.push_back({"sum", ConvexFunction::sum({ConvexFunction::indicator(Body::cube(n, 2.0)),
                                                ConvexFunction::quadratic(Eigen::MatrixXd::Identity(n, n))}),
                   true});
    out.push_back({"grid", ConvexFunction::grid(sample_grid(n)), false});
    return out;
}

}  // namespace

TEST_CASE("eval examples") {
    const double two[1] = {2.0};
    CHECK(eval(ConvexFunction::quadratic(Eigen::MatrixXd::Identity(1, 1)), two).value() == 2.0);
    const ConvexFunction ind = ConvexFunction::indicator(Body::cube(2));
    const double zero[2] = {0.0, 0.0}, out[2] = {2.0, 0.0}, edge[2] = {1.0, -1.0};
    CHECK(eval(ind, zero).value() == 0.0);
    CHECK(eval(ind, out).is_infinite());
    CHECK(eval(ind, edge).value() == 0.0);
    const double x[2] = {3.0, -4.0};
    // Brute force over the four vertices of the square.
    double best = -kInf;
    for (double a : {-1.0, 1.0})
        for (double b : {-1.0, 1.0}) best = std::max(best, a * x[0] + b * x[1]);
    CHECK(eval(ConvexFunction::support(Body::cube(2)), x).value() == doctest::Approx(best));
    CHECK(best == 7.0);
}

TEST_CASE("dilate examples") {
    Rng rng(2);
    const ConvexFunction q = ConvexFunction::quadratic(Eigen::MatrixXd::Identity(2, 2));
    const Body k = random_symmetric_polytope(2, 4, 3);
    const ConvexFunction h = ConvexFunction::support(k);
    for (int i = 0; i < 100; ++i) {
        const double s = rng.uniform(0.1, 4.0);
        const Vector x = random_point(rng, 2);
        CHECK(dilate(q, s).value(x) == doctest::Approx(s * s * 0.5 * (x[0] * x[0] + x[1] * x[1])));
        CHECK(dilate(h, s).value(x) == doctest::Approx(s * k.support(x)));
    }
    const double p[1] = {0.75};
    CHECK(eval(dilate(ConvexFunction::indicator(Body::cube(1)), 2.0), p).is_infinite());
    CHECK(dilate(q, 1.0).same_storage(q));
    CHECK_THROWS_AS(dilate(q, 0.0), InvalidArgument);
    CHECK_THROWS_AS(dilate(q, -1.0), InvalidArgument);
}

TEST_CASE("dilated indicator is the indicator of the shrunk body") {
    Rng rng(4);
    const Body k = random_symmetric_polytope(3, 5, 17);
    const ConvexFunction ind = ConvexFunction::indicator(k);
    for (double s : {0.5, 2.0, 3.0}) {
        const Body shrunk = k.scaled(1.0 / s);
        for (int i = 0; i < 300; ++i) {
            const Vector x = random_point(rng, 3, 0.6);
            CHECK(dilate(ind, s).value(x) == (shrunk.contains(x) ? 0.0 : kInf));
        }
    }
}

TEST_CASE("homogeneity degree") {
    Rng rng(5);
    CHECK(homogeneity_degree(ConvexFunction::quadratic(random_psd(rng, 3))) == 2.0);
    CHECK(homogeneity_degree(ConvexFunction::support(Body::euclidean_ball(2))) == 1.0);
    CHECK(homogeneity_degree(ConvexFunction::gauge_power(Body::cube(2), 1.0)) == 1.0);
    CHECK(homogeneity_degree(ConvexFunction::gauge_power(Body::cube(2), 3.5)) == 3.5);
    CHECK_FALSE(homogeneity_degree(ConvexFunction::indicator(Body::cube(2))).has_value());
    CHECK_FALSE(homogeneity_degree(ConvexFunction::sum({ConvexFunction::support(Body::cube(2)),
                                                        ConvexFunction::quadratic(Eigen::MatrixXd::Identity(2, 2))}))
                    .has_value());
    CHECK(homogeneity_degree(ConvexFunction::sum({ConvexFunction::support(Body::cube(2)),
                                                  ConvexFunction::support(Body::euclidean_ball(2))})) == 1.0);
    CHECK(homogeneity_degree(dilate(ConvexFunction::quadratic(Eigen::MatrixXd::Identity(1, 1)), 3.0)) == 2.0);
    CHECK_FALSE(homogeneity_degree(ConvexFunction::grid(sample_grid(1))).has_value());
}

TEST_CASE("structural degree matches sampled scaling") {
    Rng rng(6);
    for (std::size_t n = 1; n <= 3; ++n) {
        for (const auto& r : representations(n, rng)) {
            const auto p = homogeneity_degree(r.phi);
            if (!p) continue;
            for (int i = 0; i < 100; ++i) {
                const Vector x = random_point(rng, n, 0.3);
                const double s = rng.uniform(0.2, 3.0);
                Vector sx = x;
                for (double& v : sx) v *= s;
                CHECK(r.phi.value(sx) == doctest::Approx(std::pow(s, *p) * r.phi.value(x)).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("symmetry, vanishing at 0 and midpoint convexity for every representation") {
    Rng rng(7);
    for (std::size_t n = 1; n <= 3; ++n) {
        for (const auto& r : representations(n, rng)) {
            CAPTURE(r.name);
            CAPTURE(n);
            const Vector zero(n, 0.0);
            CHECK(r.phi.value(zero) == 0.0);
            int finite_pairs = 0;
            for (int i = 0; i < 1000; ++i) {
                const Vector x = random_point(rng, n, 0.8), y = random_point(rng, n, 0.8);
                Vector mx = x, mid(n);
                for (double& v : mx) v = -v;
                for (std::size_t j = 0; j < n; ++j) mid[j] = 0.5 * (x[j] + y[j]);
                const double fx = r.phi.value(x), fy = r.phi.value(y), fm = r.phi.value(mid);
                CHECK(fx == r.phi.value(mx));
                CHECK_FALSE(std::isnan(fx));
                if (std::isinf(fx) || std::isinf(fy)) continue;
                ++finite_pairs;
                CHECK(std::isfinite(fm));
                const double slack = r.smooth_or_indicator ? 1e-12 * (1.0 + std::abs(fx) + std::abs(fy)) : 1e-9;
                CHECK(fm <= 0.5 * (fx + fy) + slack);
            }
            CHECK(finite_pairs > 50);
        }
    }
}

TEST_CASE("nested dilations compose") {
    Rng rng(8);
    for (std::size_t n = 1; n <= 3; ++n) {
        for (const auto& r : representations(n, rng)) {
            for (int i = 0; i < 50; ++i) {
                const double s = rng.uniform(0.3, 3.0), t = rng.uniform(0.3, 3.0);
                const Vector x = random_point(rng, n, 0.5);
                const double a = dilate(dilate(r.phi, s), t).value(x), b = dilate(r.phi, s * t).value(x);
                if (std::isinf(b)) {
                    CHECK(std::isinf(a));
                } else {
                    CHECK(a == doctest::Approx(b).epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("sum absorbs infinity") {
    const ConvexFunction s = ConvexFunction::sum(
        {ConvexFunction::indicator(Body::cube(2)), ConvexFunction::support(Body::euclidean_ball(2))});
    const double in[2] = {0.6, 0.8}, out[2] = {1.5, 0.0};
    CHECK(eval(s, in).value() == doctest::Approx(1.0));
    CHECK(eval(s, out).is_infinite());
    CHECK_FALSE(std::isnan(s.value(out)));
}

TEST_CASE("grid evaluation is multilinear inside and infinite outside") {
    const ConvexFunction g = ConvexFunction::grid(sample_grid(2));
    const double node[2] = {0.5, -0.25};
    CHECK(g.value(node) == doctest::Approx(0.125 + 0.5 + 0.03125 + 0.25));
    // Halfway between x = 0.25 and x = 0.5 on the second axis, at a node of the first.
    const double half[2] = {0.0, 0.375};
    const double lo = 0.03125 + 0.25, hi = 0.125 + 0.5;
    CHECK(g.value(half) == doctest::Approx(0.5 * (lo + hi)));
    const double outside[2] = {2.01, 0.0};
    CHECK(std::isinf(g.value(outside)));
    const double corner[2] = {2.0, -2.0};
    CHECK(std::isfinite(g.value(corner)));
}

TEST_CASE("invalid functions are rejected") {
    Eigen::MatrixXd indefinite(2, 2);
    indefinite << 1.0, 0.0, 0.0, -1.0;
    CHECK_THROWS_AS(ConvexFunction::quadratic(indefinite), InvalidArgument);
    Eigen::MatrixXd asym(2, 2);
    asym << 1.0, 0.5, 0.0, 1.0;
    CHECK_THROWS_AS(ConvexFunction::quadratic(asym), InvalidArgument);
    CHECK_THROWS_AS(ConvexFunction::gauge_power(Body::cube(2), 0.5), InvalidArgument);
    CHECK_THROWS_AS(ConvexFunction::sum({ConvexFunction::indicator(Body::cube(2)),
                                         ConvexFunction::indicator(Body::cube(3))}),
                    DimensionMismatch);
    const double x3[3] = {0.0, 0.0, 0.0};
    CHECK_THROWS_AS(eval(ConvexFunction::indicator(Body::cube(2)), x3), DimensionMismatch);

    CHECK_THROWS_AS(GridFunction({{-1.0, 0.0, 2.0}}, {1.0, 0.0, 4.0}), InvalidArgument);     // asymmetric nodes
    CHECK_THROWS_AS(GridFunction({{-1.0, -0.5, 0.5, 1.0}}, {1, 0.2, 0.2, 1}), InvalidArgument);  // no 0 node
    CHECK_THROWS_AS(GridFunction({{-1.0, 0.0, 1.0}}, {1.0, 0.5, 1.0}), InvalidArgument);      // phi(0) != 0
    CHECK_THROWS_AS(GridFunction({{-1.0, 0.0, 1.0}}, {2.0, 0.0, 1.0}), InvalidArgument);      // asymmetric values
    CHECK_THROWS_AS(GridFunction({{-2.0, -1.0, 0.0, 1.0, 2.0}}, {1.0, 1.5, 0.0, 1.5, 1.0}), InvalidArgument);
    CHECK_THROWS_AS(GridFunction({{-1.0, 0.0, 1.0}}, {std::nan(""), 0.0, 1.0}), InvalidArgument);
    CHECK_NOTHROW(GridFunction({{-1.0, 0.0, 1.0}}, {kInf, 0.0, kInf}));
}
