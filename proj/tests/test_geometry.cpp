#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "support.hpp"
#include "tubekernel/body.hpp"
#include "tubekernel/errors.hpp"

using namespace tubekernel;
using namespace testing_support;

namespace {

// Brute-force polar membership: t.v <= 1 for every vertex v of K.
bool in_polar_by_vertices(const Body& k, std::span<const double> t) {
    for (const auto& v : k.vertices()) {
        double s = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * t[i];
        if (s > 1.0 + 1e-12) return false;
    }
    return true;
}

bool same_point_set(std::vector<Vector> a, std::vector<Vector> b, double tol) {
    if (a.size() != b.size()) return false;
    for (const auto& p : a) {
        auto it = std::find_if(b.begin(), b.end(), [&](const Vector& q) {
            for (std::size_t i = 0; i < p.size(); ++i)
                if (std::abs(p[i] - q[i]) > tol) return false;
            return true;
        });
        if (it == b.end()) return false;
        b.erase(it);
    }
    return true;
}

}  // namespace

TEST_CASE("polar of the cube is the cross-polytope") {
    for (std::size_t n = 1; n <= 3; ++n) {
        const Body cube = Body::cube(n);
        const Body p = polar(cube);
        Rng rng(n);
        for (int i = 0; i < 500; ++i) {
            const Vector t = random_point(rng, n, 0.7);
            double l1 = 0.0;
            for (double v : t) l1 += std::abs(v);
            if (std::abs(l1 - 1.0) < 1e-9) continue;
            CHECK(p.contains(t) == (l1 <= 1.0));
            CHECK(p.contains(t) == in_polar_by_vertices(cube, t));
        }
        CHECK(volume(p).value == doctest::Approx(std::pow(2.0, n) / std::tgamma(n + 1.0)).epsilon(1e-12));
    }
}

TEST_CASE("euclidean ball is self-polar") {
    const Body b = Body::euclidean_ball(3);
    const Body p = polar(b);
    CHECK(p.kind() == Body::Kind::PBall);
    CHECK(p.p() == 2.0);
    CHECK(p.radius() == doctest::Approx(1.0));
    const Body q = polar(Body::pball(2, 1.0, 2.0));
    CHECK(std::isinf(q.p()));
    CHECK(q.radius() == doctest::Approx(0.5));
}

TEST_CASE("volumes") {
    CHECK(volume(Body::cube(3)).value == doctest::Approx(8.0));
    CHECK(volume(Body::cube(3)).exact);
    CHECK(volume(Body::cube(3)).error_estimate == 0.0);
    CHECK(volume(Body::cross_polytope(3)).value == doctest::Approx(4.0 / 3.0).epsilon(1e-13));
    CHECK(volume(Body::euclidean_ball(2)).value == doctest::Approx(kPi).epsilon(1e-14));
    CHECK(volume(Body::euclidean_ball(3)).value == doctest::Approx(4.0 * kPi / 3.0).epsilon(1e-14));
}

TEST_CASE("support function examples") {
    const Body c = Body::cube(2);
    const double x[2] = {3.0, -4.0};
    CHECK(support_function(c, x) == doctest::Approx(7.0));
    const double z[2] = {0.0, 0.0};
    CHECK(support_function(c, z) == 0.0);
    const Body b = Body::euclidean_ball(2);
    CHECK(support_function(b, x) == doctest::Approx(5.0));
    // H-representation goes through the LP route.
    Rng rng(3);
    const Body h = random_hpolytope(rng, 3, 4);
    for (int i = 0; i < 50; ++i) {
        const Vector t = random_point(rng, 3);
        double best = -1e300;
        for (const auto& v : h.vertices()) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += v[k] * t[k];
            best = std::max(best, s);
        }
        CHECK(h.support(t) == doctest::Approx(best).epsilon(1e-10));
    }
}

TEST_CASE("mahler product examples") {
    CHECK(mahler_product(Body::cube(2)).value == doctest::Approx(8.0));
    CHECK(mahler_product(Body::euclidean_ball(2)).value == doctest::Approx(kPi * kPi));
    CHECK(mahler_product(Body::cube(1)).value == doctest::Approx(4.0));
}

TEST_CASE("bipolar property on random H-polytopes") {
    Rng rng(42);
    for (std::size_t n = 1; n <= 3; ++n) {
        for (int rep = 0; rep < 15; ++rep) {
            const Body k = random_hpolytope(rng, n, n == 1 ? 0 : 1 + rep % 4);
            const Body back = polar(polar(k));
            CHECK(same_point_set(k.vertices(), back.vertices(), 1e-12));
        }
    }
}

TEST_CASE("Monte-Carlo volume within 3 standard errors") {
    Rng rng(5);
    std::vector<Body> bodies = {Body::cube(3), Body::cross_polytope(3), Body::euclidean_ball(3),
                                random_hpolytope(rng, 2, 3), random_hpolytope(rng, 3, 3),
                                random_symmetric_polytope(3, 6, 9)};
    std::uint64_t seed = 1;
    for (const auto& k : bodies) {
        const VolumeResult exact = volume(k, VolumeMode::Exact);
        const VolumeResult mc = volume(k, VolumeMode::MonteCarlo, {200'000, seed++});
        CHECK_FALSE(mc.exact);
        CHECK(mc.error_estimate > 0.0);
        CHECK(std::abs(mc.value - exact.value) <= 3.0 * mc.error_estimate);
    }
}

TEST_CASE("support function is 1-homogeneous and subadditive") {
    Rng rng(8);
    for (std::size_t n = 1; n <= 3; ++n) {
        const Body k = random_symmetric_polytope(n, 2 * n, 100 + n);
        for (int i = 0; i < 200; ++i) {
            const Vector x = random_point(rng, n), y = random_point(rng, n);
            const double s = rng.uniform(0.0, 5.0);
            Vector sx = x, xy = x;
            for (std::size_t j = 0; j < n; ++j) {
                sx[j] *= s;
                xy[j] += y[j];
            }
            CHECK(k.support(sx) == doctest::Approx(s * k.support(x)).epsilon(1e-12));
            CHECK(k.support(xy) <= k.support(x) + k.support(y) + 1e-12);
        }
    }
}

TEST_CASE("mahler product is invariant under linear images") {
    Rng rng(21);
    for (std::size_t n = 1; n <= 3; ++n) {
        for (int rep = 0; rep < 5; ++rep) {
            const Body k = rep % 2 ? random_hpolytope(rng, n, 2) : random_symmetric_polytope(n, 2 * n, 7 * rep + n);
            const Eigen::MatrixXd t = random_well_conditioned(rng, n);
            const double a = mahler_product(k).value, b = mahler_product(k.linear_image(t)).value;
            CHECK(rel_diff(a, b) <= 1e-9);
        }
    }
}

TEST_CASE("invalid bodies are rejected") {
    CHECK_THROWS_AS(Body::vpolytope({{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}}), InvalidArgument);
    CHECK_THROWS_AS(Body::vpolytope({{1.0, 1.0}, {-1.0, -1.0}}), InvalidArgument);
    CHECK_THROWS_AS(Body::hpolytope({{1.0, 0.0}, {-1.0, 0.0}}, {1.0, 1.0}), InvalidArgument);
    CHECK_THROWS_AS(Body::hpolytope({{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}}, {1.0, 2.0, 1.0, 1.0}),
                    InvalidArgument);
    CHECK_THROWS_AS(Body::pball(2, 0.5), InvalidArgument);
    CHECK_THROWS_AS(Body::cube(2, 1e-12), InvalidArgument);
    CHECK_THROWS_AS(Body::vpolytope({{1e-12, 0.0}, {-1e-12, 0.0}, {0.0, 1e-12}, {0.0, -1e-12}}), InvalidArgument);
    CHECK_THROWS_AS(Body::hpolytope({{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}}, {-1.0, -1.0, 1.0, 1.0}),
                    InvalidArgument);
    CHECK_THROWS_AS(Body::euclidean_ball(2, 0.0), InvalidArgument);
    CHECK_THROWS_AS(Body::pball(2, 1.5).linear_image(Eigen::MatrixXd::Identity(2, 2)), InvalidArgument);
    CHECK_THROWS_AS(Body::cube(2).linear_image(Eigen::MatrixXd::Zero(2, 2)), InvalidArgument);
}
