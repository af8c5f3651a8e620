#pragma once

// Hand-rolled generators and small oracles shared by the unit tests.

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <vector>

#include "tubekernel/body.hpp"
#include "tubekernel/random.hpp"

namespace testing_support {

using tubekernel::Body;
using tubekernel::Rng;
using tubekernel::Vector;

inline Vector random_point(Rng& rng, std::size_t n, double scale = 1.0) {
    Vector x(n);
    for (double& v : x) v = scale * rng.normal();
    return x;
}

inline Vector random_unit(Rng& rng, std::size_t n) {
    Vector x = random_point(rng, n);
    double s = 0.0;
    for (double v : x) s += v * v;
    s = std::sqrt(s);
    for (double& v : x) v /= s;
    return x;
}

// Symmetric H-polytope: the coordinate slabs plus `extra` random slab pairs,
// all offsets in [0.5, 1.5].
inline Body random_hpolytope(Rng& rng, std::size_t n, std::size_t extra) {
    std::vector<Vector> normals;
    std::vector<double> offsets;
    auto add = [&](Vector a, double b) {
        Vector m = a;
        for (double& v : m) v = -v;
        normals.push_back(std::move(a));
        offsets.push_back(b);
        normals.push_back(std::move(m));
        offsets.push_back(b);
    };
    for (std::size_t i = 0; i < n; ++i) {
        Vector e(n, 0.0);
        e[i] = 1.0;
        add(e, rng.uniform(0.5, 1.5));
    }
    for (std::size_t k = 0; k < extra; ++k) add(random_unit(rng, n), rng.uniform(0.5, 1.5));
    return Body::hpolytope(normals, offsets);
}

// Matrix with singular values in [0.5, 2].
inline Eigen::MatrixXd random_well_conditioned(Rng& rng, std::size_t n) {
    const auto m = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd g(m, m), h(m, m);
    for (Eigen::Index r = 0; r < m; ++r)
        for (Eigen::Index c = 0; c < m; ++c) {
            g(r, c) = rng.normal();
            h(r, c) = rng.normal();
        }
    const Eigen::MatrixXd u = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
    const Eigen::MatrixXd v = Eigen::HouseholderQR<Eigen::MatrixXd>(h).householderQ();
    Eigen::VectorXd s(m);
    for (Eigen::Index i = 0; i < m; ++i) s(i) = rng.uniform(0.5, 2.0);
    return u * s.asDiagonal() * v.transpose();
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

inline constexpr double kPi = std::numbers::pi;

}  // namespace testing_support
