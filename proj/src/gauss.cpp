#include "tubekernel/gauss.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace tubekernel::detail {

namespace {

Rule compute_gauss_legendre(std::size_t m) {
    Rule r;
    r.x.resize(m);
    r.w.resize(m);
    const std::size_t half = (m + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
        double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(m) + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (std::size_t k = 1; k <= m; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * static_cast<double>(k) - 1.0) * z * p1 - (static_cast<double>(k) - 1.0) * p2) /
                     static_cast<double>(k);
            }
            dp = static_cast<double>(m) * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        r.x[i] = -z;
        r.x[m - 1 - i] = z;
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        r.w[i] = w;
        r.w[m - 1 - i] = w;
    }
    if (m % 2 == 1) r.x[m / 2] = 0.0;
    return r;
}

}  // namespace

const Rule& gauss_legendre(std::size_t m) {
    static std::mutex mu;
    static std::map<std::size_t, std::unique_ptr<Rule>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[m];
    if (!slot) slot = std::make_unique<Rule>(compute_gauss_legendre(m));
    return *slot;
}

const std::vector<TriangleNode>& triangle_rule(std::size_t m) {
    static std::mutex mu;
    static std::map<std::size_t, std::unique_ptr<std::vector<TriangleNode>>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[m];
    if (!slot) {
        const Rule g = compute_gauss_legendre(m);
        auto nodes = std::make_unique<std::vector<TriangleNode>>();
        for (std::size_t i = 0; i < m; ++i) {
            const double u = 0.5 * (g.x[i] + 1.0);
            for (std::size_t j = 0; j < m; ++j) {
                const double v = 0.5 * (g.x[j] + 1.0);
                nodes->push_back({1.0 - u, u * (1.0 - v), u * v, 0.25 * g.w[i] * g.w[j] * u});
            }
        }
        slot = std::move(nodes);
    }
    return *slot;
}

}  // namespace tubekernel::detail
