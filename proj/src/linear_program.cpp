#include "tubekernel/linear_program.hpp"

#include <cmath>
#include <limits>

#include "tubekernel/errors.hpp"

namespace tubekernel::detail {

// Dense tableau simplex with Bland's rule. Columns: t+ (n), t- (n), slacks (m).
double maximize_over_polyhedron(std::span<const double> c, std::span<const double> a,
                                std::span<const double> b) {
    const std::size_t n = c.size();
    const std::size_t m = b.size();
    if (a.size() != m * n) throw InvalidArgument("linear program: constraint matrix shape");
    for (double bi : b)
        if (!(bi > 0.0)) throw InvalidArgument("linear program: offsets must be positive");

    const std::size_t cols = 2 * n + m;
    const std::size_t width = cols + 1;  // last column is the rhs
    std::vector<double> tab((m + 1) * width, 0.0);
    auto at = [&](std::size_t r, std::size_t col) -> double& { return tab[r * width + col]; };

    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            at(i, j) = a[i * n + j];
            at(i, n + j) = -a[i * n + j];
        }
        at(i, 2 * n + i) = 1.0;
        at(i, cols) = b[i];
    }
    // Objective row holds reduced costs for minimizing -c.t.
    for (std::size_t j = 0; j < n; ++j) {
        at(m, j) = -c[j];
        at(m, n + j) = c[j];
    }
    std::vector<std::size_t> basis(m);
    for (std::size_t i = 0; i < m; ++i) basis[i] = 2 * n + i;

    constexpr double eps = 1e-12;
    for (int iter = 0; iter < 10000; ++iter) {
        std::size_t enter = cols;
        for (std::size_t j = 0; j < cols; ++j) {
            if (at(m, j) < -eps) {
                enter = j;
                break;
            }
        }
        if (enter == cols) return at(m, cols);

        std::size_t leave = m;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < m; ++i) {
            const double coef = at(i, enter);
            if (coef > eps) {
                const double ratio = at(i, cols) / coef;
                if (ratio < best - eps || (std::abs(ratio - best) <= eps && leave < m &&
                                           basis[i] < basis[leave])) {
                    best = ratio;
                    leave = i;
                }
            }
        }
        if (leave == m) return std::numeric_limits<double>::infinity();

        const double pivot = at(leave, enter);
        for (std::size_t j = 0; j < width; ++j) at(leave, j) /= pivot;
        for (std::size_t i = 0; i <= m; ++i) {
            if (i == leave) continue;
            const double f = at(i, enter);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < width; ++j) at(i, j) -= f * at(leave, j);
        }
        basis[leave] = enter;
    }
    throw std::runtime_error("linear program: iteration limit reached");
}

}  // namespace tubekernel::detail
