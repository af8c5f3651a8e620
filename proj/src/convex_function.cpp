#include "tubekernel/convex_function.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "tubekernel/errors.hpp"

namespace tubekernel {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Small-buffer scratch vector for the evaluation hot path.
class Scratch {
public:
    explicit Scratch(std::size_t n) : n_(n) {
        if (n > buf_.size()) heap_.resize(n);
    }
    double* data() { return n_ > buf_.size() ? heap_.data() : buf_.data(); }
    std::span<const double> view() { return {data(), n_}; }

private:
    std::size_t n_;
    std::array<double, 8> buf_{};
    std::vector<double> heap_;
};

// x or -x, whichever has a positive first nonzero coordinate. Leaves that are
// not bitwise symmetric by construction evaluate at this representative.
bool needs_flip(std::span<const double> x) {
    for (double v : x) {
        if (v > 0.0) return false;
        if (v < 0.0) return true;
    }
    return false;
}

}  // namespace

// ---------------------------------------------------------------- GridFunction

GridFunction::GridFunction(std::vector<Vector> axes, std::vector<double> values)
    : axes_(std::move(axes)), values_(std::move(values)) {
    if (axes_.empty()) throw InvalidArgument("grid: no axes");
    std::size_t total = 1;
    for (auto& a : axes_) {
        if (a.size() < 3) throw InvalidArgument("grid: every axis needs at least 3 nodes");
        for (std::size_t k = 1; k < a.size(); ++k)
            if (!(a[k] > a[k - 1])) throw InvalidArgument("grid: axis nodes must be strictly increasing");
        const double scale = std::max(std::abs(a.front()), std::abs(a.back()));
        for (std::size_t k = 0; k < a.size(); ++k) {
            if (std::abs(a[k] + a[a.size() - 1 - k]) > 1e-12 * scale)
                throw InvalidArgument("grid: axis nodes must be symmetric about 0");
        }
        if (a.size() % 2 == 0) throw InvalidArgument("grid: axis must contain 0");
        for (std::size_t k = 0; k < a.size() / 2; ++k) a[a.size() - 1 - k] = -a[k];
        a[a.size() / 2] = 0.0;
        total *= a.size();
    }
    if (values_.size() != total)
        throw InvalidArgument("grid: expected " + std::to_string(total) + " values, got " +
                              std::to_string(values_.size()));
    double scale = 0.0;
    for (double v : values_) {
        if (std::isnan(v) || v == -kInf) throw InvalidArgument("grid: values must be real or +inf");
        if (std::isfinite(v)) scale = std::max(scale, std::abs(v));
    }
    const std::size_t n = axes_.size();
    strides_.assign(n, 1);
    for (std::size_t d = n - 1; d-- > 0;) strides_[d] = strides_[d + 1] * axes_[d + 1].size();

    // Symmetry under x -> -x: index i <-> total-1-i in row-major order.
    const double tol = 1e-9 * (1.0 + scale);
    for (std::size_t i = 0; i < total / 2; ++i) {
        double& a = values_[i];
        double& b = values_[total - 1 - i];
        if (std::isinf(a) != std::isinf(b) || (std::isfinite(a) && std::abs(a - b) > tol))
            throw InvalidArgument("grid: values are not symmetric under x -> -x");
        if (std::isfinite(a)) a = b = 0.5 * (a + b);
    }
    double& origin = values_[total / 2];
    if (!(std::abs(origin) <= tol)) throw InvalidArgument("grid: value at the origin must be 0");
    origin = 0.0;

    // Convexity along every axis line: finite nodes contiguous, slopes
    // nondecreasing.
    for (std::size_t d = 0; d < n; ++d) {
        const auto& ax = axes_[d];
        const double h_min = [&] {
            double h = kInf;
            for (std::size_t k = 1; k < ax.size(); ++k) h = std::min(h, ax[k] - ax[k - 1]);
            return h;
        }();
        const double slope_tol = 1e-8 * (1.0 + scale) / h_min;
        for (std::size_t base = 0; base < total; ++base) {
            if ((base / strides_[d]) % ax.size() != 0) continue;
            bool seen_finite = false, closed = false;
            double prev_slope = -kInf;
            for (std::size_t k = 0; k < ax.size(); ++k) {
                const double v = values_[base + k * strides_[d]];
                if (std::isinf(v)) {
                    if (seen_finite) closed = true;
                    continue;
                }
                if (closed) throw InvalidArgument("grid: effective domain is not convex along an axis");
                if (seen_finite && k > 0) {
                    const double u = values_[base + (k - 1) * strides_[d]];
                    const double slope = (v - u) / (ax[k] - ax[k - 1]);
                    if (slope < prev_slope - slope_tol)
                        throw InvalidArgument("grid: values are not convex along an axis");
                    prev_slope = std::max(prev_slope, slope);
                }
                seen_finite = true;
            }
        }
    }
}

double GridFunction::value(std::span<const double> x) const {
    const std::size_t n = axes_.size();
    if (x.size() != n) throw DimensionMismatch(n, x.size());
    Scratch flipped(n);
    if (needs_flip(x)) {
        for (std::size_t d = 0; d < n; ++d) flipped.data()[d] = -x[d];
        x = flipped.view();
    }
    std::array<std::size_t, 8> lo_small{};
    std::array<double, 8> w_small{};
    std::vector<std::size_t> lo_big;
    std::vector<double> w_big;
    std::size_t* lo = lo_small.data();
    double* w = w_small.data();
    if (n > 8) {
        lo_big.resize(n);
        w_big.resize(n);
        lo = lo_big.data();
        w = w_big.data();
    }
    for (std::size_t d = 0; d < n; ++d) {
        const auto& ax = axes_[d];
        if (!(x[d] >= ax.front() && x[d] <= ax.back())) return kInf;
        auto it = std::upper_bound(ax.begin(), ax.end(), x[d]);
        std::size_t k = static_cast<std::size_t>(it - ax.begin());
        if (k >= ax.size()) k = ax.size() - 1;
        if (k == 0) k = 1;
        lo[d] = k - 1;
        w[d] = (x[d] - ax[k - 1]) / (ax[k] - ax[k - 1]);
    }
    double acc = 0.0;
    const std::size_t corners = std::size_t{1} << n;
    for (std::size_t c = 0; c < corners; ++c) {
        double weight = 1.0;
        std::size_t idx = 0;
        for (std::size_t d = 0; d < n; ++d) {
            const bool up = (c >> d) & 1U;
            weight *= up ? w[d] : 1.0 - w[d];
            idx += (lo[d] + (up ? 1 : 0)) * strides_[d];
        }
        if (weight == 0.0) continue;
        const double v = values_[idx];
        if (std::isinf(v)) return kInf;
        acc += weight * v;
    }
    return acc;
}

// -------------------------------------------------------------- ConvexFunction

struct ConvexFunction::Node {
    Kind kind;
    std::size_t dim = 0;
    std::optional<Body> body;
    Eigen::MatrixXd matrix;
    double p = 1.0;
    std::optional<ConvexFunction> inner;
    double factor = 1.0;
    std::vector<ConvexFunction> terms;
    std::optional<GridFunction> grid;
};

ConvexFunction ConvexFunction::indicator(const Body& k) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Indicator;
    n->dim = k.dim();
    n->body = k;
    return ConvexFunction(std::move(n));
}

ConvexFunction ConvexFunction::support(const Body& k) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Support;
    n->dim = k.dim();
    n->body = k;
    return ConvexFunction(std::move(n));
}

ConvexFunction ConvexFunction::quadratic(const Eigen::MatrixXd& m) {
    if (m.rows() == 0 || m.rows() != m.cols()) throw InvalidArgument("quadratic: matrix must be square and non-empty");
    if (!m.allFinite()) throw InvalidArgument("quadratic: matrix entries must be finite");
    const double scale = 1.0 + m.cwiseAbs().maxCoeff();
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw InvalidArgument("quadratic: matrix must be symmetric");
    Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    if (es.eigenvalues().minCoeff() < -1e-12 * scale)
        throw InvalidArgument("quadratic: matrix must be positive semidefinite");
    auto n = std::make_shared<Node>();
    n->kind = Kind::Quadratic;
    n->dim = static_cast<std::size_t>(m.rows());
    n->matrix = std::move(sym);
    return ConvexFunction(std::move(n));
}

ConvexFunction ConvexFunction::gauge_power(const Body& k, double p) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw InvalidArgument("gauge_power: order must be finite and >= 1");
    auto n = std::make_shared<Node>();
    n->kind = Kind::GaugePower;
    n->dim = k.dim();
    n->body = k;
    n->p = p;
    return ConvexFunction(std::move(n));
}

ConvexFunction ConvexFunction::sum(const std::vector<ConvexFunction>& terms) {
    if (terms.empty()) throw InvalidArgument("sum: no terms");
    const std::size_t dim = terms.front().dim();
    for (const auto& t : terms)
        if (t.dim() != dim) throw DimensionMismatch(dim, t.dim());
    if (terms.size() == 1) return terms.front();
    auto n = std::make_shared<Node>();
    n->kind = Kind::Sum;
    n->dim = dim;
    n->terms = terms;
    return ConvexFunction(std::move(n));
}

ConvexFunction ConvexFunction::grid(GridFunction g) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Grid;
    n->dim = g.dim();
    n->grid.emplace(std::move(g));
    return ConvexFunction(std::move(n));
}

ConvexFunction dilate(const ConvexFunction& phi, double s) {
    if (!(s > 0.0) || !std::isfinite(s)) throw InvalidArgument("dilate: factor must be positive and finite");
    if (s == 1.0) return phi;
    if (phi.kind() == ConvexFunction::Kind::Dilate) return dilate(phi.inner(), phi.factor() * s);
    auto n = std::make_shared<ConvexFunction::Node>();
    n->kind = ConvexFunction::Kind::Dilate;
    n->dim = phi.dim();
    n->inner = phi;
    n->factor = s;
    return ConvexFunction(std::move(n));
}

std::size_t ConvexFunction::dim() const { return node_->dim; }
ConvexFunction::Kind ConvexFunction::kind() const { return node_->kind; }

double ConvexFunction::value(std::span<const double> x) const {
    const Node& n = *node_;
    if (x.size() != n.dim) throw DimensionMismatch(n.dim, x.size());
    switch (n.kind) {
        case Kind::Indicator:
        case Kind::Support:
        case Kind::GaugePower: {
            Scratch flipped(n.dim);
            if (n.dim > 3 && needs_flip(x)) {
                for (std::size_t d = 0; d < n.dim; ++d) flipped.data()[d] = -x[d];
                x = flipped.view();
            }
            if (n.kind == Kind::Indicator) return n.body->contains(x) ? 0.0 : kInf;
            if (n.kind == Kind::Support) return n.body->support(x);
            const double g = n.body->gauge(x);
            if (n.p == 1.0) return g;
            if (n.p == 2.0) return 0.5 * g * g;
            return std::pow(g, n.p) / n.p;
        }
        case Kind::Quadratic: {
            double acc = 0.0;
            const auto dim = static_cast<Eigen::Index>(n.dim);
            for (Eigen::Index i = 0; i < dim; ++i) {
                double row = 0.0;
                for (Eigen::Index j = 0; j < dim; ++j) row += n.matrix(i, j) * x[static_cast<std::size_t>(j)];
                acc += x[static_cast<std::size_t>(i)] * row;
            }
            return 0.5 * acc;
        }
        case Kind::Dilate: {
            Scratch y(n.dim);
            for (std::size_t d = 0; d < n.dim; ++d) y.data()[d] = n.factor * x[d];
            return n.inner->value(y.view());
        }
        case Kind::Sum: {
            double acc = 0.0;
            for (const auto& t : n.terms) {
                const double v = t.value(x);
                if (std::isinf(v)) return kInf;
                acc += v;
            }
            return acc;
        }
        case Kind::Grid:
            return n.grid->value(x);
    }
    return kInf;
}

ExtReal ConvexFunction::eval(std::span<const double> x) const {
    const double v = value(x);
    return std::isinf(v) ? ExtReal::infinity() : ExtReal(v);
}

const Body& ConvexFunction::body() const {
    if (!node_->body) throw InvalidArgument("body(): representation carries no body");
    return *node_->body;
}

const Eigen::MatrixXd& ConvexFunction::matrix() const {
    if (node_->kind != Kind::Quadratic) throw InvalidArgument("matrix(): not a quadratic");
    return node_->matrix;
}

double ConvexFunction::order() const {
    if (node_->kind != Kind::GaugePower) throw InvalidArgument("order(): not a gauge power");
    return node_->p;
}

const ConvexFunction& ConvexFunction::inner() const {
    if (!node_->inner) throw InvalidArgument("inner(): not a dilation");
    return *node_->inner;
}

double ConvexFunction::factor() const {
    if (node_->kind != Kind::Dilate) throw InvalidArgument("factor(): not a dilation");
    return node_->factor;
}

const std::vector<ConvexFunction>& ConvexFunction::terms() const {
    if (node_->kind != Kind::Sum) throw InvalidArgument("terms(): not a sum");
    return node_->terms;
}

const GridFunction& ConvexFunction::grid_function() const {
    if (!node_->grid) throw InvalidArgument("grid_function(): not a grid");
    return *node_->grid;
}

std::optional<double> ConvexFunction::homogeneity_degree() const {
    const Node& n = *node_;
    switch (n.kind) {
        case Kind::Quadratic: return 2.0;
        case Kind::Support: return 1.0;
        case Kind::GaugePower: return n.p;
        case Kind::Dilate: return n.inner->homogeneity_degree();
        case Kind::Sum: {
            std::optional<double> deg;
            for (const auto& t : n.terms) {
                auto d = t.homogeneity_degree();
                if (!d || (deg && *deg != *d)) return std::nullopt;
                deg = d;
            }
            return deg;
        }
        case Kind::Indicator:
        case Kind::Grid:
            return std::nullopt;
    }
    return std::nullopt;
}

double ConvexFunction::domain_radius(std::span<const double> d) const {
    const Node& n = *node_;
    if (d.size() != n.dim) throw DimensionMismatch(n.dim, d.size());
    switch (n.kind) {
        case Kind::Indicator: return n.body->radial_extent(d);
        case Kind::Dilate: return n.inner->domain_radius(d) / n.factor;
        case Kind::Sum: {
            double r = kInf;
            for (const auto& t : n.terms) r = std::min(r, t.domain_radius(d));
            return r;
        }
        case Kind::Grid: {
            double hi = kInf;
            for (std::size_t k = 0; k < n.dim; ++k)
                if (d[k] != 0.0) hi = std::min(hi, n.grid->hull_half_width(k) / std::abs(d[k]));
            if (!std::isfinite(hi)) return kInf;
            std::vector<double> y(n.dim);
            auto finite_at = [&](double s) {
                for (std::size_t k = 0; k < n.dim; ++k) y[k] = s * d[k];
                return std::isfinite(n.grid->value(y));
            };
            if (finite_at(hi)) return hi;
            double lo = 0.0;
            for (int it = 0; it < 80; ++it) {
                const double mid = 0.5 * (lo + hi);
                (finite_at(mid) ? lo : hi) = mid;
            }
            return lo;
        }
        default:
            return kInf;
    }
}

std::optional<Vector> ConvexFunction::domain_half_widths() const {
    const Node& n = *node_;
    switch (n.kind) {
        case Kind::Indicator: {
            Vector h(n.dim), e(n.dim, 0.0);
            for (std::size_t k = 0; k < n.dim; ++k) {
                std::fill(e.begin(), e.end(), 0.0);
                e[k] = 1.0;
                h[k] = n.body->support(e);
            }
            return h;
        }
        case Kind::Dilate: {
            auto h = n.inner->domain_half_widths();
            if (h)
                for (double& v : *h) v /= n.factor;
            return h;
        }
        case Kind::Sum: {
            std::optional<Vector> out;
            for (const auto& t : n.terms) {
                auto h = t.domain_half_widths();
                if (!h) continue;
                if (!out) {
                    out = h;
                } else {
                    for (std::size_t k = 0; k < n.dim; ++k) (*out)[k] = std::min((*out)[k], (*h)[k]);
                }
            }
            return out;
        }
        case Kind::Grid: {
            Vector h(n.dim);
            for (std::size_t k = 0; k < n.dim; ++k) h[k] = n.grid->hull_half_width(k);
            return h;
        }
        default:
            return std::nullopt;
    }
}

bool ConvexFunction::has_ray_form() const {
    const Node& n = *node_;
    switch (n.kind) {
        case Kind::Indicator:
        case Kind::Support:
        case Kind::Quadratic:
            return true;
        case Kind::GaugePower: return n.p == 1.0 || n.p == 2.0;
        case Kind::Dilate: return n.inner->has_ray_form();
        case Kind::Sum:
            return std::all_of(n.terms.begin(), n.terms.end(), [](const auto& t) { return t.has_ray_form(); });
        case Kind::Grid: return false;
    }
    return false;
}

std::optional<RayForm> ConvexFunction::ray_form(std::span<const double> y) const {
    const Node& n = *node_;
    if (y.size() != n.dim) throw DimensionMismatch(n.dim, y.size());
    switch (n.kind) {
        case Kind::Indicator: return RayForm{0.0, 0.0, n.body->radial_extent(y)};
        case Kind::Support: return RayForm{0.0, n.body->support(y), kInf};
        case Kind::Quadratic: return RayForm{value(y), 0.0, kInf};
        case Kind::GaugePower: {
            const double g = n.body->gauge(y);
            if (n.p == 1.0) return RayForm{0.0, g, kInf};
            if (n.p == 2.0) return RayForm{0.5 * g * g, 0.0, kInf};
            return std::nullopt;
        }
        case Kind::Dilate: {
            Scratch z(n.dim);
            for (std::size_t d = 0; d < n.dim; ++d) z.data()[d] = n.factor * y[d];
            return n.inner->ray_form(z.view());
        }
        case Kind::Sum: {
            RayForm acc{0.0, 0.0, kInf};
            for (const auto& t : n.terms) {
                auto f = t.ray_form(y);
                if (!f) return std::nullopt;
                acc.a2 += f->a2;
                acc.a1 += f->a1;
                acc.rho = std::min(acc.rho, f->rho);
            }
            return acc;
        }
        case Kind::Grid: return std::nullopt;
    }
    return std::nullopt;
}

std::optional<Body> ConvexFunction::partition_body() const {
    const Node& n = *node_;
    switch (n.kind) {
        case Kind::Indicator:
        case Kind::GaugePower:
            return n.body->as_polytope();
        case Kind::Support: {
            auto poly = n.body->as_polytope();
            if (!poly) return std::nullopt;
            return poly->polar();
        }
        case Kind::Dilate: return n.inner->partition_body();
        case Kind::Sum:
            for (const auto& t : n.terms)
                if (auto b = t.partition_body()) return b;
            return std::nullopt;
        default:
            return std::nullopt;
    }
}

ExtReal eval(const ConvexFunction& phi, std::span<const double> x) { return phi.eval(x); }

std::optional<double> homogeneity_degree(const ConvexFunction& phi) { return phi.homogeneity_degree(); }

}  // namespace tubekernel
