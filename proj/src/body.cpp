#include "tubekernel/body.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "tubekernel/errors.hpp"
#include "tubekernel/linear_program.hpp"
#include "tubekernel/random.hpp"

namespace tubekernel {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace

struct Body::Data {
    std::size_t dim = 0;
    Kind kind = Kind::HPolytope;
    double p = 0.0;
    double radius = 0.0;

    // Row-major, one point / normal per row.
    std::vector<double> verts;
    std::size_t nv = 0;
    bool has_vertices = false;

    std::vector<double> normals;
    std::vector<double> offsets;
    std::vector<double> gauge_rows;  // normals[i] / offsets[i]
    bool has_facets = false;

    std::vector<FacetPiece> pieces;
    double inradius = 0.0;
    double circumradius = 0.0;

    std::size_t nf() const { return offsets.size(); }
    std::span<const double> vertex(std::size_t i) const { return {verts.data() + i * dim, dim}; }
    std::span<const double> normal(std::size_t i) const { return {normals.data() + i * dim, dim}; }
    std::span<const double> gauge_row(std::size_t i) const {
        return {gauge_rows.data() + i * dim, dim};
    }

    void set_facets(std::vector<double> n, std::vector<double> b) {
        normals = std::move(n);
        offsets = std::move(b);
        gauge_rows.resize(normals.size());
        for (std::size_t i = 0; i < offsets.size(); ++i)
            for (std::size_t j = 0; j < dim; ++j) gauge_rows[i * dim + j] = normals[i * dim + j] / offsets[i];
        has_facets = true;
    }
};

namespace {

using Data = Body::Data;

// Symmetric pairing check on row-major point sets: every row r has a partner -r.
bool closed_under_negation(const std::vector<double>& rows, std::size_t dim, double tol) {
    const std::size_t count = rows.size() / dim;
    for (std::size_t i = 0; i < count; ++i) {
        bool found = false;
        for (std::size_t j = 0; j < count && !found; ++j) {
            double err = 0.0;
            for (std::size_t k = 0; k < dim; ++k) err = std::max(err, std::abs(rows[i * dim + k] + rows[j * dim + k]));
            found = err <= tol;
        }
        if (!found) return false;
    }
    return true;
}

int numeric_rank(const std::vector<double>& rows, std::size_t dim, double rel_tol) {
    const std::size_t count = rows.size() / dim;
    Eigen::MatrixXd m(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < count; ++i)
        for (std::size_t j = 0; j < dim; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i * dim + j];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > rel_tol * s(0)) ++r;
    return r;
}

// Intersections of `dim` constraint planes that satisfy every constraint.
std::vector<double> enumerate_vertices(std::size_t dim, const std::vector<double>& normals,
                                       const std::vector<double>& offsets) {
    const std::size_t m = offsets.size();
    const double scale = *std::max_element(offsets.begin(), offsets.end());
    const double feas_tol = 1e-10 * (1.0 + scale);
    std::vector<double> out;

    auto try_point = [&](const double* v) {
        for (std::size_t k = 0; k < m; ++k) {
            double s = 0.0;
            for (std::size_t j = 0; j < dim; ++j) s += normals[k * dim + j] * v[j];
            if (s > offsets[k] + feas_tol) return;
        }
        const std::size_t count = out.size() / dim;
        for (std::size_t c = 0; c < count; ++c) {
            double err = 0.0;
            for (std::size_t j = 0; j < dim; ++j) err = std::max(err, std::abs(out[c * dim + j] - v[j]));
            if (err <= 1e-9 * (1.0 + scale)) return;
        }
        out.insert(out.end(), v, v + dim);
    };

    if (dim == 1) {
        double hi = kInf, lo = -kInf;
        for (std::size_t k = 0; k < m; ++k) {
            if (normals[k] > 0) hi = std::min(hi, offsets[k] / normals[k]);
            else lo = std::max(lo, offsets[k] / normals[k]);
        }
        out = {hi, lo};
        return out;
    }
    if (dim == 2) {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j) {
                Eigen::Matrix2d a;
                a << normals[i * 2], normals[i * 2 + 1], normals[j * 2], normals[j * 2 + 1];
                const double det = a.determinant();
                if (std::abs(det) < 1e-12) continue;
                const Eigen::Vector2d v = a.inverse() * Eigen::Vector2d(offsets[i], offsets[j]);
                try_point(v.data());
            }
        return out;
    }
    if (dim == 3) {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j)
                for (std::size_t k = j + 1; k < m; ++k) {
                    Eigen::Matrix3d a;
                    a << normals[i * 3], normals[i * 3 + 1], normals[i * 3 + 2],
                        normals[j * 3], normals[j * 3 + 1], normals[j * 3 + 2],
                        normals[k * 3], normals[k * 3 + 1], normals[k * 3 + 2];
                    const double det = a.determinant();
                    if (std::abs(det) < 1e-12) continue;
                    const Eigen::Vector3d v =
                        a.inverse() * Eigen::Vector3d(offsets[i], offsets[j], offsets[k]);
                    try_point(v.data());
                }
        return out;
    }
    throw InvalidArgument("vertex enumeration is only available in dimension <= 3");
}

// Normalize normals, merge duplicated directions (keeping the tighter offset).
void normalize_constraints(std::size_t dim, std::vector<double>& normals, std::vector<double>& offsets) {
    std::vector<double> n_out, b_out;
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        std::span<const double> a(normals.data() + i * dim, dim);
        const double len = norm(a);
        if (!(len > 0.0) || !std::isfinite(len)) throw InvalidArgument("hpolytope: zero or non-finite normal");
        if (!(offsets[i] > 0.0) || !std::isfinite(offsets[i]))
            throw InvalidArgument("hpolytope: offsets must be positive and finite (origin interior)");
        std::vector<double> unit(dim);
        for (std::size_t j = 0; j < dim; ++j) unit[j] = a[j] / len;
        const double b = offsets[i] / len;
        bool merged = false;
        for (std::size_t c = 0; c < b_out.size() && !merged; ++c) {
            double err = 0.0;
            for (std::size_t j = 0; j < dim; ++j) err = std::max(err, std::abs(n_out[c * dim + j] - unit[j]));
            if (err <= 1e-12) {
                b_out[c] = std::min(b_out[c], b);
                merged = true;
            }
        }
        if (!merged) {
            n_out.insert(n_out.end(), unit.begin(), unit.end());
            b_out.push_back(b);
        }
    }
    normals = std::move(n_out);
    offsets = std::move(b_out);
}

// Given constraints and the extreme vertices, keep the constraints whose facet
// has positive (dim-1)-measure and build the cone-tiling pieces.
void build_facets(Data& d, const std::vector<double>& normals, const std::vector<double>& offsets) {
    const std::size_t dim = d.dim;
    const double scale = d.circumradius;
    const double tol = 1e-9 * (1.0 + scale);
    std::vector<double> n_out, b_out;
    d.pieces.clear();

    for (std::size_t i = 0; i < offsets.size(); ++i) {
        std::span<const double> a(normals.data() + i * dim, dim);
        std::vector<std::size_t> on;
        for (std::size_t v = 0; v < d.nv; ++v)
            if (std::abs(dot(a, d.vertex(v)) - offsets[i]) <= tol) on.push_back(v);

        if (dim == 1) {
            if (on.empty()) continue;
            n_out.insert(n_out.end(), a.begin(), a.end());
            b_out.push_back(offsets[i]);
            d.pieces.push_back({{Vector(d.vertex(on[0]).begin(), d.vertex(on[0]).end())},
                                Vector(a.begin(), a.end()), offsets[i]});
            continue;
        }
        if (dim == 2) {
            if (on.size() < 2) continue;
            const double ux = -a[1], uy = a[0];
            auto key = [&](std::size_t v) { return ux * d.vertex(v)[0] + uy * d.vertex(v)[1]; };
            auto [lo, hi] = std::minmax_element(on.begin(), on.end(),
                                                [&](std::size_t x, std::size_t y) { return key(x) < key(y); });
            if (key(*hi) - key(*lo) <= tol) continue;
            n_out.insert(n_out.end(), a.begin(), a.end());
            b_out.push_back(offsets[i]);
            d.pieces.push_back({{Vector(d.vertex(*lo).begin(), d.vertex(*lo).end()),
                                 Vector(d.vertex(*hi).begin(), d.vertex(*hi).end())},
                                Vector(a.begin(), a.end()), offsets[i]});
            continue;
        }
        // dim == 3: order the facet polygon around its centroid and fan it.
        if (on.size() < 3) continue;
        Eigen::Vector3d an(a[0], a[1], a[2]);
        Eigen::Vector3d helper = std::abs(an.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
        Eigen::Vector3d u = an.cross(helper).normalized();
        Eigen::Vector3d w = an.cross(u);
        Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
        for (std::size_t v : on) centroid += Eigen::Vector3d(d.vertex(v)[0], d.vertex(v)[1], d.vertex(v)[2]);
        centroid /= static_cast<double>(on.size());
        std::vector<std::pair<double, Eigen::Vector3d>> ring;
        for (std::size_t v : on) {
            Eigen::Vector3d q(d.vertex(v)[0], d.vertex(v)[1], d.vertex(v)[2]);
            Eigen::Vector3d rel = q - centroid;
            ring.emplace_back(std::atan2(rel.dot(w), rel.dot(u)), q);
        }
        std::sort(ring.begin(), ring.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
        double area = 0.0;
        for (std::size_t k = 0; k < ring.size(); ++k) {
            const auto& p0 = ring[k].second;
            const auto& p1 = ring[(k + 1) % ring.size()].second;
            area += 0.5 * (p0 - centroid).cross(p1 - centroid).dot(an);
        }
        if (area <= tol * tol) continue;
        n_out.insert(n_out.end(), a.begin(), a.end());
        b_out.push_back(offsets[i]);
        if (ring.size() == 3) {
            d.pieces.push_back({{Vector(ring[0].second.data(), ring[0].second.data() + 3),
                                 Vector(ring[1].second.data(), ring[1].second.data() + 3),
                                 Vector(ring[2].second.data(), ring[2].second.data() + 3)},
                                Vector(a.begin(), a.end()), offsets[i]});
            continue;
        }
        Vector c(centroid.data(), centroid.data() + 3);
        for (std::size_t k = 0; k < ring.size(); ++k) {
            const auto& p0 = ring[k].second;
            const auto& p1 = ring[(k + 1) % ring.size()].second;
            d.pieces.push_back({{c, Vector(p0.data(), p0.data() + 3), Vector(p1.data(), p1.data() + 3)},
                                Vector(a.begin(), a.end()), offsets[i]});
        }
    }
    d.set_facets(std::move(n_out), std::move(b_out));
}

// Make every row's partner exactly its negation (and give paired weights the
// same value) so that evaluations are bitwise symmetric under x -> -x.
void symmetrize_pairs(std::vector<double>& rows, std::vector<double>* weights, std::size_t dim) {
    const std::size_t count = rows.size() / dim;
    std::vector<bool> done(count, false);
    for (std::size_t i = 0; i < count; ++i) {
        if (done[i]) continue;
        std::size_t best = count;
        double best_err = kInf;
        for (std::size_t j = 0; j < count; ++j) {
            if (done[j]) continue;
            double err = 0.0;
            for (std::size_t k = 0; k < dim; ++k) err = std::max(err, std::abs(rows[i * dim + k] + rows[j * dim + k]));
            if (err < best_err) {
                best_err = err;
                best = j;
            }
        }
        done[i] = true;
        if (best == count || best == i) continue;
        done[best] = true;
        for (std::size_t k = 0; k < dim; ++k) {
            const double v = 0.5 * (rows[i * dim + k] - rows[best * dim + k]);
            rows[i * dim + k] = v;
            rows[best * dim + k] = -v;
        }
        if (weights) {
            const double w = 0.5 * ((*weights)[i] + (*weights)[best]);
            (*weights)[i] = w;
            (*weights)[best] = w;
        }
    }
}

void finish_low_dim_polytope(Data& d, std::vector<double> normals, std::vector<double> offsets) {
    symmetrize_pairs(normals, &offsets, d.dim);
    if (*std::min_element(offsets.begin(), offsets.end()) < Body::kMinInradius)
        throw InvalidArgument("body is degenerate (inradius below 1e-9)");
    d.verts = enumerate_vertices(d.dim, normals, offsets);
    symmetrize_pairs(d.verts, nullptr, d.dim);
    d.nv = d.verts.size() / d.dim;
    d.has_vertices = true;
    double r = 0.0;
    for (std::size_t v = 0; v < d.nv; ++v) r = std::max(r, norm(d.vertex(v)));
    d.circumradius = r;
    build_facets(d, normals, offsets);
    d.inradius = *std::min_element(d.offsets.begin(), d.offsets.end());
    if (d.inradius < Body::kMinInradius) throw InvalidArgument("body is degenerate (inradius below 1e-9)");
}

double lp_support_h(const Data& d, std::span<const double> x) {
    return detail::maximize_over_polyhedron(x, d.normals, d.offsets);
}

double lp_gauge_v(const Data& d, std::span<const double> x) {
    // gauge_K(x) = h_{K polar}(x), K polar = {t : v_j.t <= 1}.
    std::vector<double> ones(d.nv, 1.0);
    return detail::maximize_over_polyhedron(x, d.verts, ones);
}

double q_norm(std::span<const double> x, double q) {
    if (std::isinf(q)) {
        double m = 0.0;
        for (double v : x) m = std::max(m, std::abs(v));
        return m;
    }
    if (q == 1.0) {
        double s = 0.0;
        for (double v : x) s += std::abs(v);
        return s;
    }
    if (q == 2.0) return norm(x);
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    if (m == 0.0) return 0.0;
    double s = 0.0;
    for (double v : x) s += std::pow(std::abs(v) / m, q);
    return m * std::pow(s, 1.0 / q);
}

double conjugate_exponent(double p) {
    if (p == 1.0) return kInf;
    if (std::isinf(p)) return 1.0;
    return p / (p - 1.0);
}

}  // namespace

Body Body::hpolytope(const std::vector<Vector>& normals, const std::vector<double>& offsets) {
    if (normals.empty() || normals.size() != offsets.size())
        throw InvalidArgument("hpolytope: need matching, non-empty normals and offsets");
    const std::size_t dim = normals.front().size();
    if (dim == 0) throw InvalidArgument("hpolytope: zero dimension");
    std::vector<double> flat;
    for (const auto& a : normals) {
        if (a.size() != dim) throw DimensionMismatch(dim, a.size());
        flat.insert(flat.end(), a.begin(), a.end());
    }
    std::vector<double> b = offsets;
    normalize_constraints(dim, flat, b);

    // Symmetry: (a, b) paired with (-a, b).
    {
        std::vector<double> rows;
        for (std::size_t i = 0; i < b.size(); ++i) {
            for (std::size_t j = 0; j < dim; ++j) rows.push_back(flat[i * dim + j] / b[i]);
        }
        const double scale = 1.0 / *std::min_element(b.begin(), b.end());
        if (!closed_under_negation(rows, dim, 1e-9 * scale))
            throw InvalidArgument("hpolytope: constraints are not symmetric (need pairs +-a with equal offsets)");
    }
    if (numeric_rank(flat, dim, 1e-12) < static_cast<int>(dim))
        throw InvalidArgument("hpolytope: normals do not span R^n (unbounded body)");

    auto d = std::make_shared<Data>();
    d->dim = dim;
    d->kind = Kind::HPolytope;
    if (dim <= 3) {
        finish_low_dim_polytope(*d, flat, b);
    } else {
        symmetrize_pairs(flat, &b, dim);
        d->set_facets(flat, b);
        d->inradius = *std::min_element(d->offsets.begin(), d->offsets.end());
        if (d->inradius < kMinInradius) throw InvalidArgument("body is degenerate (inradius below 1e-9)");
        double r2 = 0.0;
        std::vector<double> e(dim, 0.0);
        for (std::size_t i = 0; i < dim; ++i) {
            e.assign(dim, 0.0);
            e[i] = 1.0;
            const double h = lp_support_h(*d, e);
            r2 += h * h;
        }
        d->circumradius = std::sqrt(r2);
    }
    return Body(std::move(d));
}

Body Body::vpolytope(const std::vector<Vector>& vertices) {
    if (vertices.empty()) throw InvalidArgument("vpolytope: empty vertex list");
    const std::size_t dim = vertices.front().size();
    if (dim == 0) throw InvalidArgument("vpolytope: zero dimension");
    std::vector<double> flat;
    double scale = 0.0;
    for (const auto& v : vertices) {
        if (v.size() != dim) throw DimensionMismatch(dim, v.size());
        for (double x : v)
            if (!std::isfinite(x)) throw InvalidArgument("vpolytope: non-finite coordinate");
        flat.insert(flat.end(), v.begin(), v.end());
        scale = std::max(scale, norm(v));
    }
    if (!closed_under_negation(flat, dim, 1e-9 * (1.0 + scale)))
        throw InvalidArgument("vpolytope: vertex set is not symmetric (need -v for every v)");
    if (numeric_rank(flat, dim, 1e-12) < static_cast<int>(dim))
        throw InvalidArgument("vpolytope: vertices do not span R^n (degenerate body)");

    auto d = std::make_shared<Data>();
    d->dim = dim;
    d->kind = Kind::VPolytope;
    if (dim <= 3) {
        // Facets of conv(V) are the vertices of its polar {t : v.t <= 1}.
        std::vector<double> pn, pb;
        for (std::size_t i = 0; i < vertices.size(); ++i) {
            const double len = norm(vertices[i]);
            if (len == 0.0) continue;
            for (double x : vertices[i]) pn.push_back(x / len);
            pb.push_back(1.0 / len);
        }
        normalize_constraints(dim, pn, pb);
        std::vector<double> polar_vertices = enumerate_vertices(dim, pn, pb);
        std::vector<double> fn, fb;
        for (std::size_t i = 0; i < polar_vertices.size() / dim; ++i) {
            std::span<const double> w(polar_vertices.data() + i * dim, dim);
            const double len = norm(w);
            for (double x : w) fn.push_back(x / len);
            fb.push_back(1.0 / len);
        }
        normalize_constraints(dim, fn, fb);
        finish_low_dim_polytope(*d, fn, fb);
    } else {
        symmetrize_pairs(flat, nullptr, dim);
        d->verts = flat;
        d->nv = vertices.size();
        d->has_vertices = true;
        d->circumradius = scale;
        // Radial extent along the axes bounds the inradius from above; the rank
        // check above already excludes flat bodies.
        double r = kInf;
        std::vector<double> e(dim, 0.0);
        for (std::size_t i = 0; i < dim; ++i) {
            e.assign(dim, 0.0);
            e[i] = 1.0;
            r = std::min(r, 1.0 / lp_gauge_v(*d, e));
        }
        d->inradius = r;
        if (d->inradius < kMinInradius) throw InvalidArgument("body is degenerate (inradius below 1e-9)");
    }
    return Body(std::move(d));
}

Body Body::pball(std::size_t dim, double p, double radius) {
    if (dim == 0) throw InvalidArgument("pball: zero dimension");
    if (!(p >= 1.0)) throw InvalidArgument("pball: p must lie in [1, inf]");
    if (!(radius > 0.0) || !std::isfinite(radius)) throw InvalidArgument("pball: radius must be positive");
    auto d = std::make_shared<Data>();
    d->dim = dim;
    d->kind = Kind::PBall;
    d->p = p;
    d->radius = radius;
    const double inv_p = std::isinf(p) ? 0.0 : 1.0 / p;
    const double n = static_cast<double>(dim);
    d->inradius = radius * std::pow(n, std::min(0.0, 0.5 - inv_p));
    d->circumradius = radius * std::pow(n, std::max(0.0, 0.5 - inv_p));
    if (d->inradius < kMinInradius) throw InvalidArgument("body is degenerate (inradius below 1e-9)");
    return Body(std::move(d));
}

Body Body::cube(std::size_t dim, double half_width) {
    std::vector<Vector> normals;
    std::vector<double> offsets;
    for (std::size_t i = 0; i < dim; ++i)
        for (double sign : {1.0, -1.0}) {
            Vector a(dim, 0.0);
            a[i] = sign;
            normals.push_back(a);
            offsets.push_back(half_width);
        }
    return hpolytope(normals, offsets);
}

Body Body::cross_polytope(std::size_t dim, double radius) {
    std::vector<Vector> verts;
    for (std::size_t i = 0; i < dim; ++i)
        for (double sign : {1.0, -1.0}) {
            Vector v(dim, 0.0);
            v[i] = sign * radius;
            verts.push_back(v);
        }
    return vpolytope(verts);
}

Body Body::euclidean_ball(std::size_t dim, double radius) { return pball(dim, 2.0, radius); }

std::size_t Body::dim() const { return data_->dim; }
Body::Kind Body::kind() const { return data_->kind; }

double Body::p() const {
    if (data_->kind != Kind::PBall) throw InvalidArgument("p() is only defined for p-balls");
    return data_->p;
}

double Body::radius() const {
    if (data_->kind != Kind::PBall) throw InvalidArgument("radius() is only defined for p-balls");
    return data_->radius;
}

double Body::gauge(std::span<const double> x) const {
    const Data& d = *data_;
    if (x.size() != d.dim) throw DimensionMismatch(d.dim, x.size());
    if (d.kind == Kind::PBall) return q_norm(x, d.p) / d.radius;
    if (d.has_facets) {
        double g = 0.0;
        for (std::size_t i = 0; i < d.nf(); ++i) g = std::max(g, dot(d.gauge_row(i), x));
        return g;
    }
    return lp_gauge_v(d, x);
}

double Body::support(std::span<const double> x) const {
    const Data& d = *data_;
    if (x.size() != d.dim) throw DimensionMismatch(d.dim, x.size());
    if (d.kind == Kind::PBall) return d.radius * q_norm(x, conjugate_exponent(d.p));
    if (d.has_vertices) {
        double h = -kInf;
        for (std::size_t v = 0; v < d.nv; ++v) h = std::max(h, dot(d.vertex(v), x));
        return std::max(h, 0.0);
    }
    return lp_support_h(d, x);
}

bool Body::contains(std::span<const double> x) const { return gauge(x) <= 1.0 + 1e-12; }

double Body::radial_extent(std::span<const double> d) const {
    const double g = gauge(d);
    return g > 0.0 ? 1.0 / g : kInf;
}

Body Body::polar() const {
    const Data& d = *data_;
    if (d.kind == Kind::PBall) return pball(d.dim, conjugate_exponent(d.p), 1.0 / d.radius);
    if (d.kind == Kind::HPolytope) {
        // Facet (a, b) of K becomes the vertex a / b of the polar.
        std::vector<Vector> rows;
        for (std::size_t i = 0; i < d.nf(); ++i) {
            auto g = d.gauge_row(i);
            rows.emplace_back(g.begin(), g.end());
        }
        return vpolytope(rows);
    }
    // Vertex v of K becomes the facet {x : v.x <= 1} of the polar.
    std::vector<Vector> normals;
    std::vector<double> offsets;
    for (std::size_t v = 0; v < d.nv; ++v) {
        auto p = d.vertex(v);
        const double len = norm(p);
        Vector a(p.begin(), p.end());
        for (double& x : a) x /= len;
        normals.push_back(std::move(a));
        offsets.push_back(1.0 / len);
    }
    return hpolytope(normals, offsets);
}

Body Body::scaled(double c) const {
    if (!(c > 0.0) || !std::isfinite(c)) throw InvalidArgument("scaled: factor must be positive");
    auto d = std::make_shared<Data>(*data_);
    for (double& x : d->verts) x *= c;
    for (double& b : d->offsets) b *= c;
    for (double& g : d->gauge_rows) g /= c;
    for (auto& piece : d->pieces) {
        for (auto& pt : piece.points)
            for (double& x : pt) x *= c;
        piece.offset *= c;
    }
    d->radius *= c;
    d->inradius *= c;
    d->circumradius *= c;
    return Body(std::move(d));
}

Body Body::linear_image(const Eigen::MatrixXd& t) const {
    const Data& d = *data_;
    const auto n = static_cast<Eigen::Index>(d.dim);
    if (t.rows() != n || t.cols() != n) throw InvalidArgument("linear_image: matrix shape must be dim x dim");
    Eigen::FullPivLU<Eigen::MatrixXd> lu(t);
    if (!lu.isInvertible()) throw InvalidArgument("linear_image: matrix is singular");
    if (d.kind == Kind::PBall) {
        if (auto poly = as_polytope()) return poly->linear_image(t);
        const Eigen::MatrixXd gram = t.transpose() * t;
        const double c2 = gram(0, 0);
        if (d.p == 2.0 && (gram - c2 * Eigen::MatrixXd::Identity(n, n)).norm() <= 1e-12 * c2)
            return scaled(std::sqrt(c2));
        throw InvalidArgument("linear_image: image of a p-ball is not a p-ball");
    }
    if (d.kind == Kind::VPolytope) {
        std::vector<Vector> verts;
        for (std::size_t v = 0; v < d.nv; ++v) {
            Eigen::Map<const Eigen::VectorXd> p(d.vertex(v).data(), n);
            Eigen::VectorXd q = t * p;
            verts.emplace_back(q.data(), q.data() + n);
        }
        return vpolytope(verts);
    }
    const Eigen::MatrixXd inv_t = lu.inverse().transpose();
    std::vector<Vector> normals;
    std::vector<double> offsets;
    for (std::size_t i = 0; i < d.nf(); ++i) {
        Eigen::Map<const Eigen::VectorXd> a(d.normal(i).data(), n);
        Eigen::VectorXd na = inv_t * a;
        normals.emplace_back(na.data(), na.data() + n);
        offsets.push_back(d.offsets[i]);
    }
    return hpolytope(normals, offsets);
}

std::optional<Body> Body::as_polytope() const {
    const Data& d = *data_;
    if (d.kind != Kind::PBall) return *this;
    if (d.p == 1.0) return cross_polytope(d.dim, d.radius);
    if (std::isinf(d.p)) return cube(d.dim, d.radius);
    return std::nullopt;
}

bool Body::has_vertices() const { return data_->has_vertices; }
bool Body::has_facets() const { return data_->has_facets; }
std::size_t Body::num_vertices() const { return data_->nv; }
std::span<const double> Body::vertex(std::size_t i) const { return data_->vertex(i); }

std::vector<Vector> Body::vertices() const {
    std::vector<Vector> out;
    for (std::size_t v = 0; v < data_->nv; ++v) out.emplace_back(vertex(v).begin(), vertex(v).end());
    return out;
}

std::size_t Body::num_facets() const { return data_->nf(); }
std::span<const double> Body::facet_normal(std::size_t i) const { return data_->normal(i); }
double Body::facet_offset(std::size_t i) const { return data_->offsets.at(i); }
const std::vector<FacetPiece>& Body::facet_pieces() const { return data_->pieces; }
double Body::inradius() const { return data_->inradius; }
double Body::circumradius() const { return data_->circumradius; }

Body polar(const Body& k) { return k.polar(); }

double support_function(const Body& k, std::span<const double> x) { return k.support(x); }

double pball_volume(std::size_t dim, double p, double radius) {
    const double n = static_cast<double>(dim);
    if (std::isinf(p)) return std::pow(2.0 * radius, n);
    return std::pow(2.0 * std::tgamma(1.0 + 1.0 / p) * radius, n) / std::tgamma(1.0 + n / p);
}

VolumeResult volume(const Body& k, VolumeMode mode, const MonteCarloOptions& mc) {
    const std::size_t n = k.dim();
    const bool exact_possible = k.kind() == Body::Kind::PBall || n <= 3;
    if (mode == VolumeMode::Exact && !exact_possible)
        throw InvalidArgument("exact volume is only available for dim <= 3 polytopes and p-balls");
    if (mode != VolumeMode::MonteCarlo && exact_possible) {
        if (k.kind() == Body::Kind::PBall) return {pball_volume(n, k.p(), k.radius()), true, 0.0};
        if (n == 1) return {2.0 * k.facet_offset(0), true, 0.0};
        // Cone decomposition: each facet contributes offset * measure / n.
        double v = 0.0;
        for (const auto& piece : k.facet_pieces()) {
            double measure = 0.0;
            if (n == 2) {
                measure = std::hypot(piece.points[1][0] - piece.points[0][0], piece.points[1][1] - piece.points[0][1]);
            } else {
                Eigen::Vector3d a(piece.points[0].data()), b(piece.points[1].data()), c(piece.points[2].data());
                measure = 0.5 * (b - a).cross(c - a).norm();
            }
            v += piece.offset * measure / static_cast<double>(n);
        }
        return {v, true, 0.0};
    }
    if (mc.samples < 1) throw InvalidArgument("Monte-Carlo volume needs at least one sample");
    std::vector<double> half(n);
    std::vector<double> e(n, 0.0);
    double box = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        e.assign(n, 0.0);
        e[i] = 1.0;
        half[i] = k.support(e);
        box *= 2.0 * half[i];
    }
    Rng rng(mc.seed);
    std::vector<double> x(n);
    std::uint64_t hits = 0;
    for (std::uint64_t s = 0; s < mc.samples; ++s) {
        for (std::size_t i = 0; i < n; ++i) x[i] = rng.uniform(-half[i], half[i]);
        if (k.contains(x)) ++hits;
    }
    const double frac = static_cast<double>(hits) / static_cast<double>(mc.samples);
    const double se = std::sqrt(frac * (1.0 - frac) / static_cast<double>(mc.samples));
    return {frac * box, false, std::max(se * box, box / static_cast<double>(mc.samples))};
}

VolumeResult mahler_product(const Body& k, VolumeMode mode, const MonteCarloOptions& mc) {
    const VolumeResult a = volume(k, mode, mc);
    MonteCarloOptions mc2 = mc;
    mc2.seed = mc.seed + 1;
    const VolumeResult b = volume(k.polar(), mode, mc2);
    return {a.value * b.value, a.exact && b.exact,
            a.value * b.error_estimate + b.value * a.error_estimate + a.error_estimate * b.error_estimate};
}

Body random_symmetric_polytope(std::size_t dim, std::size_t half_vertex_count, std::uint64_t seed,
                               double max_condition) {
    if (dim == 0) throw InvalidArgument("random polytope: zero dimension");
    Rng rng(seed);
    if (dim == 1) {
        const double a = rng.uniform(0.5, 2.0);
        return Body::vpolytope({{a}, {-a}});
    }
    half_vertex_count = std::max(half_vertex_count, dim);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        std::vector<Vector> verts;
        Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
        for (std::size_t i = 0; i < half_vertex_count; ++i) {
            Vector v(dim);
            for (double& x : v) x = rng.normal();
            Eigen::Map<Eigen::VectorXd> ev(v.data(), static_cast<Eigen::Index>(dim));
            cov += ev * ev.transpose();
            Vector w = v;
            for (double& x : w) x = -x;
            verts.push_back(std::move(v));
            verts.push_back(std::move(w));
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
        const double lo = es.eigenvalues().minCoeff();
        const double hi = es.eigenvalues().maxCoeff();
        if (!(lo > 0.0) || hi / lo > max_condition) continue;
        Body body = Body::vpolytope(verts);
        if (body.circumradius() / body.inradius() > max_condition) continue;
        return body;
    }
    throw std::runtime_error("random polytope: could not meet the condition bound");
}

}  // namespace tubekernel
