#include "tubekernel/bounds.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "tubekernel/corpus.hpp"
#include "tubekernel/errors.hpp"
#include "tubekernel/json_io.hpp"
#include "tubekernel/parallel.hpp"
#include "tubekernel/transforms.hpp"

namespace tubekernel {

namespace {

constexpr double kPi = std::numbers::pi;

double factorial(std::size_t n) {
    double f = 1.0;
    for (std::size_t k = 2; k <= n; ++k) f *= static_cast<double>(k);
    return f;
}

std::string format_s(double s) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", s);
    return buf;
}

KernelValue tube_at_zero(const ConvexFunction& phi, const QuadSpec& spec, KernelCache* cache) {
    if (cache) return cache->tube(phi, spec);
    return kernel_tube(phi, spec);
}

void stamp(CheckReport& r, const QuadSpec& spec, std::size_t n) {
    r.rel_tol = spec.tolerance(n);
    r.truncation_mass = spec.truncation_mass;
}

bool same_body_indicators(const ConvexFunction& a, const ConvexFunction& b) {
    using K = ConvexFunction::Kind;
    return a.kind() == K::Indicator && b.kind() == K::Indicator && a.body().same_storage(b.body());
}

}  // namespace

double catalan_series() {
    // sum_{k>=0} (-1)^k a_k with a_k = 1/(2k+1)^2.
    const int n = 40;
    double d = std::pow(3.0 + std::sqrt(8.0), n);
    d = 0.5 * (d + 1.0 / d);
    double b = -1.0, c = -d, s = 0.0;
    for (int k = 0; k < n; ++k) {
        c = b - c;
        s += c / ((2.0 * k + 1.0) * (2.0 * k + 1.0));
        b = (k + n) * (k - n) * b / ((k + 0.5) * (k + 1.0));
    }
    return s / d;
}

Constants compute_constants(const QuadSpec& spec) {
    QuadSpec q = spec;
    if (!q.rel_tol) q.rel_tol = 1e-12;
    q.method = Method::Auto;
    Constants c;
    c.catalan = catalan_series();

    auto general = [](double s) { return -2.0 * std::log(std::abs(s)) / (1.0 + s * s); };
    EndpointHints left, right;
    left.log_singular_b = true;
    right.log_singular_a = true;
    const QuadResult g1 = integrate_1d(general, -1.0, 0.0, q, left);
    const QuadResult g2 = integrate_1d(general, 0.0, 1.0, q, right);
    const double log_general = (g1.value + g2.value) / kPi;
    c.c_general = std::exp(log_general);
    c.c_general_error = c.c_general * (g1.error_estimate + g2.error_estimate) / kPi;
    c.c_general_closed = std::exp(4.0 * c.catalan / kPi);

    auto hom1 = [](double s) { return std::log1p(s) / (1.0 + s * s); };
    const QuadResult h = integrate_1d(hom1, 0.0, std::numeric_limits<double>::infinity(), q);
    c.c_hom1 = std::exp(4.0 / kPi * h.value - 2.0 * std::log(2.0));
    c.c_hom1_error = c.c_hom1 * 4.0 / kPi * h.error_estimate;
    c.c_hom1_closed = std::exp(4.0 * c.catalan / kPi - std::log(2.0));

    auto residue = [](double s) { return std::log1p(s * s) / (1.0 + s * s); };
    const double inf = std::numeric_limits<double>::infinity();
    const QuadResult r = integrate_1d(residue, -inf, inf, q);
    c.residue_integral = r.value / kPi;
    c.residue_error = r.error_estimate / kPi;

    c.c_hom2 = 2.0;
    c.nazarov_c = (4.0 / kPi) * (4.0 / kPi);
    c.kuperberg_ref = kPi;
    return c;
}

ChosenConstant theorem_constant(const Constants& c, std::optional<double> degree) {
    if (degree && *degree == 2.0) return {c.c_hom2, "C_hom2"};
    if (degree && *degree == 1.0) return {c.c_hom1, "C_hom1"};
    return {c.c_general, "C_general"};
}

std::optional<double> common_degree(const ConvexFunction& a, const ConvexFunction& b) {
    const auto da = a.homogeneity_degree(), db = b.homogeneity_degree();
    if (da && db && *da == *db) return da;
    return std::nullopt;
}

std::string_view relation_symbol(Relation r) {
    switch (r) {
        case Relation::LessEqual: return "<=";
        case Relation::GreaterEqual: return ">=";
        case Relation::Equal: return "==";
    }
    return "?";
}

std::string_view verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "pass";
        case Verdict::Fail: return "fail";
        case Verdict::Inconclusive: return "inconclusive";
        case Verdict::NotComputable: return "not_computable";
    }
    return "?";
}

CheckReport make_report(std::string name, Relation rel, double lhs, double lhs_error, double rhs, double rhs_error,
                        double tolerance) {
    CheckReport r;
    r.name = std::move(name);
    r.relation = rel;
    r.lhs = lhs;
    r.rhs = rhs;
    r.lhs_error = std::abs(lhs_error);
    r.rhs_error = std::abs(rhs_error);
    r.combined_error = r.lhs_error + r.rhs_error;
    const double e = r.combined_error;
    if (!std::isfinite(lhs) || !std::isfinite(rhs) || !std::isfinite(e)) {
        r.margin = std::numeric_limits<double>::quiet_NaN();
        r.verdict = Verdict::Inconclusive;
        r.note = "non-finite value";
        return r;
    }
    switch (rel) {
        case Relation::LessEqual:
        case Relation::GreaterEqual:
            r.margin = rel == Relation::LessEqual ? rhs - lhs : lhs - rhs;
            if (r.margin > 3.0 * e)
                r.verdict = Verdict::Pass;
            else if (r.margin < -e)
                r.verdict = Verdict::Fail;
            else
                r.verdict = Verdict::Inconclusive;
            break;
        case Relation::Equal: {
            r.tolerance = tolerance;
            const double diff = std::abs(lhs - rhs);
            r.margin = tolerance - diff;
            if (diff + e <= tolerance)
                r.verdict = Verdict::Pass;
            else if (diff - e > tolerance)
                r.verdict = Verdict::Fail;
            else
                r.verdict = Verdict::Inconclusive;
            break;
        }
    }
    return r;
}

CheckReport not_computable(std::string name, std::string note) {
    CheckReport r;
    r.name = std::move(name);
    r.lhs = r.rhs = r.margin = std::numeric_limits<double>::quiet_NaN();
    r.verdict = Verdict::NotComputable;
    r.note = std::move(note);
    return r;
}

KernelValue KernelCache::tube(const ConvexFunction& phi, const QuadSpec& spec) {
    const std::string key = digest(phi) + "|" + digest(to_json(spec));
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = values_.find(key);
        if (it != values_.end()) return it->second;
    }
    const KernelValue v = kernel_tube(phi, spec);
    std::lock_guard<std::mutex> lock(mu_);
    return values_.emplace(key, v).first->second;
}

std::size_t KernelCache::size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return values_.size();
}

std::optional<Vector> box_half_widths(const Body& k) {
    std::optional<Body> poly = k.as_polytope();
    if (!poly || !poly->has_facets()) return std::nullopt;
    const std::size_t n = k.dim();
    if (poly->num_facets() != 2 * n) return std::nullopt;
    Vector widths(n, -1.0);
    for (std::size_t i = 0; i < poly->num_facets(); ++i) {
        const auto a = poly->facet_normal(i);
        std::size_t axis = n;
        for (std::size_t j = 0; j < n; ++j) {
            if (std::abs(std::abs(a[j]) - 1.0) <= 1e-14) {
                axis = j;
            } else if (std::abs(a[j]) > 1e-14) {
                return std::nullopt;
            }
        }
        if (axis == n) return std::nullopt;
        widths[axis] = poly->facet_offset(i);
    }
    for (double w : widths)
        if (!(w > 0.0)) return std::nullopt;
    return widths;
}

std::optional<BiOracle> b_i_oracle(const ConvexFunction& phi1, const ConvexFunction& phi2, std::size_t max_degree,
                                   const GramOptions& opts) {
    if (phi1.dim() != phi2.dim()) throw DimensionMismatch(phi1.dim(), phi2.dim());
    const std::size_t n = phi1.dim();
    if (n == 1) {
        const PlaneWeight w{phi2, phi1};
        const std::size_t degree = gram_max_degree(w, max_degree, opts);
        const GramResult g = gram_oracle(w, degree, opts);
        BiOracle o;
        o.value = {g.kernel[degree], g.error[degree], KernelMethod::Gram, 0};
        o.route = "gram";
        o.degree = degree;
        o.condition = g.condition[degree];
        return o;
    }
    using K = ConvexFunction::Kind;
    if (phi1.kind() == K::Indicator && phi2.kind() == K::Indicator) {
        const auto w1 = box_half_widths(phi1.body()), w2 = box_half_widths(phi2.body());
        if (!w1 || !w2) return std::nullopt;
        BiOracle o;
        o.route = "box_product";
        double value = 1.0, rel = 0.0;
        std::size_t degree = max_degree;
        double condition = 0.0;
        std::vector<std::optional<BiOracle>> factors(n);
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t i = 0; i < j; ++i)
                if ((*w1)[i] == (*w1)[j] && (*w2)[i] == (*w2)[j]) factors[j] = factors[i];
            if (!factors[j]) {
                const Body b1 = Body::cube(1, (*w1)[j]), b2 = Body::cube(1, (*w2)[j]);
                factors[j] = b_i_oracle(ConvexFunction::indicator(b1), ConvexFunction::indicator(b2), max_degree, opts);
            }
            const auto& f = factors[j];
            value *= f->value.value;
            rel += f->value.error_estimate / f->value.value;
            degree = std::min(degree, f->degree);
            condition = std::max(condition, f->condition);
        }
        o.value = {value, value * rel, KernelMethod::Gram, 0};
        o.degree = degree;
        o.condition = condition;
        return o;
    }
    if (phi1.kind() == K::Quadratic && phi2.kind() == K::Quadratic && phi1.matrix() == phi2.matrix()) {
        const double v = phi1.matrix().determinant() / std::pow(2.0 * kPi, static_cast<double>(n));
        BiOracle o;
        o.value = {v, 4.0 * std::numeric_limits<double>::epsilon() * v, KernelMethod::ClosedForm, 0};
        o.route = "gaussian";
        return o;
    }
    return std::nullopt;
}

CheckReport check_thm11(const ConvexFunction& phi1, const ConvexFunction& phi2, const std::optional<BiOracle>& b_i,
                        const Constants& c, const QuadSpec& spec, KernelCache* cache) {
    const std::size_t n = phi1.dim();
    if (!b_i) {
        CheckReport r = not_computable("thm11", "no oracle for the kernel at s = i");
        r.inputs = {{"phi1", digest(phi1)}, {"phi2", digest(phi2)}};
        return r;
    }
    const ChosenConstant cc = theorem_constant(c, common_degree(phi1, phi2));
    const KernelValue b1 = tube_at_zero(family_weight(phi1, phi2, 1.0), spec, cache);
    const double cn = std::pow(cc.value, static_cast<double>(n));
    CheckReport r = make_report("thm11", Relation::LessEqual, b_i->value.value, b_i->value.error_estimate,
                                cn * b1.value, cn * b1.error_estimate);
    r.constant_name = cc.name;
    r.constant_value = cc.value;
    r.inputs = {{"phi1", digest(phi1)}, {"phi2", digest(phi2)}};
    r.details = {{"b_i", b_i->value.value},
                 {"b_1", b1.value},
                 {"ratio", b_i->value.value / b1.value},
                 {"degree", static_cast<double>(b_i->degree)},
                 {"condition", b_i->condition}};
    r.note = "B_i route: " + b_i->route;
    stamp(r, spec, n);
    return r;
}

CheckReport check_cor12(const ConvexFunction& phi1, const ConvexFunction& phi2, const Constants& c,
                        const QuadSpec& kernel_spec, const QuadSpec& spec, KernelCache* cache) {
    const std::size_t n = phi1.dim();
    const ChosenConstant cc = theorem_constant(c, common_degree(phi1, phi2));
    const KernelValue b = tube_at_zero(family_weight(phi1, phi2, 1.0), kernel_spec, cache);
    const QuadResult i1 = integrate_exp_neg(phi1, spec);
    const QuadResult i2 = phi1.same_storage(phi2) ? i1 : integrate_exp_neg(phi2, spec);
    const double rhs = std::pow(cc.value, -static_cast<double>(n)) / (i1.value * i2.value);
    const double rel = i1.error_estimate / i1.value + i2.error_estimate / i2.value;
    CheckReport r = make_report("cor12", Relation::GreaterEqual, b.value, b.error_estimate, rhs, rhs * rel);
    r.constant_name = cc.name;
    r.constant_value = cc.value;
    r.inputs = {{"phi1", digest(phi1)}, {"phi2", digest(phi2)}};
    r.details = {{"int_exp_neg_phi1", i1.value}, {"int_exp_neg_phi2", i2.value}};
    stamp(r, kernel_spec, n);
    return r;
}

CheckReport check_thm41(const ConvexFunction& phi, const QuadSpec& kernel_spec, const QuadSpec& spec,
                        KernelCache* cache) {
    const std::size_t n = phi.dim();
    const KernelValue b = tube_at_zero(family_weight(phi, phi, 1.0), kernel_spec, cache);
    const TransformResult conj = legendre(phi);
    const QuadResult i = integrate_exp_neg(phi, spec);
    const QuadResult j = integrate_exp_neg(conj.function, spec);
    const double rhs = std::pow(kPi, -static_cast<double>(n)) * j.value / i.value;
    const double rel = i.error_estimate / i.value + j.error_estimate / j.value;
    CheckReport r = make_report("thm41", Relation::LessEqual, b.value, b.error_estimate, rhs, rhs * rel);
    r.inputs = {{"phi", digest(phi)}, {"phi_conjugate", digest(conj.function)}};
    r.details = {{"int_exp_neg_phi", i.value}, {"int_exp_neg_conjugate", j.value}};
    stamp(r, kernel_spec, n);
    return r;
}

CheckReport check_midpoint(const ConvexFunction& phi, std::span<const double> t, const QuadSpec& spec) {
    const MidpointBound m = log_laplace_midpoint_lower(phi, t, spec);
    CheckReport r = make_report("midpoint", Relation::GreaterEqual, m.lhs, m.lhs_error, m.rhs, m.rhs_error);
    r.inputs = {{"phi", digest(phi)}};
    for (std::size_t k = 0; k < t.size(); ++k) r.details.emplace_back("t" + std::to_string(k + 1), t[k]);
    stamp(r, spec, phi.dim());
    return r;
}

CheckReport check_thm42(const ConvexFunction& phi, const Constants& c, const QuadSpec& spec) {
    const std::size_t n = phi.dim();
    const auto nd = static_cast<double>(n);
    const ChosenConstant cc = theorem_constant(c, phi.homogeneity_degree());
    const double cerr = cc.name == "C_hom2" ? 0.0 : cc.name == "C_hom1" ? c.c_hom1_error : c.c_general_error;
    const TransformResult conj = legendre(phi);
    const QuadResult i = integrate_exp_neg(phi, spec);
    const QuadResult j = integrate_exp_neg(conj.function, spec);
    const double lhs = std::pow(cc.value, -nd) * std::pow(kPi, nd);
    const double rhs = i.value * j.value;
    const double rel = i.error_estimate / i.value + j.error_estimate / j.value;
    CheckReport r = make_report("thm42", Relation::LessEqual, lhs, lhs * nd * cerr / cc.value, rhs, rhs * rel);
    r.constant_name = cc.name;
    r.constant_value = cc.value;
    r.inputs = {{"phi", digest(phi)}, {"phi_conjugate", digest(conj.function)}};
    stamp(r, spec, n);
    return r;
}

CheckReport check_volume_product(const Body& k, const Constants& c) {
    const std::size_t n = k.dim();
    const auto nd = static_cast<double>(n);
    const VolumeResult m = mahler_product(k);
    const double nf = factorial(n);
    const double rhs = std::pow(c.c_hom1, -nd) * std::pow(kPi, nd) / nf;
    CheckReport r = make_report("volume_product", Relation::GreaterEqual, m.value, m.error_estimate, rhs,
                                rhs * nd * c.c_hom1_error / c.c_hom1);
    r.constant_name = "C_hom1";
    r.constant_value = c.c_hom1;
    r.inputs = {{"body", digest(k)}};
    const double conjecture = std::pow(4.0, nd) / nf;
    r.details = {{"nazarov_rhs", std::pow(c.nazarov_c, -nd) * std::pow(kPi, nd) / nf},
                 {"conjecture_line", conjecture},
                 {"ratio_to_conjecture", m.value / conjecture},
                 {"exact", m.exact ? 1.0 : 0.0}};
    r.rel_tol = 0.0;
    return r;
}

CheckReport check_hk_identity(const Body& k, const QuadSpec& spec, double rel_tol) {
    const std::size_t n = k.dim();
    const QuadResult lhs = integrate_exp_neg(ConvexFunction::support(k), spec);
    const VolumeResult vp = volume(polar(k));
    const double nf = factorial(n);
    const double rhs = nf * vp.value;
    CheckReport r =
        make_report("hk_identity", Relation::Equal, lhs.value, lhs.error_estimate, rhs, nf * vp.error_estimate,
                    rel_tol * rhs);
    r.inputs = {{"body", digest(k)}};
    stamp(r, spec, n);
    return r;
}

CheckReport check_envelope(const ConvexFunction& phi1, const ConvexFunction& phi2, double s,
                           const QuadSpec& kernel_spec, KernelCache* cache) {
    const std::size_t n = phi1.dim();
    const KernelValue b1 = tube_at_zero(family_weight(phi1, phi2, 1.0), kernel_spec, cache);
    const KernelValue bs = tube_at_zero(family_weight(phi1, phi2, s), kernel_spec, cache);
    const double lhs = std::log(bs.value), lhs_err = bs.error_estimate / bs.value;
    const double lift = std::abs(s) > 1.0 ? static_cast<double>(n) * std::log(s * s) : 0.0;
    const double rhs = std::log(b1.value) + lift, rhs_err = b1.error_estimate / b1.value;
    const std::string name = "envelope s=" + format_s(s);
    CheckReport r;
    if (same_body_indicators(phi1, phi2)) {
        r = make_report(name, Relation::Equal, lhs, lhs_err, rhs, rhs_err, 3.0 * (lhs_err + rhs_err));
        r.note = "indicators of one body attain the bound";
    } else {
        r = make_report(name, Relation::LessEqual, lhs, lhs_err, rhs, rhs_err);
    }
    r.inputs = {{"phi1", digest(phi1)}, {"phi2", digest(phi2)}};
    r.details = {{"s", s}, {"b_s", lhs}, {"b_1", std::log(b1.value)}};
    stamp(r, kernel_spec, n);
    return r;
}

CheckReport check_swap(const ConvexFunction& phi1, const ConvexFunction& phi2, double s, const QuadSpec& kernel_spec,
                       double rel_tol, KernelCache* cache) {
    const std::size_t n = phi1.dim();
    const KernelValue bs = tube_at_zero(family_weight(phi1, phi2, s), kernel_spec, cache);
    const KernelValue bc = tube_at_zero(family_weight(phi2, phi1, 1.0 / s), kernel_spec, cache);
    const double f = std::pow(std::abs(s), 2.0 * static_cast<double>(n));
    const double rhs = f * bc.value, rhs_err = f * bc.error_estimate;
    const double tol = rel_tol > 0.0 ? rel_tol * rhs : 3.0 * (bs.error_estimate + rhs_err);
    CheckReport r = make_report("swap s=" + format_s(s), Relation::Equal, bs.value, bs.error_estimate, rhs, rhs_err, tol);
    r.inputs = {{"phi1", digest(phi1)}, {"phi2", digest(phi2)}};
    r.details = {{"s", s}};
    stamp(r, kernel_spec, n);
    return r;
}

CheckReport check_gaussian_law(const ConvexFunction& phi, double s, const QuadSpec& kernel_spec, double rel_tol,
                               KernelCache* cache) {
    if (phi.kind() != ConvexFunction::Kind::Quadratic) throw InvalidArgument("gaussian law needs a quadratic weight");
    const std::size_t n = phi.dim();
    const KernelValue b1 = tube_at_zero(family_weight(phi, phi, 1.0), kernel_spec, cache);
    const KernelValue bs = tube_at_zero(family_weight(phi, phi, s), kernel_spec, cache);
    const double f = std::pow(0.5 * (s * s + 1.0), static_cast<double>(n));
    const double rhs = f * b1.value;
    CheckReport r = make_report("gaussian_law s=" + format_s(s), Relation::Equal, bs.value, bs.error_estimate, rhs,
                                f * b1.error_estimate, rel_tol * rhs);
    r.inputs = {{"phi", digest(phi)}};
    r.details = {{"s", s}};
    stamp(r, kernel_spec, n);
    return r;
}

CheckReport check_indicator_sharpness(const ConvexFunction& phi, double s, const QuadSpec& kernel_spec,
                                      KernelCache* cache) {
    if (phi.kind() != ConvexFunction::Kind::Indicator) throw InvalidArgument("sharpness check needs an indicator");
    if (!(s > 0.0 && s <= 1.0)) throw InvalidArgument("sharpness check needs 0 < s <= 1");
    const KernelValue b1 = tube_at_zero(family_weight(phi, phi, 1.0), kernel_spec, cache);
    const KernelValue bs = tube_at_zero(family_weight(phi, phi, s), kernel_spec, cache);
    // The weights coincide, so the claim is bitwise equality of the kernels.
    CheckReport r = make_report("sharpness s=" + format_s(s), Relation::Equal, bs.value, 0.0, b1.value, 0.0, 0.0);
    r.inputs = {{"phi", digest(phi)}};
    r.details = {{"s", s}, {"kernel_error", b1.error_estimate}};
    stamp(r, kernel_spec, phi.dim());
    return r;
}

QuadSpec kernel_spec_for(const VerifyOptions& opts, std::size_t n) {
    QuadSpec k = opts.spec;
    if (n >= 3 && !opts.spec.rel_tol) k.rel_tol = opts.kernel_tol_high;
    return k;
}

std::vector<CheckReport> verify_all(const std::vector<CorpusItem>& corpus, const VerifyOptions& opts,
                                    KernelCache* cache) {
    KernelCache local;
    if (!cache) cache = &local;
    const Constants c = compute_constants();
    std::vector<std::vector<CheckReport>> parts(corpus.size());
    parallel_for(corpus.size(), [&](std::size_t idx) {
        const CorpusItem& item = corpus[idx];
        const ConvexFunction& phi = item.phi;
        const std::size_t n = phi.dim();
        const QuadSpec kspec = kernel_spec_for(opts, n);
        const QuadSpec& spec = opts.spec;
        std::optional<Body> body = item.body;
        if (!body && phi.kind() == ConvexFunction::Kind::Indicator) body = phi.body();
        std::vector<CheckReport>& out = parts[idx];

        out.push_back(check_thm41(phi, kspec, spec, cache));
        out.push_back(check_cor12(phi, phi, c, kspec, spec, cache));
        Vector t(n, 0.0);
        out.push_back(check_midpoint(phi, t, spec));
        t[0] = 0.25;
        out.push_back(check_midpoint(phi, t, spec));
        out.push_back(check_thm42(phi, c, spec));
        if (body) {
            CheckReport h = check_thm42(ConvexFunction::support(*body), c, spec);
            h.name = "thm42 support";
            out.push_back(std::move(h));
            out.push_back(check_hk_identity(*body, spec));
            out.push_back(check_volume_product(*body, c));
        }
        out.push_back(check_thm11(phi, phi, b_i_oracle(phi, phi, opts.gram_max_degree), c, kspec, cache));
        for (double s : opts.envelope_s) out.push_back(check_envelope(phi, phi, s, kspec, cache));
        out.push_back(check_swap(phi, phi, opts.swap_s, kspec, 0.0, cache));
        for (auto& r : out) r.subject = item.name;
    });
    std::vector<CheckReport> all;
    for (auto& p : parts)
        for (auto& r : p) all.push_back(std::move(r));
    return all;
}

std::vector<SweepRow> sweep_b(const ConvexFunction& phi1, const ConvexFunction& phi2, const std::vector<double>& s,
                              const QuadSpec& spec) {
    const std::size_t n = phi1.dim();
    const KernelValue b1 = kernel_family_s(phi1, phi2, 1.0, spec);
    const double log_b1 = std::log(b1.value);
    std::vector<SweepRow> rows(s.size());
    parallel_for(s.size(), [&](std::size_t i) {
        const KernelValue b = kernel_family_s(phi1, phi2, s[i], spec);
        SweepRow& r = rows[i];
        r.s = s[i];
        r.b = std::log(b.value);
        r.error = b.error_estimate / b.value;
        r.envelope = log_b1 + (std::abs(s[i]) > 1.0 ? static_cast<double>(n) * std::log(s[i] * s[i]) : 0.0);
    });
    return rows;
}

}  // namespace tubekernel
