#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "tubekernel/bounds.hpp"
#include "tubekernel/corpus.hpp"
#include "tubekernel/json_io.hpp"

using namespace tubekernel;
using namespace testing_support;

namespace {

// Catalan's constant by plain partial sums of the alternating series,
// averaging two consecutive partial sums to cancel the leading tail term.
double catalan_oracle() {
    double s = 0.0, prev = 0.0;
    const int terms = 400000;
    for (int k = 0; k < terms; ++k) {
        prev = s;
        const double d = 2.0 * k + 1.0;
        s += (k % 2 ? -1.0 : 1.0) / (d * d);
    }
    return 0.5 * (s + prev);
}

const Constants& constants() {
    static const Constants c = compute_constants();
    return c;
}

ConvexFunction half_square(std::size_t n) { return ConvexFunction::quadratic(Eigen::MatrixXd::Identity(n, n)); }

QuadSpec kspec() { return {}; }

}  // namespace

TEST_CASE("constants against Catalan closed forms") {
    const Constants& c = constants();
    const double g = catalan_oracle();
    CHECK(std::abs(c.catalan - g) <= 1e-12);
    CHECK(std::abs(catalan_series() - g) <= 1e-12);
    CHECK(std::abs(c.c_general - std::exp(4.0 * g / kPi)) <= 1e-8);
    CHECK(std::abs(c.c_hom1 - std::exp(4.0 * g / kPi - std::log(2.0))) <= 1e-8);
    CHECK(std::abs(c.residue_integral - 2.0 * std::log(2.0)) <= 1e-8);
    CHECK(c.c_hom2 == 2.0);
    CHECK(c.nazarov_c == doctest::Approx(16.0 / (kPi * kPi)).epsilon(1e-15));
    CHECK(c.kuperberg_ref == doctest::Approx(kPi).epsilon(1e-15));
    CHECK(c.c_general == doctest::Approx(3.2099).epsilon(1e-4));
    CHECK(c.c_hom1 == doctest::Approx(1.6049).epsilon(1e-4));
    CHECK(c.c_general_error < 1e-9);
    CHECK(c.c_hom1_error < 1e-9);
}

TEST_CASE("constant selection by homogeneity") {
    const Constants& c = constants();
    CHECK(theorem_constant(c, 2.0).name == "C_hom2");
    CHECK(theorem_constant(c, 2.0).value == 2.0);
    CHECK(theorem_constant(c, 1.0).name == "C_hom1");
    CHECK(theorem_constant(c, 3.0).name == "C_general");
    CHECK(theorem_constant(c, std::nullopt).name == "C_general");
    CHECK(common_degree(half_square(1), half_square(1)) == 2.0);
    CHECK_FALSE(common_degree(half_square(1), ConvexFunction::support(Body::cube(1))).has_value());
}

TEST_CASE("verdict rules") {
    // Inequality lhs <= rhs with margin rhs - lhs.
    CHECK(make_report("a", Relation::LessEqual, 1.0, 0.01, 2.0, 0.01).verdict == Verdict::Pass);
    CHECK(make_report("a", Relation::LessEqual, 1.0, 0.2, 1.5, 0.0).verdict == Verdict::Inconclusive);
    CHECK(make_report("a", Relation::LessEqual, 1.1, 0.05, 1.0, 0.0).verdict == Verdict::Fail);
    CHECK(make_report("a", Relation::LessEqual, 1.05, 0.1, 1.0, 0.0).verdict == Verdict::Inconclusive);
    CHECK(make_report("a", Relation::GreaterEqual, 2.0, 0.01, 1.0, 0.01).verdict == Verdict::Pass);
    CHECK(make_report("a", Relation::GreaterEqual, 2.0, 0.01, 1.0, 0.01).margin == doctest::Approx(1.0));
    // Equality with tolerance.
    CHECK(make_report("e", Relation::Equal, 1.0, 1e-9, 1.0 + 1e-8, 0.0, 1e-6).verdict == Verdict::Pass);
    CHECK(make_report("e", Relation::Equal, 1.0, 1e-3, 1.0, 0.0, 1e-6).verdict == Verdict::Inconclusive);
    CHECK(make_report("e", Relation::Equal, 1.0, 1e-9, 1.1, 0.0, 1e-6).verdict == Verdict::Fail);
    const CheckReport nc = not_computable("thm11", "no oracle");
    CHECK(nc.verdict == Verdict::NotComputable);
    CHECK_FALSE(nc.passed());
    CHECK(verdict_name(Verdict::NotComputable) == "not_computable");
}

TEST_CASE("kernel comparison examples") {
    const Constants& c = constants();
    const ConvexFunction g = half_square(1);
    const auto bi = b_i_oracle(g, g);
    REQUIRE(bi.has_value());
    CHECK(bi->value.value == doctest::Approx(1.0 / (2.0 * kPi)).epsilon(1e-8));
    const CheckReport r = check_thm11(g, g, bi, c, kspec());
    CHECK(r.verdict == Verdict::Pass);
    CHECK(r.constant_name == "C_hom2");
    CHECK(r.rhs == doctest::Approx(1.0 / kPi).epsilon(1e-7));
    CHECK(r.lhs / (r.rhs / 2.0) == doctest::Approx(1.0).epsilon(1e-6));

    const ConvexFunction ind = ConvexFunction::indicator(Body::cube(1));
    const auto bs = b_i_oracle(ind, ind);
    REQUIRE(bs.has_value());
    CHECK(bs->route == "gram");
    const CheckReport s = check_thm11(ind, ind, bs, c, kspec());
    CHECK(s.verdict == Verdict::Pass);
    CHECK(s.constant_name == "C_general");
    CHECK(s.rhs == doctest::Approx(c.c_general * kPi / 16.0).epsilon(1e-7));
    // Constants-only lower bound: B_i(0) >= (int e^{-phi1} int e^{-phi2})^{-1} = 1/4.
    CHECK(bs->value.value >= 0.25);

    const CheckReport none = check_thm11(ind, ind, std::nullopt, c, kspec());
    CHECK(none.verdict == Verdict::NotComputable);
}

TEST_CASE("B_i oracle routes") {
    // A box factorizes; each factor is a one-dimensional Gram value.
    const Body box = Body::hpolytope({{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}}, {1.0, 1.0, 0.5, 0.5});
    const ConvexFunction ib = ConvexFunction::indicator(box);
    const auto prod = b_i_oracle(ib, ib);
    REQUIRE(prod.has_value());
    CHECK(prod->route == "box_product");
    const auto f1 = b_i_oracle(ConvexFunction::indicator(Body::cube(1, 1.0)), ConvexFunction::indicator(Body::cube(1, 1.0)));
    const auto f2 = b_i_oracle(ConvexFunction::indicator(Body::cube(1, 0.5)), ConvexFunction::indicator(Body::cube(1, 0.5)));
    REQUIRE(f1.has_value());
    REQUIRE(f2.has_value());
    CHECK(prod->value.value == doctest::Approx(f1->value.value * f2->value.value).epsilon(1e-12));
    // The square of half-width 1/2 is the unit square scaled: kernel scales by 4.
    CHECK(f2->value.value == doctest::Approx(4.0 * f1->value.value).epsilon(1e-8));

    Rng rng(3);
    const Eigen::MatrixXd a = random_well_conditioned(rng, 3);
    const Eigen::MatrixXd m = a.transpose() * a;
    const ConvexFunction q = ConvexFunction::quadratic(m);
    const auto gq = b_i_oracle(q, q);
    REQUIRE(gq.has_value());
    CHECK(gq->route == "gaussian");
    CHECK(gq->value.value == doctest::Approx(m.determinant() / std::pow(2.0 * kPi, 3.0)).epsilon(1e-12));

    CHECK_FALSE(b_i_oracle(ConvexFunction::indicator(Body::euclidean_ball(2)),
                           ConvexFunction::indicator(Body::euclidean_ball(2)))
                    .has_value());
}

TEST_CASE("kernel lower bound examples") {
    const Constants& c = constants();
    const ConvexFunction ind = ConvexFunction::indicator(Body::cube(1));
    const CheckReport r = check_cor12(ind, ind, c, kspec(), {});
    CHECK(r.verdict == Verdict::Pass);
    CHECK(r.lhs == doctest::Approx(kPi / 16.0).epsilon(1e-8));
    CHECK(r.rhs == doctest::Approx(1.0 / (4.0 * c.c_general)).epsilon(1e-8));
    const ConvexFunction g = half_square(1);
    const CheckReport q = check_cor12(g, g, c, kspec(), {});
    CHECK(q.verdict == Verdict::Pass);
    CHECK(q.lhs / q.rhs == doctest::Approx(2.0).epsilon(1e-7));
    const ConvexFunction sq = ConvexFunction::indicator(Body::cube(2));
    const CheckReport s = check_cor12(sq, sq, c, kspec(), {});
    CHECK(s.verdict == Verdict::Pass);
    CHECK(s.lhs == doctest::Approx(std::pow(kPi / 16.0, 2)).epsilon(1e-5));
    // |K| = 4 for the square, so the right side is C^{-2} |K|^{-2} = C^{-2} / 16.
    CHECK(s.rhs == doctest::Approx(1.0 / (16.0 * c.c_general * c.c_general)).epsilon(1e-8));
}

TEST_CASE("kernel upper bound examples") {
    const CheckReport g = check_thm41(ConvexFunction::quadratic(Eigen::MatrixXd::Identity(1, 1)), kspec(), {});
    CHECK(g.verdict == Verdict::Pass);
    CHECK(g.lhs == doctest::Approx(1.0 / (2.0 * kPi)).epsilon(1e-8));
    CHECK(g.rhs == doctest::Approx(1.0 / kPi).epsilon(1e-8));
    const CheckReport i = check_thm41(ConvexFunction::indicator(Body::cube(1)), kspec(), {});
    CHECK(i.verdict == Verdict::Pass);
    CHECK(i.lhs == doctest::Approx(kPi / 16.0).epsilon(1e-8));
    CHECK(i.rhs == doctest::Approx(1.0 / kPi).epsilon(1e-8));
    for (std::uint64_t seed : {1u, 2u}) {
        const ConvexFunction q = ConvexFunction::quadratic(random_spd_matrix(2, seed));
        CHECK(check_thm41(q, kspec(), {}).verdict == Verdict::Pass);
    }
}

TEST_CASE("midpoint lower bound report") {
    const double t[1] = {0.25};
    const CheckReport r = check_midpoint(ConvexFunction::indicator(Body::cube(1)), t, {});
    CHECK(r.verdict == Verdict::Pass);
    CHECK(r.relation == Relation::GreaterEqual);
}

TEST_CASE("functional volume product examples") {
    const Constants& c = constants();
    const CheckReport g = check_thm42(ConvexFunction::quadratic(Eigen::MatrixXd::Identity(1, 1)), c, {});
    CHECK(g.verdict == Verdict::Pass);
    CHECK(g.lhs == doctest::Approx(kPi / 2.0).epsilon(1e-12));
    CHECK(g.rhs == doctest::Approx(2.0 * kPi).epsilon(1e-8));
    const CheckReport h = check_thm42(ConvexFunction::support(Body::cube(2)), c, {});
    CHECK(h.verdict == Verdict::Pass);
    CHECK(h.constant_name == "C_hom1");
    CHECK(h.lhs == doctest::Approx(kPi * kPi / (c.c_hom1 * c.c_hom1)).epsilon(1e-12));
    CHECK(h.rhs == doctest::Approx(16.0).epsilon(1e-6));
    const CheckReport i = check_thm42(ConvexFunction::indicator(Body::cube(1)), c, {});
    CHECK(i.verdict == Verdict::Pass);
    CHECK(i.rhs == doctest::Approx(4.0).epsilon(1e-8));
    CHECK(i.lhs == doctest::Approx(kPi / c.c_general).epsilon(1e-12));
}

TEST_CASE("volume product examples") {
    const Constants& c = constants();
    const double rhs2 = kPi * kPi / (2.0 * c.c_hom1 * c.c_hom1);
    const CheckReport cube = check_volume_product(Body::cube(2), c);
    CHECK(cube.verdict == Verdict::Pass);
    CHECK(cube.lhs == doctest::Approx(8.0));
    CHECK(cube.rhs == doctest::Approx(rhs2).epsilon(1e-12));
    const CheckReport ball = check_volume_product(Body::euclidean_ball(2), c);
    CHECK(ball.lhs == doctest::Approx(kPi * kPi));
    CHECK(ball.verdict == Verdict::Pass);
    const CheckReport one = check_volume_product(Body::cube(1), c);
    CHECK(one.lhs == doctest::Approx(4.0));
    CHECK(one.rhs == doctest::Approx(kPi / c.c_hom1).epsilon(1e-12));
    bool found = false;
    for (const auto& [k, v] : one.details)
        if (k == "ratio_to_conjecture") {
            CHECK(v == 1.0);
            found = true;
        }
    CHECK(found);
    // Cubes sit exactly on the conjectural line 4^n / n!.
    CHECK(check_volume_product(Body::cube(3), c).lhs == doctest::Approx(64.0 / 6.0).epsilon(1e-14));
}

TEST_CASE("volume product is invariant under linear images") {
    const Constants& c = constants();
    Rng rng(17);
    for (std::size_t n = 1; n <= 3; ++n)
        for (int rep = 0; rep < 4; ++rep) {
            const Body k = random_symmetric_polytope(n, n + 2, 300 + 10 * n + rep);
            const Eigen::MatrixXd t = random_well_conditioned(rng, n);
            const CheckReport a = check_volume_product(k, c), b = check_volume_product(k.linear_image(t), c);
            CHECK(rel_diff(a.lhs, b.lhs) <= 1e-6);
            CHECK(a.verdict == b.verdict);
        }
}

TEST_CASE("support integral identity") {
    const CheckReport one = check_hk_identity(Body::cube(1), {});
    CHECK(one.verdict == Verdict::Pass);
    CHECK(one.lhs == doctest::Approx(2.0).epsilon(1e-9));
    const CheckReport sq = check_hk_identity(Body::cube(2), {});
    CHECK(sq.verdict == Verdict::Pass);
    CHECK(sq.rhs == doctest::Approx(4.0));
    const CheckReport ball = check_hk_identity(Body::euclidean_ball(2), {});
    CHECK(ball.verdict == Verdict::Pass);
    CHECK(ball.lhs == doctest::Approx(2.0 * kPi).epsilon(1e-6));
}

TEST_CASE("family checks") {
    const ConvexFunction g = half_square(1);
    CHECK(check_gaussian_law(g, 3.0, kspec(), 1e-6).verdict == Verdict::Pass);
    const ConvexFunction ind = ConvexFunction::indicator(Body::cube(2));
    const CheckReport sharp = check_indicator_sharpness(ind, 0.5, kspec());
    CHECK(sharp.verdict == Verdict::Pass);
    CHECK(sharp.lhs == sharp.rhs);
    KernelCache cache;
    const ConvexFunction h = ConvexFunction::support(Body::cube(1));
    for (double s : {0.25, 0.5, 2.0, 4.0}) CHECK(check_envelope(h, g, s, kspec(), &cache).verdict == Verdict::Pass);
    CHECK(check_swap(h, g, 2.0, kspec(), 1e-6, &cache).verdict == Verdict::Pass);
    CHECK(cache.size() > 0);
}

TEST_CASE("kernel cache returns identical values") {
    KernelCache cache;
    const ConvexFunction phi = ConvexFunction::indicator(Body::cube(1));
    const KernelValue a = cache.tube(phi, {});
    const KernelValue b = cache.tube(phi, {});
    CHECK(a.value == b.value);
    CHECK(cache.size() == 1);
    QuadSpec other;
    other.rel_tol = 1e-6;
    cache.tube(phi, other);
    CHECK(cache.size() == 2);
}

TEST_CASE("one-dimensional corpus verifies and is reproducible") {
    const auto corpus = default_corpus(1, 0);
    const auto a = verify_all(corpus);
    const auto b = verify_all(corpus);
    std::size_t computed = 0;
    for (const auto& r : a) {
        CAPTURE(r.name);
        CAPTURE(r.subject);
        CHECK((r.verdict == Verdict::Pass || r.verdict == Verdict::NotComputable));
        if (r.verdict != Verdict::NotComputable) ++computed;
    }
    CHECK(computed == a.size());  // every 1-D item has a Gram oracle
    CHECK(dump(to_json(a)) == dump(to_json(b)));
}
