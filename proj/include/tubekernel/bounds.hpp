#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tubekernel/bergman.hpp"
#include "tubekernel/body.hpp"
#include "tubekernel/convex_function.hpp"
#include "tubekernel/quadrature.hpp"

namespace tubekernel {

// Catalan's constant from its alternating series sum (-1)^k / (2k+1)^2,
// accelerated (Cohen, Rodriguez Villegas, Zagier).
double catalan_series();

struct Constants {
    // exp((1/pi) int_{-1}^{1} -log s^2 / (1 + s^2) ds)
    double c_general = 0.0;
    double c_general_error = 0.0;
    double c_general_closed = 0.0;  // exp(4G/pi)
    // exp((4/pi) int_0^inf log(1+s) / (1+s^2) ds - 2 log 2)
    double c_hom1 = 0.0;
    double c_hom1_error = 0.0;
    double c_hom1_closed = 0.0;  // exp(4G/pi - log 2)
    double c_hom2 = 2.0;
    double nazarov_c = 0.0;      // (4/pi)^2
    double kuperberg_ref = 0.0;  // pi
    // (1/pi) int_R log(1+s^2) / (1+s^2) ds = 2 log 2
    double residue_integral = 0.0;
    double residue_error = 0.0;
    double catalan = 0.0;
};

// Quadrature tolerance defaults to 1e-12 here (spec.rel_tol overrides).
Constants compute_constants(const QuadSpec& spec = {});

struct ChosenConstant {
    double value = 0.0;
    std::string name;
};

// Degree 2 -> 2, degree 1 -> C_hom1, anything else -> C_general.
ChosenConstant theorem_constant(const Constants& c, std::optional<double> degree);
// Common homogeneity degree of two functions, if any.
std::optional<double> common_degree(const ConvexFunction& a, const ConvexFunction& b);

enum class Relation { LessEqual, GreaterEqual, Equal };
enum class Verdict { Pass, Fail, Inconclusive, NotComputable };

std::string_view relation_symbol(Relation r);
std::string_view verdict_name(Verdict v);

struct CheckReport {
    std::string name;
    std::string subject;
    Relation relation = Relation::LessEqual;
    double lhs = 0.0;
    double rhs = 0.0;
    double lhs_error = 0.0;
    double rhs_error = 0.0;
    double combined_error = 0.0;
    // Inequalities: signed gap, positive when the relation holds.
    // Equalities: tolerance - |lhs - rhs|.
    double margin = 0.0;
    double tolerance = 0.0;  // equalities only
    Verdict verdict = Verdict::NotComputable;
    std::string constant_name;
    double constant_value = 0.0;
    std::vector<std::pair<std::string, std::string>> inputs;  // role -> digest
    std::vector<std::pair<std::string, double>> details;
    double rel_tol = 0.0;
    double truncation_mass = 0.0;
    std::string note;

    [[nodiscard]] bool passed() const { return verdict == Verdict::Pass; }
};

// Inequalities pass when the margin exceeds 3x the combined error, fail when
// the relation is violated by more than the combined error, and are
// inconclusive otherwise. Equalities pass when |lhs - rhs| + combined error
// <= tolerance and fail when |lhs - rhs| - combined error > tolerance.
CheckReport make_report(std::string name, Relation rel, double lhs, double lhs_error, double rhs, double rhs_error,
                        double tolerance = 0.0);
CheckReport not_computable(std::string name, std::string note);

// Memoizes kernel_tube(phi, 0) by (function digest, spec).
class KernelCache {
public:
    KernelValue tube(const ConvexFunction& phi, const QuadSpec& spec);
    [[nodiscard]] std::size_t size() const;

private:
    mutable std::mutex mu_;
    std::map<std::string, KernelValue> values_;
};

// B_i(0) for the family through phi1, phi2: the Gram oracle for n = 1, the
// product of one-dimensional Gram values for boxes, det(M)/(2 pi)^n for
// phi1 = phi2 = x.Mx/2. nullopt when no oracle applies.
struct BiOracle {
    KernelValue value;
    std::string route;  // gram, box_product, gaussian
    std::size_t degree = 0;
    double condition = 0.0;
};
std::optional<BiOracle> b_i_oracle(const ConvexFunction& phi1, const ConvexFunction& phi2,
                                   std::size_t max_degree = 60, const GramOptions& opts = {});

// Box half-widths when k is an axis-aligned box.
std::optional<Vector> box_half_widths(const Body& k);

// B_i(0) <= C^n B_1(0).
CheckReport check_thm11(const ConvexFunction& phi1, const ConvexFunction& phi2, const std::optional<BiOracle>& b_i,
                        const Constants& c, const QuadSpec& spec, KernelCache* cache = nullptr);
// kernel_tube(phi1 + phi2) >= C^{-n} (int e^{-phi1} int e^{-phi2})^{-1}.
CheckReport check_cor12(const ConvexFunction& phi1, const ConvexFunction& phi2, const Constants& c,
                        const QuadSpec& kernel_spec, const QuadSpec& spec, KernelCache* cache = nullptr);
// kernel_tube(2 phi) <= pi^{-n} int e^{-phi*} / int e^{-phi}.
CheckReport check_thm41(const ConvexFunction& phi, const QuadSpec& kernel_spec, const QuadSpec& spec,
                        KernelCache* cache = nullptr);
// e^{tilde Phi(t)} >= 2^{-n} e^{phi*(t)} int e^{-phi}, Phi = 2 phi.
CheckReport check_midpoint(const ConvexFunction& phi, std::span<const double> t, const QuadSpec& spec);
// C^{-n} pi^n <= int e^{-phi} int e^{-phi*}.
CheckReport check_thm42(const ConvexFunction& phi, const Constants& c, const QuadSpec& spec);
// |K| |K polar| >= C_hom1^{-n} pi^n / n!; Nazarov's line and 4^n/n! are details.
CheckReport check_volume_product(const Body& k, const Constants& c);
// int e^{-h_K} = n! |K polar| within rel_tol.
CheckReport check_hk_identity(const Body& k, const QuadSpec& spec, double rel_tol = 1e-6);
// b(s) <= b(1) for |s| <= 1 and b(s) <= b(1) + n log s^2 for |s| >= 1. For
// indicators of one body both bounds are attained and the report is an
// equality within 3x the combined error.
CheckReport check_envelope(const ConvexFunction& phi1, const ConvexFunction& phi2, double s,
                           const QuadSpec& kernel_spec, KernelCache* cache = nullptr);
// B_s(0) = s^{2n} B'_{1/s}(0), roles of phi1, phi2 swapped. rel_tol <= 0
// means 3x the combined error.
CheckReport check_swap(const ConvexFunction& phi1, const ConvexFunction& phi2, double s, const QuadSpec& kernel_spec,
                       double rel_tol = 0.0, KernelCache* cache = nullptr);
// B_s(0) = ((s^2 + 1)/2)^n B_1(0) for phi1 = phi2 quadratic.
CheckReport check_gaussian_law(const ConvexFunction& phi, double s, const QuadSpec& kernel_spec, double rel_tol,
                               KernelCache* cache = nullptr);
// B_s(0) = B_1(0) for phi = I_K, 0 < s <= 1, with zero tolerance.
CheckReport check_indicator_sharpness(const ConvexFunction& phi, double s, const QuadSpec& kernel_spec,
                                      KernelCache* cache = nullptr);

struct CorpusItem;

struct VerifyOptions {
    QuadSpec spec;                 // integrals
    double kernel_tol_high = 1e-3;  // kernel tolerance for n >= 3
    std::vector<double> envelope_s = {0.25, 0.5, 2.0, 4.0};
    double swap_s = 2.0;
    std::size_t gram_max_degree = 60;
};

// Kernel spec used by verification in dimension n.
QuadSpec kernel_spec_for(const VerifyOptions& opts, std::size_t n);

// All checks for every corpus item, in input order.
std::vector<CheckReport> verify_all(const std::vector<CorpusItem>& corpus, const VerifyOptions& opts = {},
                                    KernelCache* cache = nullptr);

struct SweepRow {
    double s = 0.0;
    double b = 0.0;
    double error = 0.0;  // absolute error of b
    double envelope = 0.0;
};
std::vector<SweepRow> sweep_b(const ConvexFunction& phi1, const ConvexFunction& phi2, const std::vector<double>& s,
                              const QuadSpec& spec);

}  // namespace tubekernel
