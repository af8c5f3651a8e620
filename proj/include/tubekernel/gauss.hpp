#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace tubekernel::detail {

struct Rule {
    std::vector<double> x;
    std::vector<double> w;
};

// m-point Gauss-Legendre rule on [-1, 1]; cached, safe to call concurrently.
const Rule& gauss_legendre(std::size_t m);

struct GKResult {
    double value = 0.0;
    double error = 0.0;
    double abs_value = 0.0;
};

inline constexpr std::array<double, 8> kGK15x = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kGK15wk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGK15wg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

inline constexpr std::array<double, 11> kGK21x = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};
inline constexpr std::array<double, 11> kGK21wk = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208931935403, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
inline constexpr std::array<double, 5> kGK21wg = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

// QUADPACK-style error from the Kronrod/Gauss difference.
inline double qk_error(double kronrod, double gauss, double resabs, double resasc) {
    constexpr double eps = std::numeric_limits<double>::epsilon();
    double err = std::abs(kronrod - gauss);
    if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) err = std::max(50.0 * eps * resabs, err);
    return err;
}

template <class F>
GKResult gk15(F&& f, double a, double b) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    std::array<double, 15> fv{};
    fv[7] = f(c);
    for (int j = 0; j < 7; ++j) {
        fv[j] = f(c - h * kGK15x[j]);
        fv[14 - j] = f(c + h * kGK15x[j]);
    }
    double resk = kGK15wk[7] * fv[7];
    double resg = kGK15wg[3] * fv[7];
    double resabs = std::abs(resk);
    for (int j = 0; j < 7; ++j) {
        const double pair = fv[j] + fv[14 - j];
        resk += kGK15wk[j] * pair;
        resabs += kGK15wk[j] * (std::abs(fv[j]) + std::abs(fv[14 - j]));
        if (j % 2 == 1) resg += kGK15wg[j / 2] * pair;
    }
    const double mean = 0.5 * resk;
    double resasc = kGK15wk[7] * std::abs(fv[7] - mean);
    for (int j = 0; j < 7; ++j) resasc += kGK15wk[j] * (std::abs(fv[j] - mean) + std::abs(fv[14 - j] - mean));
    const double ah = std::abs(h);
    return {resk * h, qk_error(resk * h, resg * h, resabs * ah, resasc * ah), resabs * ah};
}

template <class F>
GKResult gk21(F&& f, double a, double b) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    std::array<double, 21> fv{};
    fv[10] = f(c);
    for (int j = 0; j < 10; ++j) {
        fv[j] = f(c - h * kGK21x[j]);
        fv[20 - j] = f(c + h * kGK21x[j]);
    }
    double resk = kGK21wk[10] * fv[10];
    double resg = 0.0;
    double resabs = std::abs(resk);
    for (int j = 0; j < 10; ++j) {
        const double pair = fv[j] + fv[20 - j];
        resk += kGK21wk[j] * pair;
        resabs += kGK21wk[j] * (std::abs(fv[j]) + std::abs(fv[20 - j]));
        if (j % 2 == 1) resg += kGK21wg[j / 2] * pair;
    }
    const double mean = 0.5 * resk;
    double resasc = kGK21wk[10] * std::abs(fv[10] - mean);
    for (int j = 0; j < 10; ++j) resasc += kGK21wk[j] * (std::abs(fv[j] - mean) + std::abs(fv[20 - j] - mean));
    const double ah = std::abs(h);
    return {resk * h, qk_error(resk * h, resg * h, resabs * ah, resasc * ah), resabs * ah};
}

// Collapsed-square rule on a triangle: the point A + u(B-A) + uv(C-B) has
// barycentric weights (1-u, u(1-v), uv); `w` already includes the Jacobian u
// and must be multiplied by 2 * area.
struct TriangleNode {
    double la, lb, lc, w;
};
const std::vector<TriangleNode>& triangle_rule(std::size_t m);

}  // namespace tubekernel::detail
