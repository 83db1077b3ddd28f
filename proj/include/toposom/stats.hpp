#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace toposom {

// ---------------------------------------------------------------------------
// t-distribution numerics via the regularized incomplete beta function
// (Lentz-style continued fraction). Accurate to well under 1e-6 over df >= 1,
// which is all the paired-test layer needs.
// ---------------------------------------------------------------------------

inline double ln_gamma(double x) {
    // Lanczos approximation, g = 5, n = 6.
    static const double coef[6] = {76.18009172947146,  -86.50532032941677, 24.01409824083091,
                                   -1.231739572450155, 0.1208650973866179e-2,
                                   -0.5395239384953e-5};
    double y = x;
    double tmp = x + 5.5;
    tmp -= (x + 0.5) * std::log(tmp);
    double ser = 1.000000000190015;
    for (double c : coef) ser += c / ++y;
    return -tmp + std::log(2.5066282746310005 * ser / x);
}

namespace detail {

/// Continued-fraction core of the incomplete beta function.
inline double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-14;
    constexpr double kFpMin = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace detail

/// Regularized incomplete beta function I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("incomplete_beta: a, b must be > 0");
    if (x < 0.0 || x > 1.0) throw std::invalid_argument("incomplete_beta: x must be in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double front = std::exp(ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) +
                                  a * std::log(x) + b * std::log(1.0 - x));
    // Use the continued fraction directly where it converges fast, else the
    // symmetry I_x(a,b) = 1 - I_{1-x}(b,a).
    if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::betacf(a, b, x) / a;
    return 1.0 - front * detail::betacf(b, a, 1.0 - x) / b;
}

/// Cumulative distribution of Student's t with df degrees of freedom.
inline double student_t_cdf(double t, double df) {
    if (!(df > 0.0)) throw std::invalid_argument("student_t_cdf: df must be > 0");
    if (t == 0.0) return 0.5;
    const double x = df / (df + t * t);
    const double tail = 0.5 * incomplete_beta(df / 2.0, 0.5, x);
    return t > 0.0 ? 1.0 - tail : tail;
}

/// Two-sided tail probability P(|T| >= |t|).
inline double student_t_two_sided_p(double t, double df) {
    if (!(df > 0.0)) throw std::invalid_argument("student_t_two_sided_p: df must be > 0");
    if (t == 0.0) return 1.0;
    return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

/// Quantile (inverse CDF) by bisection on the CDF; accurate to ~1e-10.
inline double student_t_quantile(double p, double df) {
    if (!(df > 0.0)) throw std::invalid_argument("student_t_quantile: df must be > 0");
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("student_t_quantile: p must be in (0, 1)");
    if (p == 0.5) return 0.0;
    const bool upper = p > 0.5;
    const double target = upper ? p : 1.0 - p;
    double lo = 0.0, hi = 2.0;
    while (student_t_cdf(hi, df) < target) hi *= 2.0;  // bracket
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (student_t_cdf(mid, df) < target)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-12) break;
    }
    const double q = 0.5 * (lo + hi);
    return upper ? q : -q;
}

// ---------------------------------------------------------------------------
// Paired one-sample t summary
// ---------------------------------------------------------------------------

struct PairedCi {
    double mean = 0.0;
    double ci_half_width = 0.0;  // 95% two-sided
    double p_value = 1.0;
    double t_stat = 0.0;
    std::size_t df = 0;
};

/// Two-sided paired one-sample t-test against zero, with a 95% confidence
/// interval. Zero-variance convention: the interval collapses to the mean,
/// and p = 0 when the mean is nonzero (all effects identical and displaced),
/// p = 1 when the mean is zero.
inline PairedCi paired_ci(const std::vector<double>& effects) {
    const std::size_t n = effects.size();
    if (n < 2) throw std::invalid_argument("paired_ci: need at least 2 effects");
    PairedCi out;
    out.df = n - 1;
    for (double e : effects) out.mean += e;
    out.mean /= static_cast<double>(n);
    double var = 0.0;
    for (double e : effects) var += (e - out.mean) * (e - out.mean);
    var /= static_cast<double>(n - 1);
    if (var == 0.0) {
        out.ci_half_width = 0.0;
        out.p_value = out.mean != 0.0 ? 0.0 : 1.0;
        out.t_stat = 0.0;
        return out;
    }
    const double se = std::sqrt(var / static_cast<double>(n));
    out.t_stat = out.mean / se;
    out.p_value = student_t_two_sided_p(out.t_stat, static_cast<double>(out.df));
    out.ci_half_width = student_t_quantile(0.975, static_cast<double>(out.df)) * se;
    return out;
}

}  // namespace toposom
