#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>

#include "opa/params.hpp"
#include "opa/special_functions.hpp"

namespace opa {

// Closed-form predictions for the n_det = 0 conditional state. Everything
// is a function of epsilon = (1-eta) tanh^2 r and alpha' = alpha / cosh r.
struct ClosedFormContext {
    double epsilon = 0.0;
    double alpha_prime = 0.0;

    static ClosedFormContext from(double alpha, double r, double eta) {
        SchemeParams p;
        p.alpha = alpha;
        p.r = r;
        p.eta = eta;
        p.validate_physical();
        return ClosedFormContext{p.epsilon(), p.alpha_prime()};
    }

    static ClosedFormContext from(const SchemeParams& p) {
        p.validate_physical();
        return ClosedFormContext{p.epsilon(), p.alpha_prime()};
    }

    double q() const { return alpha_prime * alpha_prime; }
};

// Gaussian quadrature density: mean sqrt(2) alpha'/(1-eps), width
// 2 (dx)^2 = (1+eps)/(1-eps).
inline double quad_pdf(const ClosedFormContext& c, double x) {
    const double a = (1.0 - c.epsilon) / (1.0 + c.epsilon);
    const double mu = std::sqrt(2.0) * c.alpha_prime / (1.0 - c.epsilon);
    const double d = x - mu;
    return std::sqrt(a / M_PI) * std::exp(-a * d * d);
}

inline double quad_peak_position(const ClosedFormContext& c) {
    return std::sqrt(2.0) * c.alpha_prime / (1.0 - c.epsilon);
}

inline double quad_width_sq(const ClosedFormContext& c) {  // 2 (dx)^2
    return (1.0 + c.epsilon) / (1.0 - c.epsilon);
}

// Photon-number mass (1-eps) exp(-q/(1-eps)) eps^n L_n(-q/eps); the
// eps -> 0 limit is the Poisson distribution with mean q and is taken
// explicitly rather than through the indeterminate Laguerre form.
inline double photon_pmf(const ClosedFormContext& c, int n) {
    if (n < 0) throw std::invalid_argument("photon_pmf: n must be >= 0");
    const double q = c.q();
    if (c.epsilon == 0.0) {
        if (q == 0.0) return n == 0 ? 1.0 : 0.0;
        const auto lf = log_factorials(std::size_t(n));
        return std::exp(-q + n * std::log(q) - lf[std::size_t(n)]);
    }
    const double le = std::log(c.epsilon);
    return std::exp(std::log1p(-c.epsilon) - q / (1.0 - c.epsilon) + n * le
                    + log_laguerre_neg(n, -q / c.epsilon));
}

// <n> = (eps - eps^2 + q) / (1-eps)^2.
inline double mean_photons(const ClosedFormContext& c) {
    const double e = c.epsilon;
    return (e - e * e + c.q()) / ((1.0 - e) * (1.0 - e));
}

// Mandel Q; empty for the vacuum (eps = 0, alpha' = 0) where it is
// undefined.
inline std::optional<double> mandel_q(const ClosedFormContext& c) {
    const double e = c.epsilon;
    const double q = c.q();
    const double A = e - e * e + q;
    if (!(A > 0.0)) return std::nullopt;
    const double num = A * (1.0 - e + q) - q * q;
    return num / ((1.0 - e) * (1.0 - e) * A) - 1.0;
}

// Phase-space Gaussian centered at alpha'/(1-eps) with peak
// 2(1-eps)/(pi(1+eps)).
inline double wigner_gaussian(const ClosedFormContext& c, std::complex<double> gamma) {
    const double a = 2.0 * (1.0 - c.epsilon) / (1.0 + c.epsilon);
    const std::complex<double> center(c.alpha_prime / (1.0 - c.epsilon), 0.0);
    return (a / M_PI) * std::exp(-a * std::norm(gamma - center));
}

inline std::complex<double> wigner_center(const ClosedFormContext& c) {
    return {c.alpha_prime / (1.0 - c.epsilon), 0.0};
}

inline double wigner_peak(const ClosedFormContext& c) {
    return 2.0 * (1.0 - c.epsilon) / (M_PI * (1.0 + c.epsilon));
}

namespace detail {

// The same photon-number mass through the finite binomial-square series
//   eps^n sum_{m=0}^{n} n!/(m! ((n-m)!)^2) (q/eps)^(n-m)
// instead of the Laguerre recurrence; an independent evaluation route
// used for cross-checks. Returns the mass normalized by the analytic
// prefactor, i.e. directly comparable to photon_pmf.
inline double photon_pmf_binomial_series(const ClosedFormContext& c, int n,
                                         std::span<const double> lf) {
    if (!(c.epsilon > 0.0))
        throw std::invalid_argument("photon_pmf_binomial_series: requires eps > 0");
    const double q = c.q();
    const double le = std::log(c.epsilon);
    const double lr = q > 0.0 ? std::log(q / c.epsilon) : 0.0;
    double mx = -std::numeric_limits<double>::infinity();
    std::vector<double> terms;
    terms.reserve(std::size_t(n) + 1);
    for (int m = 0; m <= n; ++m) {
        if (n - m > 0 && q == 0.0) continue;
        const double t = lf[std::size_t(n)] - lf[std::size_t(m)]
                       - 2.0 * lf[std::size_t(n - m)] + (n - m) * lr;
        terms.push_back(t);
        mx = std::max(mx, t);
    }
    double s = 0.0;
    for (double t : terms) s += std::exp(t - mx);
    const double log_sum = mx + std::log(s) + n * le;
    return std::exp(std::log1p(-c.epsilon) - q / (1.0 - c.epsilon) + log_sum);
}

}  // namespace detail

}  // namespace opa
