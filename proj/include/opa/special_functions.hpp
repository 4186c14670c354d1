#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "opa/errors.hpp"

namespace opa {

// log(k!) for k = 0..n by compensated cumulative summation. std::lgamma
// drifts by ~1e-12 absolute near k ~ 2000, which is too coarse for the
// tail tolerances used downstream.
inline std::vector<double> log_factorials(std::size_t n) {
    std::vector<double> lf(n + 1, 0.0);
    double sum = 0.0, comp = 0.0;
    for (std::size_t k = 2; k <= n; ++k) {
        const double term = std::log(static_cast<double>(k)) - comp;
        const double next = sum + term;
        comp = (next - sum) - term;
        sum = next;
        lf[k] = sum;
    }
    return lf;
}

// Normalized harmonic-oscillator eigenfunctions psi_n(x) for n = 0..n_max
// under the convention x = (a + a†)/sqrt(2): a real coherent state |a>
// has <x> = sqrt(2) a and 2 (dx)^2 = 1. Evaluated by the normalized
// three-term recursion; raw Hermite polynomials overflow near n ~ 150.
inline void hermite_functions(double x, std::size_t n_max, std::span<double> out) {
    if (out.size() < n_max + 1)
        throw std::invalid_argument("hermite_functions: output span too small");
    constexpr double inv_pi_quartic = 0.7511255444649425;  // pi^{-1/4}
    out[0] = inv_pi_quartic * std::exp(-0.5 * x * x);
    if (n_max == 0) return;
    out[1] = std::sqrt(2.0) * x * out[0];
    for (std::size_t n = 1; n < n_max; ++n) {
        out[n + 1] = std::sqrt(2.0 / (n + 1)) * x * out[n]
                   - std::sqrt(static_cast<double>(n) / (n + 1)) * out[n - 1];
    }
}

inline std::vector<double> hermite_functions(double x, std::size_t n_max) {
    std::vector<double> out(n_max + 1);
    hermite_functions(x, n_max, out);
    return out;
}

// Laguerre polynomial L_n(q) for q <= 0. All recursion terms share one
// sign there, so the forward recurrence is cancellation-free. Positive
// arguments are not needed by this pipeline and are rejected.
inline double laguerre(int n, double q) {
    if (q > 0.0)
        throw std::domain_error("laguerre: q > 0 not supported");
    if (n < 0)
        throw std::invalid_argument("laguerre: order must be >= 0");
    if (n == 0) return 1.0;
    double p0 = 1.0, p1 = 1.0 - q;
    for (int k = 1; k < n; ++k) {
        const double p2 = ((2.0 * k + 1.0 - q) * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
    }
    return p1;
}

// log L_n(q) for q <= 0, with periodic rescaling; L_n(-|q|) grows like
// exp(2 sqrt(n |q|)) and overflows the plain recurrence for large n.
inline double log_laguerre_neg(int n, double q) {
    if (q > 0.0)
        throw std::domain_error("log_laguerre_neg: q > 0 not supported");
    if (n < 0)
        throw std::invalid_argument("log_laguerre_neg: order must be >= 0");
    if (n == 0) return 0.0;
    constexpr double big = 1e250, inv_big = 1e-250;
    const double log_big = std::log(big);
    double p0 = 1.0, p1 = 1.0 - q, shift = 0.0;
    for (int k = 1; k < n; ++k) {
        double p2 = ((2.0 * k + 1.0 - q) * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
        if (p1 > big) {
            p0 *= inv_big;
            p1 *= inv_big;
            shift += log_big;
        }
    }
    return std::log(p1) + shift;
}

// Probability that a detector of quantum efficiency eta registers n counts
// when m photons arrive: C(m,n) eta^n (1-eta)^(m-n). Evaluated as an
// extended-precision ratio product; a log-domain route cancels too much
// in log C(m,n) to keep the completeness sum at 1e-14.
inline double efficiency_weight(int m, int n, double eta) {
    if (n < 0 || m < n)
        throw std::invalid_argument("efficiency_weight: need m >= n >= 0");
    if (!(eta >= 0.0 && eta <= 1.0))
        throw std::invalid_argument("efficiency_weight: eta must lie in [0, 1]");
    if (eta == 0.0) return n == 0 ? 1.0 : 0.0;
    if (eta == 1.0) return n == m ? 1.0 : 0.0;
    long double w = 1.0L;
    for (int j = 1; j <= n; ++j)
        w *= static_cast<long double>(m - n + j) / j * static_cast<long double>(eta);
    w *= std::pow(1.0L - static_cast<long double>(eta), m - n);
    return static_cast<double>(w);
}

}  // namespace opa
