#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <vector>

#include "opa/errors.hpp"
#include "opa/params.hpp"
#include "opa/special_functions.hpp"

namespace opa {

using cplx = std::complex<double>;

// Single-mode state in the truncated Fock basis, amplitudes indexed by
// photon number 0..n_max.
struct FockVector {
    std::vector<cplx> amps;

    int n_max() const { return static_cast<int>(amps.size()) - 1; }

    double norm_sq() const {
        double s = 0.0;
        for (const auto& a : amps) s += std::norm(a);
        return s;
    }
};

// Two-mode amplitude matrix c[m][k]; m = signal photon index, k = idler
// photon index, both 0..n_max.
struct TwoModeState {
    int n_max = 0;
    std::vector<cplx> amps;  // row-major (n_max+1) x (n_max+1)

    cplx at(int m, int k) const { return amps[std::size_t(m) * (n_max + 1) + k]; }

    double norm_sq() const {
        double s = 0.0;
        for (const auto& a : amps) s += std::norm(a);
        return s;
    }
};

// Hermitian density matrix over signal Fock indices 0..dim-1.
struct DensityMatrix {
    int dim = 0;
    std::vector<cplx> a;  // row-major dim x dim

    int n_max() const { return dim - 1; }
    cplx& at(int m, int n) { return a[std::size_t(m) * dim + n]; }
    const cplx& at(int m, int n) const { return a[std::size_t(m) * dim + n]; }

    double trace_real() const {
        double t = 0.0;
        for (int m = 0; m < dim; ++m) t += at(m, m).real();
        return t;
    }

    // Tr rho^2; for Hermitian rho this is the squared Frobenius norm.
    double purity() const {
        double s = 0.0;
        for (const auto& v : a) s += std::norm(v);
        return s;
    }

    double max_abs_imag() const {
        double s = 0.0;
        for (const auto& v : a) s = std::max(s, std::abs(v.imag()));
        return s;
    }

    double max_hermiticity_defect() const {
        double d = 0.0;
        for (int m = 0; m < dim; ++m)
            for (int n = m; n < dim; ++n)
                d = std::max(d, std::abs(at(m, n) - std::conj(at(n, m))));
        return d;
    }

    void hermitize() {
        for (int m = 0; m < dim; ++m) {
            at(m, m) = cplx(at(m, m).real(), 0.0);
            for (int n = m + 1; n < dim; ++n) {
                const cplx v = 0.5 * (at(m, n) + std::conj(at(n, m)));
                at(m, n) = v;
                at(n, m) = std::conj(v);
            }
        }
    }

    void normalize_trace() {
        const double t = trace_real();
        if (!(t > 0.0))
            throw numeric_error("DensityMatrix: nonpositive trace");
        const double inv = 1.0 / t;
        for (auto& v : a) v *= inv;
    }
};

namespace detail {

// Coherent amplitudes for a complex label; the public surface restricts
// to real nonnegative amplitudes, the oracle paths do not.
inline FockVector coherent_state_c(cplx alpha_prime, int n_max, double tail_tol) {
    FockVector v;
    v.amps.assign(std::size_t(n_max) + 1, cplx(0.0));
    const double mag = std::abs(alpha_prime);
    if (mag == 0.0) {
        v.amps[0] = 1.0;
        return v;
    }
    const auto lf = log_factorials(std::size_t(n_max));
    const double lmag = std::log(mag);
    const double phase = std::arg(alpha_prime);
    double mass = 0.0;
    for (int k = 0; k <= n_max; ++k) {
        const double l = -0.5 * mag * mag + k * lmag - 0.5 * lf[std::size_t(k)];
        const double m = std::exp(l);
        v.amps[std::size_t(k)] = std::polar(m, phase * k);
        mass += m * m;
    }
    if (1.0 - mass > tail_tol)
        throw truncation_error("coherent_state: Poisson tail beyond n_max exceeds tail_tol");
    return v;
}

// a†^m applied to base, normalized; *log_norm_sq receives the log of the
// squared norm of the raw result. Everything is done per entry in the log
// domain: the ladder factor sqrt(k!/(k-m)!) alone overflows for large m.
inline FockVector photon_added_impl(const FockVector& base, int m, double* log_norm_sq) {
    const int nb = base.n_max();
    if (m == 0) {
        if (log_norm_sq) *log_norm_sq = std::log(base.norm_sq());
        return base;
    }
    if (m > nb)
        throw truncation_error("photon_added_coherent: m exceeds truncated support");
    const auto lf = log_factorials(std::size_t(nb));
    std::vector<double> lmag(std::size_t(nb) + 1, -std::numeric_limits<double>::infinity());
    std::vector<double> ph(std::size_t(nb) + 1, 0.0);
    double shift = -std::numeric_limits<double>::infinity();
    for (int k = m; k <= nb; ++k) {
        const cplx b = base.amps[std::size_t(k - m)];
        if (b == cplx(0.0)) continue;
        const double l = 0.5 * (lf[std::size_t(k)] - lf[std::size_t(k - m)]) + std::log(std::abs(b));
        lmag[std::size_t(k)] = l;
        ph[std::size_t(k)] = std::arg(b);
        shift = std::max(shift, l);
    }
    if (!std::isfinite(shift))
        throw truncation_error("photon_added_coherent: result underflows truncated support");
    double s2 = 0.0;
    for (int k = m; k <= nb; ++k) {
        const double l = lmag[std::size_t(k)];
        if (std::isfinite(l)) s2 += std::exp(2.0 * (l - shift));
    }
    if (log_norm_sq) *log_norm_sq = 2.0 * shift + std::log(s2);
    const double inv = 1.0 / std::sqrt(s2);
    FockVector out;
    out.amps.assign(std::size_t(nb) + 1, cplx(0.0));
    for (int k = m; k <= nb; ++k) {
        const double l = lmag[std::size_t(k)];
        if (std::isfinite(l))
            out.amps[std::size_t(k)] = std::polar(std::exp(l - shift) * inv, ph[std::size_t(k)]);
    }
    return out;
}

// Rectangular OPA amplitude matrix c[m][k] over signal 0..n_sig, idler
// 0..n_idl, normalized by explicit summation. The amplitude is
//   c[m][k] ~ tanh^k r * alpha'^(m-k) * sqrt(m!) / (sqrt(k!) (m-k)!)
// and vanishes for m < k: every idler photon pairs with one added signal
// photon.
inline std::vector<cplx> two_mode_rect(cplx alpha, double r, int n_sig, int n_idl) {
    const std::size_t cols = std::size_t(n_idl) + 1;
    std::vector<cplx> c(std::size_t(n_sig + 1) * cols, cplx(0.0));
    const cplx alpha_prime = alpha / std::cosh(r);
    const double th = std::tanh(r);
    const double mag = std::abs(alpha_prime);
    const double phase = std::arg(alpha_prime);
    const auto lf = log_factorials(std::size_t(n_sig));
    const double lth = th > 0.0 ? std::log(th) : 0.0;
    const double lmagv = mag > 0.0 ? std::log(mag) : 0.0;

    std::vector<double> lmag(c.size(), -std::numeric_limits<double>::infinity());
    double shift = -std::numeric_limits<double>::infinity();
    for (int m = 0; m <= n_sig; ++m) {
        const int kmax = std::min(m, n_idl);
        for (int k = 0; k <= kmax; ++k) {
            if (k > 0 && th == 0.0) continue;
            if (m > k && mag == 0.0) continue;
            const double l = k * lth + (m - k) * lmagv - 0.5 * mag * mag
                           + 0.5 * lf[std::size_t(m)] - 0.5 * lf[std::size_t(k)]
                           - lf[std::size_t(m - k)];
            lmag[std::size_t(m) * cols + k] = l;
            shift = std::max(shift, l);
        }
    }
    double mass = 0.0;
    for (int m = 0; m <= n_sig; ++m) {
        const int kmax = std::min(m, n_idl);
        for (int k = 0; k <= kmax; ++k) {
            const double l = lmag[std::size_t(m) * cols + k];
            if (!std::isfinite(l)) continue;
            const double a = std::exp(l - shift);
            c[std::size_t(m) * cols + k] = std::polar(a, phase * (m - k));
            mass += a * a;
        }
    }
    const double inv = 1.0 / std::sqrt(mass);
    for (auto& v : c) v *= inv;
    return c;
}

// log of the unnormalized conditional photon-number mass at k for detected
// count n: a finite all-positive sum over the number m of added photons,
//   sum_{m=n}^{k} eps^(m-n)/(m-n)! * k!/((k-m)!)^2 * q^(k-m),   q = alpha'^2.
inline double log_conditional_pmf_term(int k, int n_det, double eps, double q,
                                       std::span<const double> lf) {
    const double neg_inf = -std::numeric_limits<double>::infinity();
    if (k < n_det) return neg_inf;
    const double leps = eps > 0.0 ? std::log(eps) : 0.0;
    const double lq = q > 0.0 ? std::log(q) : 0.0;
    double mx = neg_inf;
    const int m_lo = eps > 0.0 ? n_det : n_det;
    const int m_hi = eps > 0.0 ? k : n_det;
    // first pass: max shift
    std::vector<double> terms;
    terms.reserve(std::size_t(m_hi - m_lo) + 1);
    for (int m = m_lo; m <= m_hi; ++m) {
        if (m > n_det && eps == 0.0) break;
        if (k > m && q == 0.0) continue;
        const double t = (m - n_det) * leps - lf[std::size_t(m - n_det)]
                       + lf[std::size_t(k)] - 2.0 * lf[std::size_t(k - m)]
                       + (k - m) * lq;
        terms.push_back(t);
        mx = std::max(mx, t);
    }
    if (!std::isfinite(mx)) return neg_inf;
    double s = 0.0;
    for (double t : terms) s += std::exp(t - mx);
    return mx + std::log(s);
}

inline double log_add(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// Scans the conditional photon-number series until the neglected tail is
// provably below tail_tol of the accumulated mass. Returns the cutoff K;
// throws once the scan hits the hard cap.
inline int scan_conditional_pmf(const SchemeParams& p) {
    const double eps = p.epsilon();
    const double ap = p.alpha_prime();
    const double q = ap * ap;
    const auto lf = log_factorials(std::size_t(p.n_max_cap) + 80);
    const double rho_star = std::max(0.5, 0.5 * (1.0 + eps));
    const double log_tail_factor = std::log(rho_star / (1.0 - rho_star));
    const double neg_inf = -std::numeric_limits<double>::infinity();

    double log_s = neg_inf;
    double prev = neg_inf;
    int consecutive = 0;
    int cutoff = -1;
    for (int k = p.n_det; k <= p.n_max_cap; ++k) {
        const double lt = log_conditional_pmf_term(k, p.n_det, eps, q, lf);
        log_s = log_add(log_s, lt);
        if (std::isfinite(prev) && std::isfinite(lt) && lt < prev + std::log(rho_star))
            ++consecutive;
        else
            consecutive = 0;
        prev = lt;
        if (consecutive >= 3 &&
            lt + log_tail_factor < log_s + std::log(p.tail_tol) - std::log(4.0)) {
            cutoff = k;
            // validation pass: the next stretch of explicit terms must
            // confirm the geometric bound
            double extra = neg_inf;
            double last = lt;
            bool ok = true;
            for (int j = k + 1; j <= std::min(k + 64, p.n_max_cap); ++j) {
                const double t = log_conditional_pmf_term(j, p.n_det, eps, q, lf);
                extra = log_add(extra, t);
                if (t > last + std::log(rho_star)) ok = false;
                last = t;
            }
            const double rest = log_add(extra, last + log_tail_factor);
            if (ok && rest < log_s + std::log(p.tail_tol)) return cutoff;
            consecutive = 0;  // keep scanning
        }
    }
    throw truncation_error("choose_truncation: required n_max exceeds the hard cap");
}

}  // namespace detail

// Coherent state |alpha'> over |0..n_max>. Amplitudes are the exact
// Poisson amplitudes, not renormalized; the neglected tail must stay
// below tail_tol.
inline FockVector coherent_state(double alpha_prime, int n_max, double tail_tol = 1e-12) {
    if (!(alpha_prime >= 0.0) || !std::isfinite(alpha_prime))
        throw std::invalid_argument("coherent_state: amplitude must be finite and >= 0");
    if (n_max < 1)
        throw std::invalid_argument("coherent_state: n_max must be >= 1");
    if (!(tail_tol > 0.0 && tail_tol < 1.0))
        throw std::invalid_argument("coherent_state: tail_tol must lie in (0, 1)");
    return detail::coherent_state_c(cplx(alpha_prime, 0.0), n_max, tail_tol);
}

// Normalized a†^m |base>. For base = |alpha'> the raw norm is
// sqrt(m! L_m(-alpha'^2)); condition_on_idler checks that identity against
// the truncated sum.
inline FockVector photon_added_coherent(const FockVector& base, int m) {
    if (m < 0)
        throw std::invalid_argument("photon_added_coherent: m must be >= 0");
    return detail::photon_added_impl(base, m, nullptr);
}

// OPA output state for a coherent signal and vacuum idler, on a square
// (n_max+1)^2 truncation.
inline TwoModeState opa_two_mode_state(const SchemeParams& p) {
    p.validate();
    TwoModeState s;
    s.n_max = p.n_max;
    s.amps = detail::two_mode_rect(cplx(p.alpha, 0.0), p.r, p.n_max, p.n_max);
    // boundary mass in the last signal row and last idler column bounds
    // the neglected tail
    double row = 0.0, col = 0.0;
    for (int k = 0; k <= p.n_max; ++k) row += std::norm(s.at(p.n_max, k));
    for (int m = 0; m <= p.n_max; ++m) col += std::norm(s.at(m, p.n_max));
    if (row > p.tail_tol || col > p.tail_tol)
        throw truncation_error("opa_two_mode_state: boundary mass exceeds tail_tol");
    return s;
}

// Truncation cutoff sized so that the conditional signal state neglects
// less than tail_tol of its mass. The validated diagonal cutoff is padded
// for the support of the highest contributing photon-added states, which
// extends roughly q + 2 sqrt(K q) past the diagonal cutoff K.
inline int choose_truncation(const SchemeParams& p) {
    p.validate_physical();
    if (p.n_det > 0 && (p.eta == 0.0 || p.r == 0.0))
        throw std::invalid_argument(
            "choose_truncation: conditioning on a zero-probability outcome");
    const int k_sum = detail::scan_conditional_pmf(p);
    const double q = p.alpha_prime() * p.alpha_prime();
    const int margin = static_cast<int>(std::ceil(q + 2.0 * std::sqrt(std::max(k_sum, 1) * q))) + 32;
    const int n = k_sum + margin;
    if (n > p.n_max_cap)
        throw truncation_error("choose_truncation: required n_max exceeds the hard cap");
    return n;
}

}  // namespace opa
