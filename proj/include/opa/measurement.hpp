#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "opa/errors.hpp"
#include "opa/fock.hpp"
#include "opa/parallel.hpp"
#include "opa/params.hpp"
#include "opa/special_functions.hpp"

namespace opa {

// Conditional signal state as a normalized mixture of photon-added
// coherent states a†^m |alpha'>, m = n_det..M.
struct SignalEnsemble {
    std::vector<double> weights;     // nonnegative, sums to 1
    std::vector<FockVector> states;  // normalized a†^m |alpha'>
    std::vector<int> m_indices;      // contiguous n_det..M
};

namespace detail {

inline void reject_zero_probability(const SchemeParams& p) {
    if (p.n_det > 0 && (p.eta == 0.0 || p.r == 0.0))
        throw std::invalid_argument(
            "conditioning on n_det > 0 counts is a zero-probability outcome "
            "when eta = 0 or r = 0");
}

struct WeightSeries {
    int m_lo = 0;
    std::vector<double> weights;  // normalized, index j <-> m = m_lo + j
};

// Mixture weights over the number m of added photons,
//   w_m ~ C(m, n_det) eps^(m-n_det) L_m(-q),   q = alpha'^2,
// i.e. the detector response times the pair-generation factor times the
// squared norm of a†^m |alpha'>. Scanned until the neglected tail is
// provably below tail_tol of the accumulated mass.
inline WeightSeries ensemble_weight_series(const SchemeParams& p, int hard_cap) {
    const double eps = p.epsilon();
    const double ap = p.alpha_prime();
    const double q = ap * ap;
    const int n = p.n_det;

    WeightSeries out;
    out.m_lo = n;
    if (eps == 0.0) {
        out.weights = {1.0};
        return out;
    }

    const auto lf = log_factorials(std::size_t(hard_cap) + 80);
    const double leps = std::log(eps);
    const double rho_star = std::max(0.5, 0.5 * (1.0 + eps));
    const double log_tail_factor = std::log(rho_star / (1.0 - rho_star));
    const double neg_inf = -std::numeric_limits<double>::infinity();

    auto log_w = [&](int m) {
        return lf[std::size_t(m)] - lf[std::size_t(n)] - lf[std::size_t(m - n)]
             + (m - n) * leps + log_laguerre_neg(m, -q);
    };

    std::vector<double> lws;
    double log_s = neg_inf, prev = neg_inf;
    int consecutive = 0;
    int cutoff = -1;
    for (int m = n; m <= hard_cap; ++m) {
        const double lw = log_w(m);
        lws.push_back(lw);
        log_s = log_add(log_s, lw);
        if (std::isfinite(prev) && lw < prev + std::log(rho_star))
            ++consecutive;
        else
            consecutive = 0;
        prev = lw;
        if (consecutive >= 3 &&
            lw + log_tail_factor < log_s + std::log(p.tail_tol) - std::log(4.0)) {
            double extra = neg_inf, last = lw;
            bool ok = true;
            for (int j = m + 1; j <= std::min(m + 64, hard_cap); ++j) {
                const double t = log_w(j);
                extra = log_add(extra, t);
                if (t > last + std::log(rho_star)) ok = false;
                last = t;
            }
            if (ok && log_add(extra, last + log_tail_factor) <
                          log_s + std::log(p.tail_tol)) {
                cutoff = m;
                break;
            }
            consecutive = 0;
        }
    }
    if (cutoff < 0)
        throw truncation_error(
            "condition_on_idler: ensemble tail cannot be brought under tail_tol "
            "within the hard cap");

    double shift = neg_inf;
    for (double lw : lws) shift = std::max(shift, lw);
    out.weights.resize(lws.size());
    double total = 0.0;
    for (std::size_t j = 0; j < lws.size(); ++j) {
        out.weights[j] = std::exp(lws[j] - shift);
        total += out.weights[j];
    }
    for (double& w : out.weights) w /= total;
    return out;
}

}  // namespace detail

// Conditions the OPA output on the idler detector reporting n_det counts.
// The returned mixture represents the conditional signal state exactly
// (up to tail_tol): the pure-state decomposition of the detection POVM
// applied to the two-mode state.
inline SignalEnsemble condition_on_idler(const SchemeParams& p) {
    p.validate();
    detail::reject_zero_probability(p);

    const double ap = p.alpha_prime();
    const double q = ap * ap;
    auto series = detail::ensemble_weight_series(p, p.n_max);

    const FockVector base = coherent_state(ap, p.n_max, p.tail_tol);
    const auto lf = log_factorials(std::size_t(p.n_max));
    const double norm_slack = std::max(1e-8, 100.0 * p.tail_tol);

    SignalEnsemble ens;
    ens.weights = std::move(series.weights);
    ens.states.reserve(ens.weights.size());
    ens.m_indices.reserve(ens.weights.size());
    for (std::size_t j = 0; j < ens.weights.size(); ++j) {
        const int m = series.m_lo + static_cast<int>(j);
        double log_norm_sq = 0.0;
        ens.states.push_back(detail::photon_added_impl(base, m, &log_norm_sq));
        ens.m_indices.push_back(m);
        // the exact squared norm of a†^m |alpha'> is m! L_m(-q); a deficit
        // means the member's support was clipped by n_max
        const double expected = lf[std::size_t(m)] + log_laguerre_neg(m, -q);
        if (std::abs(1.0 - std::exp(log_norm_sq - expected)) > norm_slack)
            throw truncation_error(
                "condition_on_idler: member state support exceeds n_max");
    }
    return ens;
}

// rho = sum_m w_m |psi_m><psi_m| on Fock indices 0..n_max.
inline DensityMatrix ensemble_to_density(const SignalEnsemble& ens, int n_max,
                                         double tail_tol = 1e-12) {
    if (ens.weights.empty() || ens.weights.size() != ens.states.size())
        throw std::invalid_argument("ensemble_to_density: empty or inconsistent ensemble");
    if (n_max < 1)
        throw std::invalid_argument("ensemble_to_density: n_max must be >= 1");
    double wsum = 0.0;
    for (double w : ens.weights) {
        if (!(w >= 0.0))
            throw std::invalid_argument("ensemble_to_density: negative weight");
        wsum += w;
    }
    if (std::abs(wsum - 1.0) > 1e-9)
        throw std::invalid_argument("ensemble_to_density: weights do not sum to 1");

    const int dim = n_max + 1;
    // members longer than the target truncation may only carry negligible
    // mass beyond it
    std::vector<const FockVector*> members(ens.states.size());
    for (std::size_t j = 0; j < ens.states.size(); ++j) {
        const FockVector& s = ens.states[j];
        members[j] = &s;
        if (s.n_max() > n_max) {
            double beyond = 0.0;
            for (int k = n_max + 1; k <= s.n_max(); ++k)
                beyond += std::norm(s.amps[std::size_t(k)]);
            if (beyond > tail_tol)
                throw truncation_error(
                    "ensemble_to_density: member support beyond n_max exceeds tail_tol");
        }
    }

    DensityMatrix rho;
    rho.dim = dim;
    rho.a.assign(std::size_t(dim) * dim, cplx(0.0));
    parallel_for(std::size_t(dim), [&](std::size_t m) {
        for (std::size_t j = 0; j < members.size(); ++j) {
            const auto& amps = members[j]->amps;
            if (m >= amps.size()) continue;
            const cplx sm = amps[m];
            if (sm == cplx(0.0)) continue;
            const double w = ens.weights[j];
            const std::size_t hi = std::min<std::size_t>(amps.size(), std::size_t(dim));
            for (std::size_t nn = m; nn < hi; ++nn)
                rho.a[m * dim + nn] += w * sm * std::conj(amps[nn]);
        }
    });
    for (int m = 0; m < dim; ++m)
        for (int nn = m + 1; nn < dim; ++nn)
            rho.at(nn, m) = std::conj(rho.at(m, nn));
    rho.hermitize();
    rho.normalize_trace();
    return rho;
}

namespace detail {

// Brute-force conditioning: build the two-mode state, apply the binomial
// detector POVM to the idler index, and trace it out. Independent of the
// photon-added decomposition; this is the oracle every closed form is
// tested against.
inline DensityMatrix condition_via_oracle_c(cplx alpha, const SchemeParams& p) {
    p.validate();
    reject_zero_probability(p);

    const double q = std::norm(alpha / std::cosh(p.r));
    auto series = ensemble_weight_series(p, p.n_max_cap);
    const int k_idl = series.m_lo + static_cast<int>(series.weights.size()) - 1 + 8;
    const int n_build = std::max(
        p.n_max,
        k_idl + static_cast<int>(std::ceil(q + 2.0 * std::sqrt(std::max(k_idl, 1) * q))) + 16);

    const auto c = two_mode_rect(alpha, p.r, n_build, k_idl);
    const std::size_t cols = std::size_t(k_idl) + 1;

    std::vector<double> u(cols, 0.0);
    for (int k = p.n_det; k <= k_idl; ++k)
        u[std::size_t(k)] = efficiency_weight(k, p.n_det, p.eta);

    // diagonal over the full build decides whether n_max really captures
    // the conditional state
    std::vector<double> diag(std::size_t(n_build) + 1, 0.0);
    double total = 0.0;
    for (int m = 0; m <= n_build; ++m) {
        double d = 0.0;
        const cplx* row = &c[std::size_t(m) * cols];
        for (int k = 0; k <= std::min(m, k_idl); ++k) d += u[std::size_t(k)] * std::norm(row[k]);
        diag[std::size_t(m)] = d;
        total += d;
    }
    if (!(total > 0.0))
        throw std::invalid_argument("condition_via_oracle: zero-probability outcome");
    double tail = 0.0;
    for (int m = p.n_max + 1; m <= n_build; ++m) tail += diag[std::size_t(m)];
    if (tail > p.tail_tol * total)
        throw truncation_error("condition_via_oracle: n_max too small for the conditional state");

    const int dim = p.n_max + 1;
    DensityMatrix rho;
    rho.dim = dim;
    rho.a.assign(std::size_t(dim) * dim, cplx(0.0));
    const double inv_total = 1.0 / total;
    parallel_for(std::size_t(dim), [&](std::size_t m) {
        const cplx* rm = &c[m * cols];
        for (std::size_t nn = m; nn < std::size_t(dim); ++nn) {
            const cplx* rn = &c[nn * cols];
            cplx acc(0.0);
            for (std::size_t k = 0; k < cols; ++k)
                acc += u[k] * rm[k] * std::conj(rn[k]);
            rho.a[m * dim + nn] = acc * inv_total;
        }
    });
    for (int m = 0; m < dim; ++m)
        for (int nn = m + 1; nn < dim; ++nn)
            rho.at(nn, m) = std::conj(rho.at(m, nn));
    rho.hermitize();
    rho.normalize_trace();
    return rho;
}

}  // namespace detail

// The two-mode POVM route to the conditional signal state; the analytic
// route (condition_on_idler + ensemble_to_density) must agree with it.
inline DensityMatrix condition_via_oracle(const SchemeParams& p) {
    return detail::condition_via_oracle_c(cplx(p.alpha, 0.0), p);
}

}  // namespace opa
