#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "opa/analytic.hpp"
#include "opa/errors.hpp"
#include "opa/fock.hpp"
#include "opa/measurement.hpp"
#include "opa/metrics.hpp"
#include "opa/observables.hpp"
#include "opa/params.hpp"

namespace opa {

struct CheckResult {
    std::string id;
    bool pass = false;
    double measured = 0.0;
    double threshold = 0.0;
    std::string note;
};

enum class VerifyLevel { quick, full };

namespace detail {

inline CheckResult bounded(std::string id, double measured, double threshold,
                           std::string note = {}) {
    return CheckResult{std::move(id), measured <= threshold, measured, threshold,
                       std::move(note)};
}

template <class F>
inline CheckResult guarded(const std::string& id, double threshold, F&& f) {
    try {
        return f();
    } catch (const std::exception& e) {
        return CheckResult{id, false, std::numeric_limits<double>::quiet_NaN(), threshold,
                           e.what()};
    }
}

// Neglected conditional mass beyond n_max, from the same all-positive
// series that sizes truncations, at a fixed reference tolerance.
inline double neglected_conditional_mass(const SchemeParams& p) {
    const double eps = p.epsilon();
    const double ap = p.alpha_prime();
    const double q = ap * ap;
    const auto lf = log_factorials(std::size_t(p.n_max) + 600);
    const double neg_inf = -std::numeric_limits<double>::infinity();
    double log_total = neg_inf, log_tail = neg_inf, last = neg_inf;
    const int k_hi = p.n_max + 512;
    for (int k = p.n_det; k <= k_hi; ++k) {
        const double lt = log_conditional_pmf_term(k, p.n_det, eps, q, lf);
        log_total = log_add(log_total, lt);
        if (k > p.n_max) log_tail = log_add(log_tail, lt);
        last = lt;
    }
    // geometric bound on the rest
    const double rho_star = std::max(0.5, 0.5 * (1.0 + eps));
    if (std::isfinite(last))
        log_tail = log_add(log_tail, last + std::log(rho_star / (1.0 - rho_star)));
    if (!std::isfinite(log_tail)) return 0.0;
    return std::exp(log_tail - log_total);
}

inline double closed_form_worst_gap(const SchemeParams& p, const DensityMatrix& rho) {
    const auto ctx = ClosedFormContext::from(p);
    double worst = 0.0;

    const auto dist = quadrature_distribution(rho, suggest_quadrature_grid(rho, 0.05));
    for (std::size_t i = 0; i < dist.coords.size(); ++i)
        worst = std::max(worst, std::abs(dist.probs[i] - quad_pdf(ctx, dist.coords[i])));

    for (int n = 0; n < rho.dim; ++n)
        worst = std::max(worst, std::abs(rho.at(n, n).real() - photon_pmf(ctx, n)));

    const auto mom = moments(rho);
    worst = std::max(worst, std::abs(mom.mean_n - mean_photons(ctx)));
    const auto q_ana = mandel_q(ctx);
    if (mom.mandel_q && q_ana)
        worst = std::max(worst, std::abs(*mom.mandel_q - *q_ana));

    const cplx center = wigner_center(ctx);
    const double sig = std::sqrt((1.0 + ctx.epsilon) / (4.0 * (1.0 - ctx.epsilon)));
    std::vector<cplx> pts;
    for (int i = -2; i <= 2; ++i)
        for (int j = -2; j <= 2; ++j)
            pts.emplace_back(center.real() + i * sig, center.imag() + j * sig);
    const auto w = wigner_points(rho, pts);
    for (std::size_t i = 0; i < pts.size(); ++i)
        worst = std::max(worst, std::abs(w[i] - wigner_gaussian(ctx, pts[i])));
    return worst;
}

}  // namespace detail

// The invariant suite behind the `verify` subcommand. Thresholds are the
// repository's declared tolerances, fixed independently of the caller's
// tail_tol so that a corrupted configuration is flagged rather than
// excused.
inline std::vector<CheckResult> run_verification(SchemeParams base,
                                                 VerifyLevel level = VerifyLevel::full) {
    base.validate_physical();
    if (base.n_max < 1) base.n_max = choose_truncation(base);
    std::vector<CheckResult> out;
    auto add = [&](CheckResult r) { out.push_back(std::move(r)); };

    // detector model sums to one over all outcomes
    add(detail::guarded("povm-completeness", 1e-14, [&] {
        double worst = 0.0;
        for (int m = 0; m <= 200; ++m) {
            for (int ie = 0; ie <= 10; ++ie) {
                const double eta = ie / 10.0;
                double s = 0.0;
                for (int n = 0; n <= m; ++n) s += efficiency_weight(m, n, eta);
                worst = std::max(worst, std::abs(s - 1.0));
            }
        }
        return detail::bounded("povm-completeness", worst, 1e-14);
    }));

    add(detail::guarded("laguerre-recurrence-vs-series", 1e-10, [&] {
        const auto lf = log_factorials(128);
        double worst = 0.0;
        for (int n : {5, 20, 50, 100}) {
            for (double q : {-50.0, -10.0, -1.0, -0.1}) {
                double series = 0.0;
                for (int k = 0; k <= n; ++k)
                    series += std::exp(lf[std::size_t(n)] - lf[std::size_t(n - k)]
                                       - 2.0 * lf[std::size_t(k)] + k * std::log(-q));
                worst = std::max(worst, std::abs(laguerre(n, q) - series) / series);
            }
        }
        return detail::bounded("laguerre-recurrence-vs-series", worst, 1e-10);
    }));

    add(detail::guarded("hermite-orthonormality", 1e-8, [&] {
        const int nmax = 50;
        const GridSpec g{-12.0, 12.0, 0.01};
        const int npts = g.count();
        std::vector<double> gram(std::size_t(nmax + 1) * (nmax + 1), 0.0);
        std::vector<double> psi(nmax + 1);
        for (int i = 0; i < npts; ++i) {
            hermite_functions(g.point(i), nmax, psi);
            const double w = (i == 0 || i == npts - 1) ? 0.5 : 1.0;
            for (int m = 0; m <= nmax; ++m)
                for (int n = m; n <= nmax; ++n)
                    gram[std::size_t(m) * (nmax + 1) + n] += w * psi[m] * psi[n];
        }
        double worst = 0.0;
        for (int m = 0; m <= nmax; ++m)
            for (int n = m; n <= nmax; ++n) {
                const double v = gram[std::size_t(m) * (nmax + 1) + n] * g.step;
                worst = std::max(worst, std::abs(v - (m == n ? 1.0 : 0.0)));
            }
        return detail::bounded("hermite-orthonormality", worst, 1e-8);
    }));

    add(detail::guarded("photon-pmf-normalization", 1e-10, [&] {
        const auto ctx = base.n_det == 0 && base.epsilon() > 0.0
                             ? ClosedFormContext::from(base)
                             : ClosedFormContext::from(5.0, 1.5, 0.1);
        double s = 0.0;
        for (int n = 0; n <= 4000; ++n) {
            s += photon_pmf(ctx, n);
            if (1.0 - s < 1e-13 && n > 16) break;
        }
        return detail::bounded("photon-pmf-normalization", std::abs(1.0 - s), 1e-10,
                               "prefactor of the closed-form mass function");
    }));

    add(detail::guarded("photon-pmf-binomial-route", 1e-10, [&] {
        const auto ctx = base.n_det == 0 && base.epsilon() > 0.0
                             ? ClosedFormContext::from(base)
                             : ClosedFormContext::from(5.0, 1.5, 0.1);
        const auto lf = log_factorials(128);
        double worst = 0.0;
        for (int n = 0; n <= 100; ++n) {
            const double a = photon_pmf(ctx, n);
            const double b = detail::photon_pmf_binomial_series(ctx, n, lf);
            worst = std::max(worst, std::abs(a - b) / std::max(a, 1e-300));
        }
        return detail::bounded("photon-pmf-binomial-route", worst, 1e-10);
    }));

    add(detail::guarded("truncation-adequacy", 1e-11, [&] {
        return detail::bounded("truncation-adequacy",
                               detail::neglected_conditional_mass(base), 1e-11,
                               "conditional mass neglected beyond n_max");
    }));

    DensityMatrix rho_ens, rho_orc;
    add(detail::guarded("path-equivalence", 1e-9, [&] {
        rho_ens = ensemble_to_density(condition_on_idler(base), base.n_max, base.tail_tol);
        rho_orc = condition_via_oracle(base);
        return detail::bounded("path-equivalence",
                               trace_distance_within(rho_ens, rho_orc, 1e-9), 1e-9,
                               "mixture route vs two-mode POVM route");
    }));

    add(detail::guarded("conditional-trace", 1e-11, [&] {
        if (rho_orc.dim == 0) throw numeric_error("oracle state unavailable");
        return detail::bounded("conditional-trace",
                               photon_distribution(rho_orc).norm_residual, 1e-11);
    }));

    if (base.n_det == 0) {
        add(detail::guarded("closed-forms-vs-oracle", 1e-7, [&] {
            if (rho_orc.dim == 0) throw numeric_error("oracle state unavailable");
            return detail::bounded("closed-forms-vs-oracle",
                                   detail::closed_form_worst_gap(base, rho_orc), 1e-7);
        }));
        add(detail::guarded("wigner-positivity", 1e-9, [&] {
            if (rho_orc.dim == 0) throw numeric_error("oracle state unavailable");
            const auto grid = wigner(rho_orc, suggest_wigner_grid(rho_orc));
            return detail::bounded("wigner-positivity", -grid.min_value(), 1e-9);
        }));
    }

    add(detail::guarded("eta1-purity", 1e-10, [&] {
        SchemeParams p = base;
        p.eta = 1.0;
        p.n_max = choose_truncation(p);
        const auto rho = condition_via_oracle(p);
        return detail::bounded("eta1-purity", std::abs(rho.purity() - 1.0), 1e-10,
                               "perfect detection projects on a pure state");
    }));

    add(detail::guarded("r0-identity", 1e-12, [&] {
        SchemeParams p = base;
        p.r = 0.0;
        p.n_det = 0;
        p.n_max = choose_truncation(p);
        const auto rho = ensemble_to_density(condition_on_idler(p), p.n_max, p.tail_tol);
        const auto base_state = coherent_state(p.alpha, p.n_max, p.tail_tol);
        DensityMatrix proj;
        proj.dim = p.n_max + 1;
        proj.a.assign(std::size_t(proj.dim) * proj.dim, cplx(0.0));
        for (int m = 0; m < proj.dim; ++m)
            for (int n = 0; n < proj.dim; ++n)
                proj.at(m, n) = base_state.amps[std::size_t(m)]
                              * std::conj(base_state.amps[std::size_t(n)]);
        proj.normalize_trace();
        return detail::bounded("r0-identity", trace_distance_within(rho, proj, 1e-12),
                               1e-12, "no gain leaves the input coherent state");
    }));

    if (level == VerifyLevel::quick) return out;

    add(detail::guarded("wigner-marginal-consistency", 1e-6, [&] {
        if (rho_orc.dim == 0) throw numeric_error("oracle state unavailable");
        const auto qgrid = suggest_quadrature_grid(rho_orc, 0.05);
        const auto qd = quadrature_distribution(rho_orc, qgrid);
        const auto wspec = suggest_wigner_grid(rho_orc, 0.0, 1.15);
        const int ni = wspec.im.count();
        double worst = 0.0;
        for (int s = 0; s <= 20; ++s) {
            const double x = qgrid.lo + (qgrid.hi - qgrid.lo) * s / 20.0;
            std::vector<cplx> pts(ni);
            for (int j = 0; j < ni; ++j) pts[j] = cplx(x / std::sqrt(2.0), wspec.im.point(j));
            const auto w = wigner_points(rho_orc, pts);
            double integ = 0.0;
            for (int j = 0; j < ni; ++j)
                integ += ((j == 0 || j == ni - 1) ? 0.5 : 1.0) * w[j];
            integ *= wspec.im.step / std::sqrt(2.0);
            // nearest quadrature sample
            const int qi = std::clamp<int>(
                static_cast<int>(std::lround((x - qgrid.lo) / qgrid.step)), 0,
                static_cast<int>(qd.coords.size()) - 1);
            worst = std::max(worst, std::abs(integ - qd.probs[std::size_t(qi)]));
        }
        return detail::bounded("wigner-marginal-consistency", worst, 1e-6);
    }));

    add(detail::guarded("wigner-unitarity", 1e-6, [&] {
        if (rho_orc.dim == 0) throw numeric_error("oracle state unavailable");
        const auto grid = wigner(rho_orc, suggest_wigner_grid(rho_orc));
        return detail::bounded("wigner-unitarity", std::abs(grid.integral() - 1.0), 1e-6);
    }));

    add(detail::guarded("eigenvalue-floor", 1e-10, [&] {
        if (rho_orc.dim == 0) throw numeric_error("oracle state unavailable");
        return detail::bounded("eigenvalue-floor", -min_eigenvalue(rho_orc), 1e-10);
    }));

    add(detail::guarded("monotone-mixing", 0.0, [&] {
        double prev = 2.0, worst_drop = 1.0;
        for (double eta : {1.0, 0.8, 0.6, 0.4, 0.2}) {
            SchemeParams p = base;
            p.eta = eta;
            p.n_det = 0;
            p.n_max = choose_truncation(p);
            const double pur = condition_via_oracle(p).purity();
            worst_drop = std::min(worst_drop, prev - pur);
            prev = pur;
        }
        CheckResult r{"monotone-mixing", worst_drop > 0.0, worst_drop, 0.0,
                      "purity strictly decreasing in eta"};
        return r;
    }));

    add(detail::guarded("limit-chain-eta-to-1", 1e-4, [&] {
        const double q = base.alpha_prime() * base.alpha_prime();
        double prev_gap = std::numeric_limits<double>::infinity();
        bool monotone = true;
        double final_gap = 0.0;
        for (int k = 1; k <= 6; ++k) {
            const auto ctx = ClosedFormContext::from(base.alpha, base.r,
                                                     1.0 - std::pow(10.0, -k));
            double gap = std::abs(mean_photons(ctx) - q) / (1.0 + q);
            gap = std::max(gap, std::abs(quad_peak_position(ctx) -
                                         std::sqrt(2.0) * base.alpha_prime()));
            gap = std::max(gap, std::abs(quad_width_sq(ctx) - 1.0));
            if (gap > prev_gap) monotone = false;
            prev_gap = gap;
            final_gap = gap;
        }
        CheckResult r{"limit-chain-eta-to-1", monotone && final_gap <= 1e-4, final_gap,
                      1e-4, "closed forms converge to coherent-state values"};
        return r;
    }));

    add(detail::guarded("sweep-path-equivalence", 1e-9, [&] {
        double worst = 0.0;
        for (double alpha : {0.0, 1.0, 3.0, 5.0})
            for (double r : {0.3, 0.9, 1.5})
                for (double eta : {0.1, 0.5, 0.9, 1.0}) {
                    SchemeParams p = base;
                    p.alpha = alpha;
                    p.r = r;
                    p.eta = eta;
                    p.n_det = 0;
                    p.n_max = choose_truncation(p);
                    const auto re = ensemble_to_density(condition_on_idler(p), p.n_max,
                                                        p.tail_tol);
                    const auto ro = condition_via_oracle(p);
                    worst = std::max(worst, trace_distance_within(re, ro, 1e-9));
                }
        return detail::bounded("sweep-path-equivalence", worst, 1e-9);
    }));

    add(detail::guarded("sweep-closed-forms", 1e-7, [&] {
        double worst = 0.0;
        for (double alpha : {0.0, 1.0, 3.0, 5.0})
            for (double r : {0.3, 0.9, 1.5})
                for (double eta : {0.1, 0.5, 0.9, 1.0}) {
                    SchemeParams p = base;
                    p.alpha = alpha;
                    p.r = r;
                    p.eta = eta;
                    p.n_det = 0;
                    p.n_max = choose_truncation(p);
                    worst = std::max(
                        worst, detail::closed_form_worst_gap(p, condition_via_oracle(p)));
                }
        return detail::bounded("sweep-closed-forms", worst, 1e-7);
    }));

    add(detail::guarded("random-path-equivalence", 1e-9, [&] {
        std::mt19937 gen(987654321u);
        auto unit = [&] { return gen() / 4294967296.0; };
        double worst = 0.0;
        for (int draw = 0; draw < 20; ++draw) {
            SchemeParams p = base;
            p.alpha = 6.0 * unit();
            p.r = 1.8 * unit();
            p.eta = 0.05 + 0.95 * unit();
            p.n_det = static_cast<int>(gen() % 3);
            if (p.r == 0.0) p.n_det = 0;
            p.n_max = choose_truncation(p);
            const auto re = ensemble_to_density(condition_on_idler(p), p.n_max, p.tail_tol);
            const auto ro = condition_via_oracle(p);
            worst = std::max(worst, trace_distance_within(re, ro, 1e-9));
        }
        return detail::bounded("random-path-equivalence", worst, 1e-9);
    }));

    return out;
}

}  // namespace opa
