#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "opa/analytic.hpp"
#include "opa/special_functions.hpp"

using cplx = std::complex<double>;

using namespace opa;

namespace {
const ClosedFormContext kFig2 = ClosedFormContext::from(5.0, 1.5, 0.1);
}

TEST_CASE("context derivation") {
    CHECK_THAT(kFig2.epsilon, Catch::Matchers::WithinAbs(0.737364024969, 1e-11));
    CHECK_THAT(kFig2.alpha_prime, Catch::Matchers::WithinAbs(2.125480174711, 1e-11));
    CHECK_THROWS_AS(ClosedFormContext::from(-1.0, 1.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(ClosedFormContext::from(1.0, 1.0, 1.5), std::invalid_argument);
}

TEST_CASE("quadrature closed form: limits and reference numbers") {
    const auto coh = ClosedFormContext::from(5.0, 1.5, 1.0);  // eps = 0
    const double ap = coh.alpha_prime;
    CHECK_THAT(quad_peak_position(coh), Catch::Matchers::WithinAbs(std::sqrt(2.0) * ap, 1e-12));
    CHECK_THAT(quad_peak_position(coh), Catch::Matchers::WithinAbs(3.005882889632, 1e-9));
    CHECK_THAT(quad_width_sq(coh), Catch::Matchers::WithinAbs(1.0, 1e-14));
    CHECK_THAT(quad_pdf(coh, std::sqrt(2.0) * ap),
               Catch::Matchers::WithinAbs(1.0 / std::sqrt(M_PI), 1e-12));

    CHECK_THAT(quad_peak_position(kFig2), Catch::Matchers::WithinAbs(11.445053897411, 1e-9));
    CHECK_THAT(quad_width_sq(kFig2), Catch::Matchers::WithinAbs(6.615102994789, 1e-9));
    // the coarse figure sometimes quoted for the width
    CHECK_THAT(quad_width_sq(kFig2), Catch::Matchers::WithinAbs(6.614, 0.01));

    // normalization by direct trapezoid
    double mass = 0.0;
    for (double x = -10.0; x <= 35.0; x += 0.01) mass += quad_pdf(kFig2, x) * 0.01;
    CHECK_THAT(mass, Catch::Matchers::WithinAbs(1.0, 1e-8));
}

TEST_CASE("photon mass function: Poisson and thermal limits") {
    const auto coh = ClosedFormContext::from(5.0, 1.5, 1.0);
    const double q = coh.q();
    const auto lf = log_factorials(64);
    for (int n : {0, 1, 4, 10, 30})
        CHECK_THAT(photon_pmf(coh, n),
                   Catch::Matchers::WithinRel(
                       std::exp(-q + n * std::log(q) - lf[std::size_t(n)]), 1e-13));

    const auto therm = ClosedFormContext::from(0.0, 1.5, 0.1);  // alpha' = 0
    const double eps = therm.epsilon;
    for (int n : {0, 1, 5, 20})
        CHECK_THAT(photon_pmf(therm, n),
                   Catch::Matchers::WithinRel((1.0 - eps) * std::pow(eps, n), 1e-12));

    // r = 0 also collapses to the Poisson branch
    const auto r0 = ClosedFormContext::from(2.0, 0.0, 0.3);
    CHECK_THAT(photon_pmf(r0, 0), Catch::Matchers::WithinRel(std::exp(-4.0), 1e-13));
}

TEST_CASE("photon mass function: normalization and mode at the reference point") {
    double s = 0.0;
    for (int n = 0; n <= 700; ++n) s += photon_pmf(kFig2, n);
    CHECK_THAT(s, Catch::Matchers::WithinAbs(1.0, 1e-10));

    int arg = 0;
    double best = 0.0;
    for (int n = 0; n <= 200; ++n) {
        const double p = photon_pmf(kFig2, n);
        if (p > best) {
            best = p;
            arg = n;
        }
    }
    CHECK(arg >= 60);
    CHECK(arg <= 80);
    // the mode itself sits at 63; the often-quoted ~70 is the flat top of
    // the curve, the mean is 68.3
    CHECK(arg == 63);
}

TEST_CASE("mean and Mandel Q") {
    const auto coh = ClosedFormContext::from(5.0, 1.5, 1.0);
    CHECK_THAT(mean_photons(coh), Catch::Matchers::WithinRel(coh.q(), 1e-14));
    REQUIRE(mandel_q(coh).has_value());
    CHECK_THAT(*mandel_q(coh), Catch::Matchers::WithinAbs(0.0, 1e-12));

    const auto therm = ClosedFormContext::from(0.0, 1.5, 0.1);
    const double eps = therm.epsilon;
    CHECK_THAT(mean_photons(therm), Catch::Matchers::WithinRel(eps / (1.0 - eps), 1e-13));
    // geometric statistics: Q equals the mean occupation eps/(1-eps)
    CHECK_THAT(*mandel_q(therm),
               Catch::Matchers::WithinRel(eps / (1.0 - eps), 1e-12));

    CHECK_THAT(mean_photons(kFig2), Catch::Matchers::WithinAbs(68.302180854710, 1e-8));
    CHECK_THAT(*mandel_q(kFig2), Catch::Matchers::WithinAbs(5.499698987012, 1e-9));

    const auto vac = ClosedFormContext::from(0.0, 0.0, 1.0);
    CHECK_FALSE(mandel_q(vac).has_value());
}

TEST_CASE("wigner closed form") {
    const auto coh = ClosedFormContext::from(5.0, 1.5, 1.0);
    CHECK_THAT(wigner_gaussian(coh, cplx(coh.alpha_prime, 0.0)),
               Catch::Matchers::WithinAbs(2.0 / M_PI, 1e-13));

    CHECK_THAT(wigner_center(kFig2).real(), Catch::Matchers::WithinAbs(8.092875221904, 1e-9));
    CHECK_THAT(wigner_peak(kFig2), Catch::Matchers::WithinAbs(0.096237318280, 1e-11));
    CHECK_THAT(wigner_gaussian(kFig2, wigner_center(kFig2)),
               Catch::Matchers::WithinRel(wigner_peak(kFig2), 1e-14));

    // phase-space normalization by direct trapezoid
    double mass = 0.0;
    const double h = 0.05;
    for (double u = -2.0; u <= 18.0; u += h)
        for (double v = -10.0; v <= 10.0; v += h)
            mass += wigner_gaussian(kFig2, cplx(u, v)) * h * h;
    CHECK_THAT(mass, Catch::Matchers::WithinAbs(1.0, 1e-6));
}

TEST_CASE("binomial-series route equals the Laguerre route") {
    const auto lf = log_factorials(128);
    for (int n : {0, 1, 5, 17, 42, 70, 100}) {
        const double a = photon_pmf(kFig2, n);
        const double b = detail::photon_pmf_binomial_series(kFig2, n, lf);
        CHECK_THAT(b, Catch::Matchers::WithinRel(a, 1e-10));
    }
}

TEST_CASE("scaling structure: quadrature mean is sqrt(2) times the center") {
    for (double alpha : {0.0, 1.0, 3.0, 5.0})
        for (double r : {0.3, 0.9, 1.5})
            for (double eta : {0.1, 0.5, 0.9, 1.0}) {
                const auto ctx = ClosedFormContext::from(alpha, r, eta);
                CHECK_THAT(quad_peak_position(ctx),
                           Catch::Matchers::WithinAbs(
                               std::sqrt(2.0) * wigner_center(ctx).real(), 1e-13));
            }
}

TEST_CASE("limit chain: closed forms converge to coherent values as eta -> 1") {
    const double ap = 5.0 / std::cosh(1.5);
    const double q = ap * ap;
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 6; ++k) {
        const auto ctx = ClosedFormContext::from(5.0, 1.5, 1.0 - std::pow(10.0, -k));
        double gap = std::abs(mean_photons(ctx) - q) / (1.0 + q);
        gap = std::max(gap, std::abs(quad_peak_position(ctx) - std::sqrt(2.0) * ap));
        gap = std::max(gap, std::abs(quad_width_sq(ctx) - 1.0));
        gap = std::max(gap, std::abs(*mandel_q(ctx)));
        CHECK(gap < prev);
        prev = gap;
    }
    CHECK(prev < 1e-4);
}
